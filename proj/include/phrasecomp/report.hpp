#pragma once

#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "phrasecomp/rank_eval.hpp"

namespace phrasecomp {

// "cos_d\tQ1\tQ2\tQ3\tpct" with cos-d to 3 decimals, quartiles in shortest
// form and the percentage to 2 decimals plus '%', e.g.
// "0.310\t1\t3\t11\t65.21%". Throws on a report without items.
std::string format_tsv_row(const EvalReport& report);

// Header line plus one row prefixed by the model name.
void write_report_tsv(std::string_view model_name, const EvalReport& report,
                      std::ostream& out);

// Aggregates and per-item (phrase, rank, cos_distance) detail.
void write_report_json(std::string_view model_name, std::string_view method,
                       const EvalReport& report, std::ostream& out);

// "rate\tmode\tmean_pct_le_5", one line per point.
void write_dropout_curve_tsv(std::span<const DropoutCurvePoint> curve, std::ostream& out);

enum ReportFormat : unsigned { kReportJson = 1u, kReportTsv = 2u };

// Writes <prefix>.json and/or <prefix>.tsv. Throws IoError when a file
// cannot be written.
void emit_report(std::string_view model_name, std::string_view method,
                 const EvalReport& report, const std::string& prefix,
                 unsigned formats = kReportJson | kReportTsv);

// Run metadata (command, parameters, UTC wall-clock time) kept apart from the
// deterministic outputs.
void write_metadata_file(const std::string& path, std::string_view command,
                         const std::map<std::string, std::string>& fields);

}  // namespace phrasecomp
