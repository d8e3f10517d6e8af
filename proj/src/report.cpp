#include "phrasecomp/report.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "json.hpp"
#include "phrasecomp/error.hpp"

namespace phrasecomp {
namespace {

std::string shortest(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, x);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

}  // namespace

std::string format_tsv_row(const EvalReport& report) {
  if (report.per_item.empty()) {
    throw InvalidArgument("report has no per-item results");
  }
  return fixed(report.cos_d, 3) + '\t' + shortest(report.q1) + '\t' + shortest(report.q2) +
         '\t' + shortest(report.q3) + '\t' + fixed(report.pct_le_5, 2) + '%';
}

void write_report_tsv(std::string_view model_name, const EvalReport& report,
                      std::ostream& out) {
  const std::string row = format_tsv_row(report);
  out << "model\tcos_d\tQ1\tQ2\tQ3\tpct_le_5\n" << model_name << '\t' << row << '\n';
}

void write_report_json(std::string_view model_name, std::string_view method,
                       const EvalReport& report, std::ostream& out) {
  if (report.per_item.empty()) {
    throw InvalidArgument("report has no per-item results");
  }
  nlohmann::ordered_json j;
  j["model"] = std::string(model_name);
  j["method"] = std::string(method);
  j["cos_d"] = report.cos_d;
  j["q1"] = report.q1;
  j["q2"] = report.q2;
  j["q3"] = report.q3;
  j["pct_le_5"] = report.pct_le_5;
  j["n_items"] = report.per_item.size();
  auto items = nlohmann::ordered_json::array();
  for (const auto& it : report.per_item) {
    items.push_back({{"phrase", it.phrase}, {"rank", it.rank}, {"cos_distance", it.cos_distance}});
  }
  j["per_item"] = std::move(items);
  out << j.dump(2) << '\n';
}

void write_dropout_curve_tsv(std::span<const DropoutCurvePoint> curve, std::ostream& out) {
  out << "rate\tmode\tmean_pct_le_5\n";
  for (const auto& pt : curve) {
    out << shortest(pt.rate) << '\t' << dropout_mode_name(pt.mode) << '\t'
        << fixed(pt.mean_pct_le_5, 4) << '\n';
  }
}

void emit_report(std::string_view model_name, std::string_view method,
                 const EvalReport& report, const std::string& prefix, unsigned formats) {
  if (formats & kReportJson) {
    auto out = open_out(prefix + ".json");
    write_report_json(model_name, method, report, out);
    if (!out) throw IoError("failed writing '" + prefix + ".json'");
  }
  if (formats & kReportTsv) {
    auto out = open_out(prefix + ".tsv");
    write_report_tsv(model_name, report, out);
    if (!out) throw IoError("failed writing '" + prefix + ".tsv'");
  }
}

void write_metadata_file(const std::string& path, std::string_view command,
                         const std::map<std::string, std::string>& fields) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &utc);

  nlohmann::ordered_json j;
  j["command"] = std::string(command);
  j["timestamp_utc"] = stamp;
  for (const auto& [k, v] : fields) j["parameters"][k] = v;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace phrasecomp
