#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "phrasecomp/error.hpp"
#include "phrasecomp/report.hpp"
#include "test_util.hpp"

using namespace phrasecomp;

namespace {

EvalReport sample() {
  EvalReport r;
  r.cos_d = 0.31;
  r.q1 = 1;
  r.q2 = 3;
  r.q3 = 11;
  r.pct_le_5 = 65.21;
  r.per_item = {{"a_b", 1, 0.1}, {"c_d", 11, 0.52}};
  return r;
}

}  // namespace

TEST(Report, TsvRowFormat) {
  EXPECT_EQ(format_tsv_row(sample()), "0.310\t1\t3\t11\t65.21%");
  auto r = sample();
  r.q2 = 2.5;
  r.pct_le_5 = 100.0;
  EXPECT_EQ(format_tsv_row(r), "0.310\t1\t2.5\t11\t100.00%");
}

TEST(Report, TsvFileHasHeaderAndNamedRow) {
  std::ostringstream out;
  write_report_tsv("transweight", sample(), out);
  EXPECT_EQ(out.str(), "model\tcos_d\tQ1\tQ2\tQ3\tpct_le_5\ntransweight\t0.310\t1\t3\t11\t65.21%\n");
}

TEST(Report, EmptyReportIsAnError) {
  auto r = sample();
  r.per_item.clear();
  EXPECT_THROW(format_tsv_row(r), InvalidArgument);
}

TEST(Report, JsonCarriesAggregatesAndItems) {
  std::ostringstream out;
  write_report_json("matrix", "corrected", sample(), out);
  const auto j = nlohmann::json::parse(out.str());
  EXPECT_EQ(j["model"], "matrix");
  EXPECT_EQ(j["method"], "corrected");
  EXPECT_DOUBLE_EQ(j["cos_d"].get<double>(), 0.31);
  EXPECT_EQ(j["per_item"].size(), 2u);
  EXPECT_EQ(j["per_item"][1]["rank"], 11);
}

TEST(Report, OutputBytesAreDeterministic) {
  std::ostringstream a, b;
  write_report_json("m", "corrected", sample(), a);
  write_report_json("m", "corrected", sample(), b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Report, DropoutCurveTsv) {
  const std::vector<DropoutCurvePoint> c{{0.0, DropoutMode::kFullTransformation, 91.5},
                                         {0.25, DropoutMode::kPerParameter, 80.125}};
  std::ostringstream out;
  write_dropout_curve_tsv(c, out);
  EXPECT_EQ(out.str(),
            "rate\tmode\tmean_pct_le_5\n0\tfull_transformation\t91.5000\n"
            "0.25\tper_parameter\t80.1250\n");
}

TEST(Report, EmitWritesRequestedFiles) {
  const auto dir = testutil::scratch_dir("report_emit");
  emit_report("m", "original", sample(), (dir / "r").string(), kReportTsv);
  EXPECT_TRUE(std::filesystem::exists(dir / "r.tsv"));
  EXPECT_FALSE(std::filesystem::exists(dir / "r.json"));
  EXPECT_THROW(emit_report("m", "original", sample(), (dir / "missing" / "r").string()), IoError);
}
