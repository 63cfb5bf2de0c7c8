#include <gtest/gtest.h>

#include <nlohmann/json.hpp>
#include <sstream>

#include "caradj/harness.hpp"

using namespace caradj;

namespace {

HarnessConfig small_config(ModelId id = ModelId::Model1) {
  HarnessConfig c;
  c.model = ModelSpec::of(id);
  c.model.p = 20;
  c.n = 120;
  c.reps = 6;
  c.seed = 99;
  return c;
}

// Markdown table -> CSV text by dropping the alignment row and the pipes.
std::string markdown_to_csv(const std::string& md) {
  std::istringstream in(md);
  std::string line, out;
  int lineno = 0;
  while (std::getline(in, line)) {
    if (lineno++ == 1) continue;
    std::string row;
    std::istringstream cells(line.substr(1, line.size() - 2));
    std::string cell;
    while (std::getline(cells, cell, '|')) {
      const auto b = cell.find_first_not_of(' ');
      const auto e = cell.find_last_not_of(' ');
      row += (row.empty() ? "" : ",") + cell.substr(b, e - b + 1);
    }
    out += row + "\n";
  }
  return out;
}

}  // namespace

TEST(Harness, SingleReplicationIsRepeatable) {
  auto c = small_config();
  c.reps = 1;
  const auto a = emit_report(run_replications(c), ReportFormat::Json);
  EXPECT_EQ(a, emit_report(run_replications(c), ReportFormat::Json));
  const auto rep = run_replications(c);
  ASSERT_EQ(rep.rows.size(), 5u);
  EXPECT_EQ(rep.rows[0].sd, 0.0);
}

TEST(Harness, ThreadCountDoesNotChangeReport) {
  auto c = small_config(ModelId::Model3);
  c.n = 200;
  const auto one = emit_report(run_replications(c), ReportFormat::Json);
  c.threads = 4;
  EXPECT_EQ(emit_report(run_replications(c), ReportFormat::Json), one);
}

TEST(Harness, RowsFollowRequestedEstimators) {
  auto c = small_config();
  c.estimators = {EstimatorKind::LassoSpecific, EstimatorKind::DiffInMeans};
  const auto rep = run_replications(c);
  ASSERT_EQ(rep.rows.size(), 2u);
  EXPECT_EQ(rep.rows[0].estimator, EstimatorKind::LassoSpecific);
  for (const auto& r : rep.rows) {
    EXPECT_GE(r.sd, 0.0);
    EXPECT_GE(r.cp_unadj, 0.0);
    EXPECT_LE(r.cp_unadj, 1.0);
    EXPECT_EQ(r.successes + r.failures, c.reps);
    EXPECT_EQ(r.true_tau, 0.0);
  }
}

TEST(Harness, SeedChangesResults) {
  auto c = small_config();
  const auto a = run_replications(c);
  c.seed = 100;
  EXPECT_NE(a.rows[0].bias, run_replications(c).rows[0].bias);
}

TEST(Harness, EmptyEstimatorSetGivesHeaderOnly) {
  auto c = small_config();
  c.estimators.clear();
  const auto rep = run_replications(c);
  EXPECT_EQ(emit_report(rep, ReportFormat::Csv), "Model,Estimator,Bias,SD,SE-unadj,SE-adj,CP-unadj,CP-adj,Failures\n");
  const auto md = emit_report(rep, ReportFormat::Markdown);
  EXPECT_EQ(std::count(md.begin(), md.end(), '\n'), 2);
}

TEST(Harness, MarkdownParsesBackToCsvValues) {
  const auto rep = run_replications(small_config());
  std::istringstream a(markdown_to_csv(emit_report(rep, ReportFormat::Markdown)));
  std::istringstream b(emit_report(rep, ReportFormat::Csv));
  const auto ta = parse_csv(a), tb = parse_csv(b);
  EXPECT_EQ(ta.header, report_columns());
  EXPECT_EQ(ta.header, tb.header);
  EXPECT_EQ(ta.rows, tb.rows);
  ASSERT_EQ(ta.rows.size(), 5u);
  for (const auto& r : ta.rows)
    for (std::size_t j = 2; j + 1 < r.size(); ++j)
      if (r[j] != "NA") EXPECT_NO_THROW(parse_number(r[j], 1, "x"));
}

TEST(Harness, JsonCarriesSchemaAndFullPrecision) {
  const auto rep = run_replications(small_config());
  const auto j = nlohmann::json::parse(emit_report(rep, ReportFormat::Json));
  EXPECT_EQ(j["schema_version"], kReportSchemaVersion);
  EXPECT_EQ(j["reps"], 6);
  EXPECT_EQ(j["config"]["model"], "Model 1");
  ASSERT_EQ(j["rows"].size(), 5u);
  EXPECT_EQ(j["rows"][0]["sd"].get<double>(), rep.rows[0].sd);
  EXPECT_EQ(j["rows"][4]["estimator"], "lasso_specific");
}

TEST(Harness, FailuresAreCountedAndExcluded) {
  // Twelve strata with forty units leave some stratum arms empty.
  auto c = small_config(ModelId::Model3);
  c.n = 40;
  c.reps = 10;
  c.estimators = {EstimatorKind::DiffInMeans};
  const auto rep = run_replications(c);
  EXPECT_GT(rep.rows[0].failures, 0);
  EXPECT_EQ(rep.rows[0].successes + rep.rows[0].failures, 10);
  if (rep.rows[0].successes == 0) EXPECT_EQ(emit_report(rep, ReportFormat::Csv).find("NA") != std::string::npos, true);
}

TEST(Harness, ConfigValidation) {
  auto c = small_config();
  c.scheme.pi = 2.0 / 3.0;
  EXPECT_THROW(run_replications(c), ConfigError);
  c = small_config();
  c.reps = 0;
  EXPECT_THROW(run_replications(c), ConfigError);
  EXPECT_THROW(parse_report_format("xml"), ConfigError);
}

TEST(Harness, TableFormattingRules) {
  ReplicationReport rep;
  ReportRow r;
  r.model = "Model 1";
  r.bias = -0.001;
  r.sd = 5.476;
  r.se_adj = std::numeric_limits<double>::quiet_NaN();
  rep.rows.push_back(r);
  const auto csv = emit_report(rep, ReportFormat::Csv);
  EXPECT_NE(csv.find("Model 1,dim,0.00,5.48,0.00,NA,"), std::string::npos);
  const auto j = nlohmann::json::parse(emit_report(rep, ReportFormat::Json));
  EXPECT_TRUE(j["rows"][0]["se_adj"].is_null());
}
