#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "caradj/csv.hpp"
#include "caradj/models.hpp"
#include "caradj/randomization.hpp"
#include "support.hpp"

using namespace caradj;

namespace {

CsvTable table_of(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in);
}

const ColumnSchema kPlain{"Y", "A", "B", {}};

}  // namespace

TEST(TrialData, MinimalFile) {
  const auto ds = dataset_from_table(table_of("Y,A,B\n1,1,1\n2,0,1\n3,1,2\n4,0,2\n"), kPlain);
  EXPECT_EQ(ds.size(), 4);
  EXPECT_EQ(ds.num_strata(), 2);
  EXPECT_EQ(ds.num_covariates(), 0);
  EXPECT_EQ(ds.strata, (std::vector<int>{0, 0, 1, 1}));
  EXPECT_EQ(ds.assignments, (std::vector<int>{1, 0, 1, 0}));
  EXPECT_EQ(ds.coding.decode(1), "2");
}

TEST(TrialData, BadAssignmentNamesRow) {
  try {
    dataset_from_table(table_of("Y,A,B\n1,1,1\n2,0,1\n3,2,2\n4,0,2\n"), kPlain);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3u);
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
  }
}

TEST(TrialData, MissingColumnAndBadCells) {
  EXPECT_THROW(dataset_from_table(table_of("Y,A\n1,1\n"), kPlain), SchemaError);
  EXPECT_THROW(dataset_from_table(table_of("Y,A,B\n1,1\n"), kPlain), ParseError);
  EXPECT_THROW(dataset_from_table(table_of("Y,A,B\nx,1,1\n"), kPlain), ParseError);
  EXPECT_THROW(dataset_from_table(table_of("Y,A,B\n"), kPlain), ValidationError);
  EXPECT_THROW(read_csv_file("/nonexistent/file.csv"), SchemaError);
}

TEST(TrialData, QuotedCellsAndLabels) {
  const auto ds = dataset_from_table(table_of("Y,A,B\n1,1,\"a,b\"\n2,0,\"a,b\"\n"), kPlain);
  EXPECT_EQ(ds.num_strata(), 1);
  EXPECT_EQ(ds.coding.decode(0), "a,b");
}

TEST(TrialData, ExportRoundTripsBitExactly) {
  const auto pop = generate(ModelSpec::model1(), 150, StreamKey(11));
  RandomizationScheme sr;
  const auto ds = reveal(pop, assign_all(sr, pop.units(), StreamKey(11).child("assign")), CovariateSet::Full);
  ColumnSchema schema{"y", "a", "stratum", ds.covariate_names};
  std::stringstream buf;
  write_csv(buf, ds, schema);
  const auto back = dataset_from_table(parse_csv(buf), schema);
  ASSERT_EQ(back.size(), ds.size());
  for (int i = 0; i < ds.size(); ++i) EXPECT_EQ(back.outcomes[i], ds.outcomes[i]);
  EXPECT_EQ(back.assignments, ds.assignments);
  EXPECT_TRUE((back.covariates.array() == ds.covariates.array()).all());
  for (int i = 0; i < ds.size(); ++i)
    EXPECT_EQ(back.coding.decode(back.strata[i]), ds.coding.decode(ds.strata[i]));
}

TEST(TrialData, ValidateCatchesStructure) {
  auto ds = fixtures::make_dataset({1, 2}, {1, 0}, {0, 0});
  ds.assignments[1] = 3;
  EXPECT_THROW(ds.validate(), ValidationError);
  ds.assignments[1] = 0;
  ds.outcomes[0] = NAN;
  EXPECT_THROW(ds.validate(), ValidationError);
  ds.outcomes[0] = 1;
  ds.truth = PotentialOutcomes{Eigen::Vector2d(1, 9), Eigen::Vector2d(9, 3)};
  EXPECT_THROW(ds.validate(), ValidationError);  // observed 2 is not Y(0)=3
}

TEST(StratumSummary, SmallExample) {
  const auto ds = fixtures::make_dataset({2, 4, 6}, {1, 0, 1}, {0, 0, 1});
  const auto s = stratum_summaries(ds);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_DOUBLE_EQ(s[0].pi, 0.5);
  EXPECT_DOUBLE_EQ(s[0].y_mean1, 2.0);
  EXPECT_DOUBLE_EQ(s[0].y_mean0, 4.0);
  EXPECT_FALSE(s[0].arm_empty());
  EXPECT_TRUE(s[1].control_empty);
  EXPECT_FALSE(s[1].treated_empty);
  EXPECT_DOUBLE_EQ(s[1].proportion, 1.0 / 3.0);
}

TEST(StratumSummary, AllTreated) {
  const auto s = stratum_summaries(fixtures::make_dataset({1, 2, 3}, {1, 1, 1}, {0, 0, 0}));
  EXPECT_DOUBLE_EQ(s[0].pi, 1.0);
  EXPECT_TRUE(s[0].control_empty);
}

TEST(StratumSummary, ModelThreeCellProportions) {
  // Strata are the product of a uniform 4-level factor and a 0.3/0.6/0.1 factor.
  const int n = 500;
  const auto pop = generate(ModelSpec::model3(), n, StreamKey(5));
  std::map<std::string, int> counts;
  for (int i = 0; i < n; ++i) ++counts[pop.coding.decode(pop.strata[i])];
  const double second[] = {0.3, 0.6, 0.1};
  for (int l2 = 1; l2 <= 4; ++l2)
    for (int l4 = 1; l4 <= 3; ++l4) {
      const double p = 0.25 * second[l4 - 1];
      const double se = std::sqrt(p * (1 - p) / n);
      const std::string label = std::to_string(l2) + "|" + std::to_string(l4);
      EXPECT_NEAR(counts[label] / static_cast<double>(n), p, 5 * se) << label;
    }
}

TEST(TrialData, SelectCovariates) {
  Eigen::MatrixXd x(2, 3);
  x << 1, 2, 3, 4, 5, 6;
  auto ds = fixtures::make_dataset({1, 2}, {1, 0}, {0, 0}, x);
  ds.covariate_names = {"a", "b", "c"};
  const auto sub = select_covariates(ds, {2, 0});
  EXPECT_EQ(sub.covariate_names, (std::vector<std::string>{"c", "a"}));
  EXPECT_EQ(sub.covariates(1, 0), 6);
  EXPECT_EQ(sub.covariates(1, 1), 4);
}
