#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "caradj/trial_data.hpp"

namespace caradj::fixtures {

/// Dataset from plain vectors; strata are 0-based and labelled "1".."K".
inline TrialDataset make_dataset(const std::vector<double>& y, const std::vector<int>& a, const std::vector<int>& b,
                                 const Eigen::MatrixXd& x = Eigen::MatrixXd()) {
  TrialDataset ds;
  ds.outcomes = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  ds.assignments = a;
  ds.strata = b;
  int K = 0;
  for (int k : b) K = std::max(K, k + 1);
  ds.coding = StratumCoding::identity(K);
  ds.covariates = x.size() == 0 ? Eigen::MatrixXd(static_cast<Eigen::Index>(y.size()), 0) : x;
  ds.validate();
  return ds;
}

inline std::string tmp_path(const std::string& name) { return std::string(CARADJ_TEST_TMP) + "/" + name; }

}  // namespace caradj::fixtures
