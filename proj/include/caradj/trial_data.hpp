#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "caradj/errors.hpp"

namespace caradj {

/// Potential outcomes of every unit. Only simulations know these.
struct PotentialOutcomes {
  Eigen::VectorXd treated;
  Eigen::VectorXd control;
};

/// Maps arbitrary stratum labels onto contiguous indices 0..K-1 in order of
/// first appearance.
class StratumCoding {
 public:
  int encode(const std::string& label) {
    auto [it, inserted] = index_.try_emplace(label, static_cast<int>(labels_.size()));
    if (inserted) labels_.push_back(label);
    return it->second;
  }

  std::optional<int> find(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& decode(int k) const { return labels_.at(static_cast<std::size_t>(k)); }
  int size() const noexcept { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  static StratumCoding identity(int num_strata) {
    StratumCoding c;
    for (int k = 0; k < num_strata; ++k) c.encode(std::to_string(k + 1));
    return c;
  }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

/// Observed trial data (Y, A, B, X). Strata are stored as 0-based indices;
/// `coding` recovers the original labels.
struct TrialDataset {
  Eigen::VectorXd outcomes;
  std::vector<int> assignments;
  std::vector<int> strata;
  Eigen::MatrixXd covariates;
  std::vector<std::string> covariate_names;
  StratumCoding coding;
  std::optional<PotentialOutcomes> truth;

  int size() const noexcept { return static_cast<int>(outcomes.size()); }
  int num_strata() const noexcept { return coding.size(); }
  int num_covariates() const noexcept { return static_cast<int>(covariates.cols()); }

  /// Throws ValidationError when any structural invariant fails.
  void validate() const {
    const auto n = static_cast<std::size_t>(outcomes.size());
    if (assignments.size() != n || strata.size() != n || static_cast<std::size_t>(covariates.rows()) != n)
      throw ValidationError("dataset: vector lengths and covariate rows must all equal n");
    if (!covariate_names.empty() && static_cast<Eigen::Index>(covariate_names.size()) != covariates.cols())
      throw ValidationError("dataset: covariate name count does not match covariate columns");
    const int K = num_strata();
    std::vector<int> seen(static_cast<std::size_t>(K), 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (assignments[i] != 0 && assignments[i] != 1)
        throw ValidationError("dataset: assignment of unit " + std::to_string(i + 1) + " is not 0/1");
      if (strata[i] < 0 || strata[i] >= K)
        throw ValidationError("dataset: stratum of unit " + std::to_string(i + 1) + " out of range");
      seen[static_cast<std::size_t>(strata[i])] = 1;
      if (!std::isfinite(outcomes[static_cast<Eigen::Index>(i)]))
        throw ValidationError("dataset: outcome of unit " + std::to_string(i + 1) + " is not finite");
    }
    for (int k = 0; k < K; ++k)
      if (!seen[static_cast<std::size_t>(k)])
        throw ValidationError("dataset: stratum '" + coding.decode(k) + "' has no units");
    if (!covariates.allFinite()) throw ValidationError("dataset: covariates contain non-finite values");
    if (truth) {
      if (truth->treated.size() != outcomes.size() || truth->control.size() != outcomes.size())
        throw ValidationError("dataset: potential outcome lengths must equal n");
      for (Eigen::Index i = 0; i < outcomes.size(); ++i) {
        const double expected = assignments[static_cast<std::size_t>(i)] ? truth->treated[i] : truth->control[i];
        if (outcomes[i] != expected)
          throw ValidationError("dataset: observed outcome of unit " + std::to_string(i + 1) +
                                " differs from its revealed potential outcome");
      }
    }
  }
};

/// Per-stratum counts, proportions and arm-wise means.
struct StratumSummary {
  int k = 0;
  int n = 0;
  int n1 = 0;
  int n0 = 0;
  double proportion = 0.0;  // n_[k] / n
  double pi = 0.0;          // n_[k]1 / n_[k]
  double y_mean1 = 0.0;
  double y_mean0 = 0.0;
  Eigen::VectorXd x_mean1;
  Eigen::VectorXd x_mean0;
  Eigen::VectorXd x_mean;
  bool treated_empty = false;
  bool control_empty = false;

  bool arm_empty() const noexcept { return treated_empty || control_empty; }
};

inline std::vector<StratumSummary> stratum_summaries(const TrialDataset& ds) {
  const int K = ds.num_strata();
  const int n = ds.size();
  const Eigen::Index p = ds.covariates.cols();
  std::vector<StratumSummary> out(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    auto& s = out[static_cast<std::size_t>(k)];
    s.k = k;
    s.x_mean1 = Eigen::VectorXd::Zero(p);
    s.x_mean0 = Eigen::VectorXd::Zero(p);
    s.x_mean = Eigen::VectorXd::Zero(p);
  }
  for (int i = 0; i < n; ++i) {
    auto& s = out[static_cast<std::size_t>(ds.strata[static_cast<std::size_t>(i)])];
    ++s.n;
    if (ds.assignments[static_cast<std::size_t>(i)] == 1) {
      ++s.n1;
      s.y_mean1 += ds.outcomes[i];
      s.x_mean1 += ds.covariates.row(i).transpose();
    } else {
      ++s.n0;
      s.y_mean0 += ds.outcomes[i];
      s.x_mean0 += ds.covariates.row(i).transpose();
    }
  }
  for (auto& s : out) {
    s.proportion = static_cast<double>(s.n) / static_cast<double>(n);
    s.pi = s.n > 0 ? static_cast<double>(s.n1) / static_cast<double>(s.n) : 0.0;
    s.x_mean = (s.x_mean1 + s.x_mean0) / static_cast<double>(s.n);
    s.treated_empty = s.n1 == 0;
    s.control_empty = s.n0 == 0;
    if (s.n1 > 0) {
      s.y_mean1 /= s.n1;
      s.x_mean1 /= s.n1;
    }
    if (s.n0 > 0) {
      s.y_mean0 /= s.n0;
      s.x_mean0 /= s.n0;
    }
  }
  return out;
}

/// Observed outcomes Y_i = A_i Y_i(1) + (1 - A_i) Y_i(0).
inline Eigen::VectorXd reveal_outcomes(const PotentialOutcomes& po, const std::vector<int>& assignments) {
  Eigen::VectorXd y(po.treated.size());
  for (Eigen::Index i = 0; i < y.size(); ++i)
    y[i] = assignments[static_cast<std::size_t>(i)] ? po.treated[i] : po.control[i];
  return y;
}

/// Copy of `ds` restricted to the given covariate columns.
inline TrialDataset select_covariates(const TrialDataset& ds, const std::vector<int>& columns) {
  TrialDataset out;
  out.outcomes = ds.outcomes;
  out.assignments = ds.assignments;
  out.strata = ds.strata;
  out.coding = ds.coding;
  out.truth = ds.truth;
  out.covariates.resize(ds.covariates.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    out.covariates.col(static_cast<Eigen::Index>(j)) = ds.covariates.col(columns[j]);
    if (!ds.covariate_names.empty()) out.covariate_names.push_back(ds.covariate_names[static_cast<std::size_t>(columns[j])]);
  }
  return out;
}

}  // namespace caradj
