#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "caradj/errors.hpp"
#include "caradj/randomization.hpp"
#include "caradj/rng.hpp"
#include "caradj/trial_data.hpp"

namespace caradj {

enum class ModelId { Model1, Model2, Model3, Custom };

inline ModelId parse_model(const std::string& s) {
  if (s == "1" || s == "model1") return ModelId::Model1;
  if (s == "2" || s == "model2") return ModelId::Model2;
  if (s == "3" || s == "model3") return ModelId::Model3;
  throw ConfigError("unknown model '" + s + "' (expected 1, 2 or 3)");
}

inline std::string model_name(ModelId id) {
  switch (id) {
    case ModelId::Model1: return "Model 1";
    case ModelId::Model2: return "Model 2";
    case ModelId::Model3: return "Model 3";
    case ModelId::Custom: return "Custom";
  }
  return "?";
}

/// User-supplied population. `draw_base` fills the base covariate row;
/// `mean` and `scale` give g_a(x) and sigma_a(x); `stratum` and `margins`
/// map a base row to its stratum label and minimization factor levels.
struct CustomModel {
  int base_count = 1;
  std::function<void(CounterRng&, Eigen::Ref<Eigen::VectorXd>)> draw_base;
  std::function<double(const Eigen::VectorXd&, int)> mean;
  std::function<double(const Eigen::VectorXd&, int)> scale;
  std::function<std::string(const Eigen::VectorXd&)> stratum;
  std::function<std::vector<int>(const Eigen::VectorXd&)> margins;
};

struct ModelSpec {
  ModelId id = ModelId::Model1;
  double mu0 = 0.0;
  double mu1 = 0.0;
  int p = 100;  // total covariate dimension seen by Lasso (base plus extra)
  double pi = 0.5;
  CustomModel custom;

  int base_count() const {
    switch (id) {
      case ModelId::Model1: return 2;
      case ModelId::Model2: return 4;
      case ModelId::Model3: return 5;
      case ModelId::Custom: return custom.base_count;
    }
    return 0;
  }

  /// Base columns that define the strata.
  std::vector<int> stratification_columns() const {
    switch (id) {
      case ModelId::Model1: return {0};
      case ModelId::Model2: return {1, 3};  // through the threshold of X2, and X4
      case ModelId::Model3: return {1, 3};
      case ModelId::Custom: return {};
    }
    return {};
  }

  void validate() const {
    if (base_count() < 1) throw ConfigError("model needs at least one base covariate");
    if (p < base_count())
      throw ConfigError("covariate dimension p=" + std::to_string(p) + " is below the base covariate count " +
                        std::to_string(base_count()));
    if (!(pi > 0.0 && pi < 1.0)) throw ConfigError("allocation pi must lie in (0, 1)");
    if (id == ModelId::Custom && (!custom.draw_base || !custom.mean || !custom.scale || !custom.stratum))
      throw ConfigError("custom model needs draw_base, mean, scale and stratum hooks");
  }

  static ModelSpec of(ModelId id) {
    ModelSpec m;
    m.id = id;
    return m;
  }
  static ModelSpec model1() { return of(ModelId::Model1); }
  static ModelSpec model2() { return of(ModelId::Model2); }
  static ModelSpec model3() { return of(ModelId::Model3); }
};

namespace detail {

inline double threshold_level(double v, double cut) { return v > cut ? 2.0 : 1.0; }

inline void draw_base(const ModelSpec& m, CounterRng& rng, Eigen::Ref<Eigen::VectorXd> x) {
  switch (m.id) {
    case ModelId::Model1:
      x[0] = rng.uniform() < 0.4 ? 1.0 : 2.0;
      x[1] = rng.uniform(-2.0, 2.0);
      return;
    case ModelId::Model2:
      x[0] = rng.beta(3.0, 4.0);
      x[1] = rng.uniform(-2.0, 2.0);
      x[2] = x[0] * x[1];
      x[3] = rng.uniform() < 0.6 ? 3.0 : 5.0;
      return;
    case ModelId::Model3: {
      x[0] = rng.beta(2.0, 2.0);
      x[1] = static_cast<double>(rng.below(4) + 1);
      x[2] = rng.uniform(-2.0, 2.0);
      const double u = rng.uniform();
      x[3] = u < 0.3 ? 1.0 : (u < 0.9 ? 2.0 : 3.0);
      x[4] = rng.normal();
      return;
    }
    case ModelId::Custom:
      m.custom.draw_base(rng, x);
      return;
  }
}

inline double mean_part(const ModelSpec& m, const Eigen::VectorXd& x, int arm) {
  switch (m.id) {
    case ModelId::Model1:
      return 10.0 * x[0] + 20.0 * x[0] * x[1];
    case ModelId::Model2:
      if (arm == 1) return 15.0 * std::log(x[0]) * x[3];
      return 15.0 * x[0] + 7.0 * x[1] + 5.0 * x[2] + 6.0 * x[3];
    case ModelId::Model3:
      return 2.0 * x[0] + 8.0 * x[1] + 10.0 * x[2] + 3.0 * x[3] + 6.0 * x[4];
    case ModelId::Custom:
      return m.custom.mean(x, arm);
  }
  return 0.0;
}

inline double scale_part(const ModelSpec& m, const Eigen::VectorXd& x, int arm) {
  switch (m.id) {
    case ModelId::Model1:
      return arm == 1 ? 5.0 : 3.0;
    case ModelId::Model2:
      return arm == 1 ? 2.0 * threshold_level(x[1], 1.0) : threshold_level(x[2], 0.0);
    case ModelId::Model3:
      return arm == 1 ? 3.0 : 1.0;
    case ModelId::Custom:
      return m.custom.scale(x, arm);
  }
  return 0.0;
}

inline std::vector<int> margin_levels(const ModelSpec& m, const Eigen::VectorXd& x) {
  switch (m.id) {
    case ModelId::Model1:
      return {static_cast<int>(x[0])};
    case ModelId::Model2:
      return {static_cast<int>(threshold_level(x[1], 1.0)), static_cast<int>(x[3])};
    case ModelId::Model3:
      return {static_cast<int>(x[1]), static_cast<int>(x[3])};
    case ModelId::Custom:
      return m.custom.margins ? m.custom.margins(x) : std::vector<int>{};
  }
  return {};
}

inline std::string stratum_label(const ModelSpec& m, const Eigen::VectorXd& x) {
  if (m.id == ModelId::Custom) return m.custom.stratum(x);
  std::string s;
  for (int level : margin_levels(m, x)) s += (s.empty() ? "" : "|") + std::to_string(level);
  return s;
}

// Model 2 extras are Gaussian with corr 0.5^|i-j|, built as a stationary AR(1).
inline void draw_extra(const ModelSpec& m, CounterRng& rng, Eigen::RowVectorXd& out) {
  if (m.id == ModelId::Model2) {
    const double innov = std::sqrt(0.75);
    double z = 0.0;
    for (Eigen::Index j = 0; j < out.size(); ++j) {
      z = j == 0 ? rng.normal() : 0.5 * z + innov * rng.normal();
      out[j] = z;
    }
    return;
  }
  for (Eigen::Index j = 0; j < out.size(); ++j) out[j] = rng.normal();
}

}  // namespace detail

/// Y(a) = mu_a + g_a(x) + sigma_a(x) * eps for a base covariate row.
inline double potential_outcome(const ModelSpec& m, const Eigen::VectorXd& base, int arm, double eps) {
  const double mu = arm == 1 ? m.mu1 : m.mu0;
  return mu + detail::mean_part(m, base, arm) + detail::scale_part(m, base, arm) * eps;
}

/// A simulated sample before assignment. Potential outcomes stay here and
/// are never copied into an analysis dataset.
struct Population {
  Eigen::MatrixXd covariates;  // base columns first, then extra columns
  int base_count = 0;
  std::vector<std::string> names;
  std::vector<int> strata;
  StratumCoding coding;
  std::vector<std::vector<int>> margins;
  PotentialOutcomes truth;

  int size() const noexcept { return static_cast<int>(covariates.rows()); }

  std::vector<Unit> units() const {
    std::vector<Unit> u(strata.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = {strata[i], margins[i]};
    return u;
  }
};

enum class CovariateSet { Base, Full };

/// Observed dataset for the given assignments.
inline TrialDataset reveal(const Population& pop, const std::vector<int>& assignments, CovariateSet set) {
  if (assignments.size() != static_cast<std::size_t>(pop.size()))
    throw ValidationError("assignment vector length differs from the population size");
  TrialDataset ds;
  ds.outcomes = reveal_outcomes(pop.truth, assignments);
  ds.assignments = assignments;
  ds.strata = pop.strata;
  ds.coding = pop.coding;
  const Eigen::Index cols = set == CovariateSet::Base ? pop.base_count : pop.covariates.cols();
  ds.covariates = pop.covariates.leftCols(cols);
  ds.covariate_names.assign(pop.names.begin(), pop.names.begin() + cols);
  return ds;
}

/// Draws n units. Unit i uses only stream key.child(i), so any prefix of a
/// larger draw is identical to a smaller one.
inline Population generate(const ModelSpec& m, int n, StreamKey key) {
  m.validate();
  if (n < 2) throw ValidationError("population needs at least 2 units");
  const int b = m.base_count();
  Population pop;
  pop.base_count = b;
  pop.covariates.resize(n, m.p);
  pop.truth.treated.resize(n);
  pop.truth.control.resize(n);
  pop.strata.resize(static_cast<std::size_t>(n));
  pop.margins.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < m.p; ++j) pop.names.push_back((j < b ? "x" : "z") + std::to_string(j < b ? j + 1 : j - b + 1));
  Eigen::VectorXd x(b);
  Eigen::RowVectorXd extra(m.p - b);
  for (int i = 0; i < n; ++i) {
    CounterRng rng(key.child(static_cast<std::uint64_t>(i)));
    detail::draw_base(m, rng, x);
    const double e1 = rng.normal();
    const double e0 = rng.normal();
    pop.truth.treated[i] = potential_outcome(m, x, 1, e1);
    pop.truth.control[i] = potential_outcome(m, x, 0, e0);
    pop.covariates.row(i).head(b) = x.transpose();
    detail::draw_extra(m, rng, extra);
    pop.covariates.row(i).tail(m.p - b) = extra;
    pop.margins[static_cast<std::size_t>(i)] = detail::margin_levels(m, x);
    pop.strata[static_cast<std::size_t>(i)] = pop.coding.encode(detail::stratum_label(m, x));
  }
  return pop;
}

inline double digamma(double x) {
  double r = 0.0;
  while (x < 10.0) {
    r -= 1.0 / x;
    x += 1.0;
  }
  const double f = 1.0 / (x * x);
  return r + std::log(x) - 0.5 / x -
         f * (1.0 / 12 - f * (1.0 / 120 - f * (1.0 / 252 - f * (1.0 / 240 - f * (1.0 / 132)))));
}

struct MonteCarloValue {
  double value = 0.0;
  double se = 0.0;
};

/// Mean of g_1(X) - g_0(X) + mu_1 - mu_0 over `draws` independent units.
/// For Model 2 the two-point X4 is integrated exactly inside each draw.
inline MonteCarloValue monte_carlo_tau(const ModelSpec& m, long draws, StreamKey key) {
  m.validate();
  if (draws < 2) throw ValidationError("Monte Carlo needs at least 2 draws");
  const int b = m.base_count();
  Eigen::VectorXd x(b);
  // Welford accumulation keeps the variance stable over 10^7 draws.
  double mean = 0.0, m2 = 0.0;
  for (long i = 0; i < draws; ++i) {
    CounterRng rng(key.child(static_cast<std::uint64_t>(i)));
    detail::draw_base(m, rng, x);
    double d = m.mu1 - m.mu0;
    if (m.id == ModelId::Model2) {
      // X4 is independent of the rest and takes two values; summing over
      // them exactly cuts the variance enough for SE < 0.01 at 10^7 draws.
      for (auto [level, prob] : {std::pair{3.0, 0.6}, std::pair{5.0, 0.4}}) {
        x[3] = level;
        d += prob * (detail::mean_part(m, x, 1) - detail::mean_part(m, x, 0));
      }
    } else {
      d += detail::mean_part(m, x, 1) - detail::mean_part(m, x, 0);
    }
    const double delta = d - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (d - mean);
  }
  return {mean, std::sqrt(m2 / static_cast<double>(draws - 1) / static_cast<double>(draws))};
}

/// Average treatment effect of the population law.
inline double true_tau(const ModelSpec& m) {
  switch (m.id) {
    case ModelId::Model1:
    case ModelId::Model3:
      return m.mu1 - m.mu0;
    case ModelId::Model2: {
      // E log X1 for Beta(3, 4) is digamma(3) - digamma(7); E X4 = 3.8, E X1 = 3/7, E X2 = E X3 = 0.
      const double elog = digamma(3.0) - digamma(7.0);
      return m.mu1 - m.mu0 + 15.0 * elog * 3.8 - (15.0 * 3.0 / 7.0 + 6.0 * 3.8);
    }
    case ModelId::Custom:
      return monte_carlo_tau(m, 10'000'000, StreamKey(0x7a75ULL)).value;
  }
  return 0.0;
}

}  // namespace caradj
