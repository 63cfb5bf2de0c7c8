#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "caradj/errors.hpp"
#include "caradj/lasso.hpp"
#include "caradj/rng.hpp"
#include "caradj/trial_data.hpp"

namespace caradj {

enum class EstimatorKind { DiffInMeans, OlsCommon, OlsSpecific, LassoCommon, LassoSpecific, General };

inline const char* estimator_code(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::DiffInMeans: return "dim";
    case EstimatorKind::OlsCommon: return "ols_common";
    case EstimatorKind::OlsSpecific: return "ols_specific";
    case EstimatorKind::LassoCommon: return "lasso_common";
    case EstimatorKind::LassoSpecific: return "lasso_specific";
    case EstimatorKind::General: return "general";
  }
  return "?";
}

inline EstimatorKind parse_estimator(const std::string& s) {
  for (auto k : {EstimatorKind::DiffInMeans, EstimatorKind::OlsCommon, EstimatorKind::OlsSpecific,
                 EstimatorKind::LassoCommon, EstimatorKind::LassoSpecific})
    if (s == estimator_code(k)) return k;
  throw ConfigError("unknown estimator '" + s +
                    "' (expected dim, ols_common, ols_specific, lasso_common or lasso_specific)");
}

inline std::vector<EstimatorKind> all_estimators() {
  return {EstimatorKind::DiffInMeans, EstimatorKind::OlsCommon, EstimatorKind::OlsSpecific, EstimatorKind::LassoCommon,
          EstimatorKind::LassoSpecific};
}

enum class AdjustMode { Common, Specific };

/// Adjustment coefficients per arm: one vector shared by all strata
/// (common) or one per stratum (specific), with selection counts.
struct AdjustedVectors {
  AdjustMode mode = AdjustMode::Common;
  std::vector<Eigen::VectorXd> beta1;
  std::vector<Eigen::VectorXd> beta0;
  std::vector<int> selected1;
  std::vector<int> selected0;
  std::vector<double> lambda1;  // Lasso penalties, empty for OLS
  std::vector<double> lambda0;
  bool all_converged = true;

  static AdjustedVectors zeros(AdjustMode mode, int num_strata, Eigen::Index p) {
    AdjustedVectors v;
    v.mode = mode;
    const auto slots = static_cast<std::size_t>(mode == AdjustMode::Common ? 1 : num_strata);
    v.beta1.assign(slots, Eigen::VectorXd::Zero(p));
    v.beta0.assign(slots, Eigen::VectorXd::Zero(p));
    v.selected1.assign(slots, 0);
    v.selected0.assign(slots, 0);
    return v;
  }

  std::size_t slot(int k) const noexcept { return mode == AdjustMode::Common ? 0 : static_cast<std::size_t>(k); }
  const Eigen::VectorXd& treated(int k) const { return beta1.at(slot(k)); }
  const Eigen::VectorXd& control(int k) const { return beta0.at(slot(k)); }
  int selected(int arm, int k) const { return arm == 1 ? selected1.at(slot(k)) : selected0.at(slot(k)); }

  void validate(Eigen::Index p, int num_strata) const {
    const std::size_t slots = mode == AdjustMode::Common ? 1 : static_cast<std::size_t>(num_strata);
    if (beta1.size() != slots || beta0.size() != slots)
      throw ValidationError("adjusted vectors: expected " + std::to_string(slots) + " vector(s) per arm");
    for (std::size_t s = 0; s < slots; ++s)
      if (beta1[s].size() != p || beta0[s].size() != p)
        throw ValidationError("adjusted vectors: length differs from covariate count " + std::to_string(p));
    if (selected1.size() != slots || selected0.size() != slots)
      throw ValidationError("adjusted vectors: selection counts have the wrong shape");
  }
};

struct TreatmentEffectEstimate {
  double tau = 0.0;
  EstimatorKind kind = EstimatorKind::DiffInMeans;
  Eigen::VectorXd residuals;  // r_i(A_i) for every unit, indexed like the dataset
  std::vector<int> assignments;
  std::vector<int> strata;
  double pi = 0.5;  // pooled n1 / n
  std::vector<StratumSummary> summaries;
  std::optional<AdjustedVectors> adjustment;

  int size() const noexcept { return static_cast<int>(residuals.size()); }
};

namespace detail {

inline std::vector<StratumSummary> checked_summaries(const TrialDataset& ds) {
  auto s = stratum_summaries(ds);
  for (const auto& st : s)
    if (st.arm_empty()) {
      const int arm = st.treated_empty ? 1 : 0;
      throw DegenerateStratumError("stratum '" + ds.coding.decode(st.k) + "' has no " +
                                       (arm == 1 ? "treated" : "control") + " units",
                                   st.k, arm);
    }
  return s;
}

inline TreatmentEffectEstimate skeleton(const TrialDataset& ds, EstimatorKind kind, std::vector<StratumSummary> s) {
  TreatmentEffectEstimate e;
  e.kind = kind;
  e.assignments = ds.assignments;
  e.strata = ds.strata;
  int n1 = 0;
  for (int a : ds.assignments) n1 += a;
  e.pi = static_cast<double>(n1) / ds.size();
  e.summaries = std::move(s);
  return e;
}

}  // namespace detail

/// Stratified difference in means; residuals are the raw outcomes.
inline TreatmentEffectEstimate tau_hat(const TrialDataset& ds) {
  auto e = detail::skeleton(ds, EstimatorKind::DiffInMeans, detail::checked_summaries(ds));
  double tau = 0.0;
  for (const auto& s : e.summaries) tau += s.proportion * ((s.y_mean1 - 0.0) - (s.y_mean0 - 0.0));
  e.tau = tau;
  e.residuals = ds.outcomes;
  return e;
}

/// Regression-adjusted estimator for arbitrary adjustment vectors. Residuals
/// use the mixed vector (1 - pi_k) b_k(1) + pi_k b_k(0) with the realized
/// stratum allocation pi_k.
inline TreatmentEffectEstimate tau_gen(const TrialDataset& ds, const AdjustedVectors& adj,
                                       EstimatorKind kind = EstimatorKind::General) {
  adj.validate(ds.covariates.cols(), ds.num_strata());
  auto e = detail::skeleton(ds, kind, detail::checked_summaries(ds));
  double tau = 0.0;
  for (const auto& s : e.summaries) {
    const double adj1 = (s.x_mean1 - s.x_mean).dot(adj.treated(s.k));
    const double adj0 = (s.x_mean0 - s.x_mean).dot(adj.control(s.k));
    tau += s.proportion * ((s.y_mean1 - adj1) - (s.y_mean0 - adj0));
  }
  e.tau = tau;
  if (!std::isfinite(tau)) throw NumericError("estimate is not finite");

  std::vector<Eigen::VectorXd> mixed;
  for (const auto& s : e.summaries) mixed.push_back((1.0 - s.pi) * adj.treated(s.k) + s.pi * adj.control(s.k));
  e.residuals.resize(ds.size());
  for (int i = 0; i < ds.size(); ++i) {
    const auto k = static_cast<std::size_t>(ds.strata[static_cast<std::size_t>(i)]);
    e.residuals[i] = ds.outcomes[i] - ds.covariates.row(i).dot(mixed[k]);
  }
  e.adjustment = adj;
  return e;
}

// ---------------------------------------------------------------------------

struct OlsOptions {
  /// Regress on stratum-centered covariates instead of a single global
  /// intercept per arm (common mode only).
  bool stratum_centered = false;
};

enum class DegeneratePolicy { Fail, FallbackToCommon };

/// Small-stratum handling for the stratum-specific estimators.
struct SpecificOptions {
  int min_units = 1;  // per stratum and arm
  DegeneratePolicy policy = DegeneratePolicy::Fail;
};

enum class LambdaMode { Fixed, CrossValidation, Rate };

struct LassoOptions {
  LambdaMode mode = LambdaMode::CrossValidation;
  double lambda1 = 0.0;  // fixed mode, treated arm
  double lambda0 = 0.0;  // fixed mode, control arm
  std::vector<double> stratum_lambda1;  // fixed specific mode; empty: use lambda1
  std::vector<double> stratum_lambda0;
  double rate_constant = 1.0;
  CvConfig cv;
  StreamKey key{0};
  bool require_convergence = true;
};

struct EstimatorOptions {
  OlsOptions ols;
  LassoOptions lasso;
  SpecificOptions specific;
};

namespace detail {

inline void arm_rows(const TrialDataset& ds, int arm, std::optional<int> stratum, Eigen::MatrixXd& x,
                     Eigen::VectorXd& y) {
  std::vector<int> idx;
  for (int i = 0; i < ds.size(); ++i)
    if (ds.assignments[static_cast<std::size_t>(i)] == arm &&
        (!stratum || ds.strata[static_cast<std::size_t>(i)] == *stratum))
      idx.push_back(i);
  x.resize(static_cast<Eigen::Index>(idx.size()), ds.covariates.cols());
  y.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    x.row(static_cast<Eigen::Index>(r)) = ds.covariates.row(idx[r]);
    y[static_cast<Eigen::Index>(r)] = ds.outcomes[idx[r]];
  }
}

inline int arm_count(const TrialDataset& ds, int arm, int k) {
  int c = 0;
  for (int i = 0; i < ds.size(); ++i)
    c += ds.assignments[static_cast<std::size_t>(i)] == arm && ds.strata[static_cast<std::size_t>(i)] == k;
  return c;
}

inline double choose_lambda(const CenteredDesign& d, const LassoOptions& o, double fixed, StreamKey key) {
  switch (o.mode) {
    case LambdaMode::Fixed:
      return fixed;
    case LambdaMode::Rate:
      return lambda_rate(std::max<long>(d.m(), 2), std::max<long>(d.p(), 2), o.rate_constant);
    case LambdaMode::CrossValidation: {
      CounterRng rng(key);
      return select_lambda_cv(d, o.cv.folds, {}, rng, o.cv).lambda;
    }
  }
  return fixed;
}

inline StreamKey cv_key(const LassoOptions& o, int arm, std::optional<int> stratum) {
  auto k = o.key.child("lasso-cv").child(static_cast<std::uint64_t>(arm));
  return stratum ? k.child("stratum").child(static_cast<std::uint64_t>(*stratum)) : k.child("pooled");
}

}  // namespace detail

/// Per-arm OLS with a global intercept, shared across strata.
inline TreatmentEffectEstimate tau_ols_common(const TrialDataset& ds, const OlsOptions& opt = {}) {
  detail::checked_summaries(ds);
  const Eigen::Index p = ds.covariates.cols();
  auto adj = AdjustedVectors::zeros(AdjustMode::Common, ds.num_strata(), p);
  for (int arm : {1, 0}) {
    try {
      OlsFit f;
      if (opt.stratum_centered) {
        f = fit_ols(build_centered_design(ds, arm), AliasPolicy::Error);
      } else {
        Eigen::MatrixXd x;
        Eigen::VectorXd y;
        detail::arm_rows(ds, arm, std::nullopt, x, y);
        f = fit_ols(x, y, true, AliasPolicy::Error);
      }
      (arm == 1 ? adj.beta1 : adj.beta0)[0] = f.beta;
      (arm == 1 ? adj.selected1 : adj.selected0)[0] = static_cast<int>(p);
    } catch (const SingularDesignError& err) {
      throw SingularDesignError(std::string(err.what()) + " in arm " + std::to_string(arm) +
                                "; consider a Lasso-adjusted estimator");
    }
  }
  return tau_gen(ds, adj, EstimatorKind::OlsCommon);
}

/// Per-stratum, per-arm OLS with intercept. Covariates that are constant or
/// collinear within a stratum-arm cell are dropped (coefficient 0). The
/// selection count is the full covariate count, as for the pooled fit.
inline TreatmentEffectEstimate tau_ols_specific(const TrialDataset& ds, const SpecificOptions& spec = {}) {
  detail::checked_summaries(ds);
  const int K = ds.num_strata();
  const Eigen::Index p = ds.covariates.cols();
  auto adj = AdjustedVectors::zeros(AdjustMode::Specific, K, p);
  std::optional<AdjustedVectors> common;
  for (int k = 0; k < K; ++k)
    for (int arm : {1, 0}) {
      const auto slot = static_cast<std::size_t>(k);
      if (detail::arm_count(ds, arm, k) < spec.min_units) {
        if (spec.policy == DegeneratePolicy::Fail)
          throw DegenerateStratumError("stratum '" + ds.coding.decode(k) + "' arm " + std::to_string(arm) +
                                           " has fewer than " + std::to_string(spec.min_units) + " units",
                                       k, arm);
        if (!common) common = tau_ols_common(ds).adjustment;
        (arm == 1 ? adj.beta1 : adj.beta0)[slot] = arm == 1 ? common->beta1[0] : common->beta0[0];
        (arm == 1 ? adj.selected1 : adj.selected0)[slot] = arm == 1 ? common->selected1[0] : common->selected0[0];
        continue;
      }
      Eigen::MatrixXd x;
      Eigen::VectorXd y;
      detail::arm_rows(ds, arm, k, x, y);
      const OlsFit f = fit_ols(x, y, true, AliasPolicy::Drop);
      (arm == 1 ? adj.beta1 : adj.beta0)[slot] = f.beta;
      (arm == 1 ? adj.selected1 : adj.selected0)[slot] = static_cast<int>(p);
    }
  return tau_gen(ds, adj, EstimatorKind::OlsSpecific);
}

/// Lasso on the pooled stratum-centered design of each arm.
inline TreatmentEffectEstimate tau_lasso_common(const TrialDataset& ds, const LassoOptions& opt = {}) {
  detail::checked_summaries(ds);
  const Eigen::Index p = ds.covariates.cols();
  auto adj = AdjustedVectors::zeros(AdjustMode::Common, ds.num_strata(), p);
  adj.lambda1.assign(1, 0.0);
  adj.lambda0.assign(1, 0.0);
  for (int arm : {1, 0}) {
    const CenteredDesign d = build_centered_design(ds, arm);
    const double lambda =
        detail::choose_lambda(d, opt, arm == 1 ? opt.lambda1 : opt.lambda0, detail::cv_key(opt, arm, std::nullopt));
    const LassoFit f = fit_lasso(d, lambda, opt.cv.solver);
    if (!f.converged) {
      adj.all_converged = false;
      if (opt.require_convergence)
        throw NumericError("lasso did not converge in arm " + std::to_string(arm) + " (kkt violation " +
                           std::to_string(f.kkt_violation) + " after " + std::to_string(f.iterations) + " cycles)");
    }
    (arm == 1 ? adj.beta1 : adj.beta0)[0] = f.beta;
    (arm == 1 ? adj.selected1 : adj.selected0)[0] = f.active_count;
    (arm == 1 ? adj.lambda1 : adj.lambda0)[0] = lambda;
  }
  return tau_gen(ds, adj, EstimatorKind::LassoCommon);
}

/// Lasso on each stratum-arm cell separately.
inline TreatmentEffectEstimate tau_lasso_specific(const TrialDataset& ds, const LassoOptions& opt = {},
                                                  const SpecificOptions& spec = {}) {
  detail::checked_summaries(ds);
  const int K = ds.num_strata();
  const Eigen::Index p = ds.covariates.cols();
  auto adj = AdjustedVectors::zeros(AdjustMode::Specific, K, p);
  adj.lambda1.assign(static_cast<std::size_t>(K), 0.0);
  adj.lambda0.assign(static_cast<std::size_t>(K), 0.0);
  if (opt.mode == LambdaMode::Fixed) {
    for (const auto* v : {&opt.stratum_lambda1, &opt.stratum_lambda0})
      if (!v->empty() && v->size() != static_cast<std::size_t>(K))
        throw ValidationError("per-stratum penalties must have one entry per stratum");
  }
  std::optional<AdjustedVectors> common;
  for (int k = 0; k < K; ++k)
    for (int arm : {1, 0}) {
      const auto slot = static_cast<std::size_t>(k);
      if (detail::arm_count(ds, arm, k) < spec.min_units) {
        if (spec.policy == DegeneratePolicy::Fail)
          throw DegenerateStratumError("stratum '" + ds.coding.decode(k) + "' arm " + std::to_string(arm) +
                                           " has fewer than " + std::to_string(spec.min_units) + " units",
                                       k, arm);
        if (!common) common = tau_lasso_common(ds, opt).adjustment;
        (arm == 1 ? adj.beta1 : adj.beta0)[slot] = arm == 1 ? common->beta1[0] : common->beta0[0];
        (arm == 1 ? adj.selected1 : adj.selected0)[slot] = arm == 1 ? common->selected1[0] : common->selected0[0];
        (arm == 1 ? adj.lambda1 : adj.lambda0)[slot] = arm == 1 ? common->lambda1[0] : common->lambda0[0];
        continue;
      }
      const CenteredDesign d = build_centered_design(ds, arm, DesignScope::single(k));
      const auto& per = arm == 1 ? opt.stratum_lambda1 : opt.stratum_lambda0;
      const double fixed = per.empty() ? (arm == 1 ? opt.lambda1 : opt.lambda0) : per[slot];
      const double lambda = detail::choose_lambda(d, opt, fixed, detail::cv_key(opt, arm, k));
      const LassoFit f = fit_lasso(d, lambda, opt.cv.solver);
      if (!f.converged) {
        adj.all_converged = false;
        if (opt.require_convergence)
          throw NumericError("lasso did not converge in stratum '" + ds.coding.decode(k) + "' arm " +
                             std::to_string(arm));
      }
      (arm == 1 ? adj.beta1 : adj.beta0)[slot] = f.beta;
      (arm == 1 ? adj.selected1 : adj.selected0)[slot] = f.active_count;
      (arm == 1 ? adj.lambda1 : adj.lambda0)[slot] = lambda;
    }
  return tau_gen(ds, adj, EstimatorKind::LassoSpecific);
}

/// Dispatch by estimator kind.
inline TreatmentEffectEstimate estimate(const TrialDataset& ds, EstimatorKind kind, const EstimatorOptions& opt = {}) {
  switch (kind) {
    case EstimatorKind::DiffInMeans: return tau_hat(ds);
    case EstimatorKind::OlsCommon: return tau_ols_common(ds, opt.ols);
    case EstimatorKind::OlsSpecific: return tau_ols_specific(ds, opt.specific);
    case EstimatorKind::LassoCommon: return tau_lasso_common(ds, opt.lasso);
    case EstimatorKind::LassoSpecific: return tau_lasso_specific(ds, opt.lasso, opt.specific);
    case EstimatorKind::General: break;
  }
  throw ValidationError("the general estimator needs explicit adjustment vectors");
}

}  // namespace caradj
