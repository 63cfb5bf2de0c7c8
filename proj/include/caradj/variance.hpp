#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "caradj/errors.hpp"
#include "caradj/estimators.hpp"

namespace caradj {

/// Residual moments of one stratum-arm cell.
struct CellMoments {
  int n = 0;
  double mean = 0.0;
  double ss = 0.0;  // sum of squared deviations from the cell mean
};

struct VarianceEstimate {
  double varsigma_r = 0.0;   // within-stratum residual component
  double varsigma_Hr = 0.0;  // across-stratum heterogeneity component
  double arm_term1 = 0.0;    // treated half of varsigma_r
  double arm_term0 = 0.0;
  bool adjusted = false;
  double varsigma_r_adj = 0.0;  // valid when adjusted
  double total = 0.0;
  double se_tau = 0.0;
  int n = 0;
  double pi = 0.5;
  std::vector<double> proportions;  // p_n[k]
  std::vector<CellMoments> cells1;  // per stratum, treated
  std::vector<CellMoments> cells0;

  void finish() {
    total = (adjusted ? varsigma_r_adj : varsigma_r) + varsigma_Hr;
    se_tau = std::sqrt(std::max(total, 0.0) / n);
  }
};

/// Plug-in variance of the estimate: the allocation-weighted within-stratum
/// residual variance (1/n_ka normalization) plus the heterogeneity term.
inline VarianceEstimate variance_components(const TreatmentEffectEstimate& est, double pi) {
  if (!(pi > 0.0 && pi < 1.0)) throw ValidationError("variance: pi must lie in (0, 1)");
  const int n = est.size();
  const auto K = est.summaries.size();
  VarianceEstimate v;
  v.n = n;
  v.pi = pi;
  v.cells1.assign(K, {});
  v.cells0.assign(K, {});

  // Stratum and overall sums accumulate the same values in the same order,
  // so a single stratum yields identical means and a zero gap.
  std::vector<double> sum1(K, 0.0), sum0(K, 0.0);
  double all1 = 0.0, all0 = 0.0;
  int n1 = 0, n0 = 0;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(est.strata[static_cast<std::size_t>(i)]);
    const double r = est.residuals[i];
    if (est.assignments[static_cast<std::size_t>(i)] == 1) {
      sum1[k] += r;
      all1 += r;
      ++v.cells1[k].n;
      ++n1;
    } else {
      sum0[k] += r;
      all0 += r;
      ++v.cells0[k].n;
      ++n0;
    }
  }
  for (std::size_t k = 0; k < K; ++k)
    if (v.cells1[k].n == 0 || v.cells0[k].n == 0)
      throw DegenerateStratumError("variance: stratum " + std::to_string(k) + " has an empty arm",
                                   static_cast<int>(k), v.cells1[k].n == 0 ? 1 : 0);
  for (std::size_t k = 0; k < K; ++k) {
    v.cells1[k].mean = sum1[k] / v.cells1[k].n;
    v.cells0[k].mean = sum0[k] / v.cells0[k].n;
  }
  const double mean1 = all1 / n1;
  const double mean0 = all0 / n0;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(est.strata[static_cast<std::size_t>(i)]);
    auto& c = est.assignments[static_cast<std::size_t>(i)] == 1 ? v.cells1[k] : v.cells0[k];
    const double d = est.residuals[i] - c.mean;
    c.ss += d * d;
  }

  v.proportions.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double pk = static_cast<double>(v.cells1[k].n + v.cells0[k].n) / n;
    v.proportions[k] = pk;
    v.arm_term1 += pk * v.cells1[k].ss / v.cells1[k].n;
    v.arm_term0 += pk * v.cells0[k].ss / v.cells0[k].n;
    const double gap = (v.cells1[k].mean - mean1) - (v.cells0[k].mean - mean0);
    v.varsigma_Hr += pk * gap * gap;
  }
  v.arm_term1 /= pi;
  v.arm_term0 /= 1.0 - pi;
  v.varsigma_r = v.arm_term1 + v.arm_term0;
  v.finish();
  return v;
}

/// What to do when a cell has no residual degrees of freedom left
/// (n_ka - s_ka - 1 <= 0).
enum class DfPolicy {
  Strict,  // throw DfExhaustedError
  Floor,   // use a denominator of 1
};

/// Degrees-of-freedom corrected variance. Common adjustment inflates each arm
/// term by n / (n - s(a) - 1); stratum-specific adjustment replaces each
/// cell's 1/n_ka by 1/(n_ka - s_ka - 1). The plain difference in means is
/// treated as common adjustment with s = 0.
inline VarianceEstimate df_adjust(VarianceEstimate v, const TreatmentEffectEstimate& est,
                                  DfPolicy policy = DfPolicy::Strict) {
  const bool specific = est.adjustment && est.adjustment->mode == AdjustMode::Specific;
  const int n = v.n;
  auto denom = [&](int df, int k, int arm) -> double {
    if (df > 0) return df;
    if (policy == DfPolicy::Floor) return 1.0;
    throw DfExhaustedError("no residual degrees of freedom left in stratum " + std::to_string(k) + " arm " +
                               std::to_string(arm),
                           k, arm);
  };
  if (!specific) {
    const int s1 = est.adjustment ? est.adjustment->selected(1, 0) : 0;
    const int s0 = est.adjustment ? est.adjustment->selected(0, 0) : 0;
    const double m1 = n / denom(n - s1 - 1, -1, 1);
    const double m0 = n / denom(n - s0 - 1, -1, 0);
    v.varsigma_r_adj = m1 * v.arm_term1 + m0 * v.arm_term0;
  } else {
    double t1 = 0.0, t0 = 0.0;
    for (std::size_t k = 0; k < v.proportions.size(); ++k) {
      const int kk = static_cast<int>(k);
      const double d1 = denom(v.cells1[k].n - est.adjustment->selected(1, kk) - 1, kk, 1);
      const double d0 = denom(v.cells0[k].n - est.adjustment->selected(0, kk) - 1, kk, 0);
      t1 += v.proportions[k] * v.cells1[k].ss / d1;
      t0 += v.proportions[k] * v.cells0[k].ss / d0;
    }
    v.varsigma_r_adj = t1 / v.pi + t0 / (1.0 - v.pi);
  }
  v.adjusted = true;
  v.finish();
  return v;
}

/// Standard normal quantile. Rational starting point refined by one Halley
/// step against erfc; absolute error well below 1e-12 on (1e-300, 1 - 1e-16).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  const double lo = 0.02425;
  double x;
  if (p < lo) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - lo) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  std::optional<bool> covers_truth;

  double width() const noexcept { return upper - lower; }
  bool contains(double t) const noexcept { return lower <= t && t <= upper; }
};

/// Wald interval tau +- z * sqrt(total / n).
inline ConfidenceInterval confidence_interval(const TreatmentEffectEstimate& est, const VarianceEstimate& v,
                                              double level = 0.95) {
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level must lie in (0, 1)");
  if (!(v.total >= 0.0)) throw NumericError("variance estimate is negative or not a number");
  const double z = normal_quantile(0.5 + level / 2.0);
  const double half = z * v.se_tau;
  return {est.tau - half, est.tau + half, level, std::nullopt};
}

namespace detail {

inline void require_symmetric(const Eigen::MatrixXd& s, const char* what) {
  if (s.rows() != s.cols()) throw ValidationError(std::string(what) + " must be square");
  const double scale = 1.0 + s.cwiseAbs().maxCoeff();
  if (((s - s.transpose()).cwiseAbs().array() > 1e-10 * scale).any())
    throw ValidationError(std::string(what) + " must be symmetric");
}

}  // namespace detail

/// Asymptotic variance gain of common adjustment over the unadjusted
/// estimator: -(b' S b) / (pi (1 - pi)), never positive for PSD S.
inline double asymptotic_delta_common(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& beta_star, double pi) {
  detail::require_symmetric(sigma, "covariance");
  if (sigma.rows() != beta_star.size()) throw ValidationError("covariance and coefficient sizes differ");
  if (!(pi > 0.0 && pi < 1.0)) throw ValidationError("pi must lie in (0, 1)");
  return -beta_star.dot(sigma * beta_star) / (pi * (1.0 - pi));
}

/// Additional gain of stratum-specific over common adjustment. Only
/// guaranteed non-positive when the pooled vector is the projection optimum;
/// other inputs can give a positive value.
inline double asymptotic_delta_specific(const std::vector<Eigen::MatrixXd>& sigma_k, const std::vector<double>& weights,
                                        const std::vector<Eigen::VectorXd>& beta_k, const Eigen::MatrixXd& sigma_pooled,
                                        const Eigen::VectorXd& beta_pooled, double pi) {
  if (sigma_k.size() != weights.size() || beta_k.size() != weights.size())
    throw ValidationError("one covariance, weight and coefficient vector per stratum is required");
  double wsum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ValidationError("stratum weights must be non-negative");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw ValidationError("stratum weights must sum to 1");
  if (!(pi > 0.0 && pi < 1.0)) throw ValidationError("pi must lie in (0, 1)");
  detail::require_symmetric(sigma_pooled, "pooled covariance");
  double within = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    detail::require_symmetric(sigma_k[k], "stratum covariance");
    if (sigma_k[k].rows() != beta_k[k].size() || beta_k[k].size() != beta_pooled.size())
      throw ValidationError("covariance and coefficient sizes differ");
    within += weights[k] * beta_k[k].dot(sigma_k[k] * beta_k[k]);
  }
  return -(within - beta_pooled.dot(sigma_pooled * beta_pooled)) / (pi * (1.0 - pi));
}

/// Point estimate with both variance flavours and intervals.
struct Inference {
  TreatmentEffectEstimate estimate;
  VarianceEstimate unadjusted;
  std::optional<VarianceEstimate> adjusted;  // empty when df were exhausted under Strict
  ConfidenceInterval ci_unadjusted;
  std::optional<ConfidenceInterval> ci_adjusted;
  std::string adjusted_error;
};

inline Inference infer(TreatmentEffectEstimate est, double pi, double level = 0.95,
                       DfPolicy policy = DfPolicy::Strict) {
  Inference out;
  out.unadjusted = variance_components(est, pi);
  out.ci_unadjusted = confidence_interval(est, out.unadjusted, level);
  try {
    out.adjusted = df_adjust(out.unadjusted, est, policy);
    out.ci_adjusted = confidence_interval(est, *out.adjusted, level);
  } catch (const DfExhaustedError& e) {
    out.adjusted_error = e.what();
  }
  out.estimate = std::move(est);
  return out;
}

}  // namespace caradj
