#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "caradj/errors.hpp"
#include "caradj/rng.hpp"
#include "caradj/trial_data.hpp"

namespace caradj {

/// Which units a design covers: all strata of an arm, or one stratum.
struct DesignScope {
  std::optional<int> stratum;

  static DesignScope pooled() { return {}; }
  static DesignScope single(int k) { return {k}; }
  bool is_pooled() const noexcept { return !stratum.has_value(); }
};

/// Contiguous rows of a design that come from one stratum.
struct DesignBlock {
  int stratum = 0;
  Eigen::Index begin = 0;
  Eigen::Index size = 0;
};

/// Arm-a units with covariates and outcomes centered at their own
/// stratum-arm means. Rows are grouped by stratum.
struct CenteredDesign {
  Eigen::MatrixXd rows;
  Eigen::VectorXd response;
  int arm = 1;
  DesignScope scope;
  std::vector<DesignBlock> blocks;
  std::vector<int> units;  // dataset index of each row

  Eigen::Index m() const noexcept { return rows.rows(); }
  Eigen::Index p() const noexcept { return rows.cols(); }
};

/// Centers each stratum block at its arm means. A stratum without any arm-a
/// unit raises DegenerateStratumError; a singleton block centers to zero.
inline CenteredDesign build_centered_design(const TrialDataset& ds, int arm, DesignScope scope = DesignScope::pooled()) {
  const int K = ds.num_strata();
  std::vector<std::vector<int>> members(static_cast<std::size_t>(K));
  for (int i = 0; i < ds.size(); ++i)
    if (ds.assignments[static_cast<std::size_t>(i)] == arm)
      members[static_cast<std::size_t>(ds.strata[static_cast<std::size_t>(i)])].push_back(i);

  std::vector<int> strata;
  if (scope.is_pooled()) {
    strata.resize(static_cast<std::size_t>(K));
    std::iota(strata.begin(), strata.end(), 0);
  } else {
    if (*scope.stratum < 0 || *scope.stratum >= K) throw ValidationError("design: stratum index out of range");
    strata.push_back(*scope.stratum);
  }

  CenteredDesign d;
  d.arm = arm;
  d.scope = scope;
  Eigen::Index m = 0;
  for (int k : strata) {
    const auto sz = static_cast<Eigen::Index>(members[static_cast<std::size_t>(k)].size());
    if (sz == 0)
      throw DegenerateStratumError("stratum '" + ds.coding.decode(k) + "' has no units in arm " + std::to_string(arm),
                                   k, arm);
    m += sz;
  }
  const Eigen::Index p = ds.covariates.cols();
  d.rows.resize(m, p);
  d.response.resize(m);
  Eigen::Index r = 0;
  for (int k : strata) {
    const auto& mem = members[static_cast<std::size_t>(k)];
    DesignBlock b{k, r, static_cast<Eigen::Index>(mem.size())};
    for (int i : mem) {
      d.rows.row(r) = ds.covariates.row(i);
      d.response[r] = ds.outcomes[i];
      d.units.push_back(i);
      ++r;
    }
    auto xb = d.rows.middleRows(b.begin, b.size);
    const Eigen::RowVectorXd xm = xb.colwise().mean();
    xb.rowwise() -= xm;
    auto yb = d.response.segment(b.begin, b.size);
    yb.array() -= yb.mean();
    d.blocks.push_back(b);
  }
  return d;
}

struct LassoConfig {
  double tol = 1e-7;       // max coordinate change between full cycles
  int max_iter = 10000;    // full cycles
  double kkt_tol = 1e-6;   // scaled by (1 + lambda)
  bool standardize = false;
  // Path mode: stop when max_j colsq_j * change_j^2 < tol * ||y||^2 / m and
  // skip the KKT check. Only used for cross-validation paths.
  bool weighted_tol = false;
};

struct LassoFit {
  Eigen::VectorXd beta;
  double lambda = 0.0;
  int active_count = 0;
  int iterations = 0;
  bool converged = false;
  double kkt_violation = 0.0;
  double objective = 0.0;
};

inline double soft_threshold(double z, double t) noexcept {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

/// (1/(2m))||y - X b||^2 + lambda ||b||_1
inline double lasso_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                              double lambda) {
  const double m = static_cast<double>(x.rows());
  return (y - x * beta).squaredNorm() / (2.0 * m) + lambda * beta.lpNorm<1>();
}

/// Smallest lambda with an all-zero solution: ||X^T y / m||_inf.
inline double lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() == 0 || x.cols() == 0) return 0.0;
  return (x.transpose() * y).cwiseAbs().maxCoeff() / static_cast<double>(x.rows());
}

inline double lambda_max(const CenteredDesign& d) { return lambda_max(d.rows, d.response); }

/// Largest violation of the Lasso subgradient conditions at `beta`.
inline double kkt_violation(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                            double lambda) {
  if (x.cols() == 0 || x.rows() == 0) return 0.0;
  const Eigen::VectorXd c = x.transpose() * (y - x * beta) / static_cast<double>(x.rows());
  double worst = 0.0;
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    const double v = beta[j] == 0.0 ? std::max(0.0, std::abs(c[j]) - lambda)
                                     : std::abs(c[j] - lambda * (beta[j] > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

namespace detail {

/// Cyclic coordinate descent on raw (unscaled) columns with warm start.
/// `residual` must equal y - X beta on entry and is kept in sync.
inline void coordinate_descent(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& colsq,
                               double lambda, const LassoConfig& cfg, Eigen::VectorXd& beta, Eigen::VectorXd& residual,
                               LassoFit& fit) {
  const Eigen::Index p = x.cols();
  const double m = static_cast<double>(x.rows());
  std::vector<char> active(static_cast<std::size_t>(p), 0);
  for (Eigen::Index j = 0; j < p; ++j) active[static_cast<std::size_t>(j)] = beta[j] != 0.0;

  const double tol = cfg.weighted_tol ? cfg.tol * y.squaredNorm() / m : cfg.tol;
  auto update = [&](Eigen::Index j) {
    const double cj = colsq[j];
    if (cj == 0.0) {
      beta[j] = 0.0;
      return 0.0;
    }
    const double rho = x.col(j).dot(residual) / m + cj * beta[j];
    const double next = soft_threshold(rho, lambda) / cj;
    const double delta = next - beta[j];
    if (delta != 0.0) {
      residual.noalias() -= delta * x.col(j);
      beta[j] = next;
    }
    return cfg.weighted_tol ? cj * delta * delta : std::abs(delta);
  };

  fit.iterations = 0;
  fit.converged = false;
#ifndef NDEBUG
  double last_obj = lasso_objective(x, y, beta, lambda);
#endif
  while (fit.iterations < cfg.max_iter) {
    // Full sweep: may enlarge the active set.
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      max_change = std::max(max_change, update(j));
      if (beta[j] != 0.0) active[static_cast<std::size_t>(j)] = 1;
    }
    ++fit.iterations;
#ifndef NDEBUG
    {
      const double obj = lasso_objective(x, y, beta, lambda);
      assert(obj <= last_obj + 1e-12 * (1.0 + std::abs(last_obj)));
      last_obj = obj;
    }
#endif
    if (max_change < tol) {
      if (cfg.weighted_tol) {
        fit.converged = true;
        break;
      }
      const double kkt = kkt_violation(x, y, beta, lambda);
      if (kkt <= cfg.kkt_tol * (1.0 + lambda)) {
        fit.converged = true;
        break;
      }
    }
    // Sweeps restricted to the active set until they settle.
    while (fit.iterations < cfg.max_iter) {
      double change = 0.0;
      for (Eigen::Index j = 0; j < p; ++j)
        if (active[static_cast<std::size_t>(j)]) change = std::max(change, update(j));
      ++fit.iterations;
#ifndef NDEBUG
      {
        const double obj = lasso_objective(x, y, beta, lambda);
        assert(obj <= last_obj + 1e-12 * (1.0 + std::abs(last_obj)));
        last_obj = obj;
      }
#endif
      if (change < tol) break;
    }
  }
}

inline Eigen::VectorXd column_sq_norms(const Eigen::MatrixXd& x) {
  const double m = static_cast<double>(std::max<Eigen::Index>(x.rows(), 1));
  return x.colwise().squaredNorm().transpose() / m;
}

inline void finish_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda, const LassoConfig& cfg,
                       LassoFit& fit) {
  fit.lambda = lambda;
  fit.active_count = static_cast<int>((fit.beta.array() != 0.0).count());
  fit.kkt_violation = kkt_violation(x, y, fit.beta, lambda);
  fit.objective = x.rows() > 0 ? lasso_objective(x, y, fit.beta, lambda) : lambda * fit.beta.lpNorm<1>();
  if (fit.kkt_violation > cfg.kkt_tol * (1.0 + lambda)) fit.converged = false;
}

}  // namespace detail

/// Minimizes (1/(2m))||y - X b||^2 + lambda ||b||_1 by cyclic coordinate
/// descent with exact soft-threshold updates, in fixed column order.
inline LassoFit fit_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                          const LassoConfig& cfg = {}, const Eigen::VectorXd* warm_start = nullptr) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw NumericError("lasso: lambda must be finite and >= 0");
  if (!x.allFinite() || !y.allFinite()) throw NumericError("lasso: design or response is not finite");
  if (x.rows() != y.size()) throw ValidationError("lasso: design and response lengths differ");
  const Eigen::Index p = x.cols();
  LassoFit fit;
  fit.beta = warm_start ? *warm_start : Eigen::VectorXd::Zero(p);
  if (x.rows() == 0 || p == 0) {
    fit.beta.setZero();
    fit.converged = true;
    detail::finish_fit(x, y, lambda, cfg, fit);
    return fit;
  }
  if (cfg.standardize) {
    Eigen::VectorXd scale = x.colwise().norm().transpose() / std::sqrt(static_cast<double>(x.rows()));
    for (Eigen::Index j = 0; j < p; ++j)
      if (scale[j] == 0.0) scale[j] = 1.0;
    const Eigen::MatrixXd xs = x * scale.cwiseInverse().asDiagonal();
    LassoConfig inner = cfg;
    inner.standardize = false;
    Eigen::VectorXd ws = fit.beta.cwiseProduct(scale);
    LassoFit scaled = fit_lasso(xs, y, lambda, inner, &ws);
    scaled.beta = scaled.beta.cwiseQuotient(scale);
    scaled.kkt_violation = kkt_violation(xs, y, scaled.beta.cwiseProduct(scale), lambda);
    scaled.objective = lasso_objective(x, y, scaled.beta, lambda);
    return scaled;
  }
  // At or above lambda_max zero is optimal; return it exactly rather than
  // whatever rounding leaves after a sweep.
  if (lambda >= lambda_max(x, y)) {
    fit.beta.setZero();
    fit.converged = true;
    detail::finish_fit(x, y, lambda, cfg, fit);
    return fit;
  }
  const Eigen::VectorXd colsq = detail::column_sq_norms(x);
  Eigen::VectorXd residual = y - x * fit.beta;
  detail::coordinate_descent(x, y, colsq, lambda, cfg, fit.beta, residual, fit);
  detail::finish_fit(x, y, lambda, cfg, fit);
  return fit;
}

inline LassoFit fit_lasso(const CenteredDesign& d, double lambda, const LassoConfig& cfg = {}) {
  return fit_lasso(d.rows, d.response, lambda, cfg);
}

/// Theory-shaped penalty c * sqrt(log p / n).
inline double lambda_rate(long n, long p, double c = 1.0) {
  if (n < 2 || p < 2) throw ValidationError("lambda_rate needs n >= 2 and p >= 2");
  if (!(c > 0.0)) throw ValidationError("lambda_rate constant must be positive");
  return c * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
}

/// s^2 (log p)^2 / n; the sparsity regime needs this to vanish.
inline double sparsity_ratio(long n, long s, long p) {
  const double lp = std::log(static_cast<double>(p));
  return static_cast<double>(s) * static_cast<double>(s) * lp * lp / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Ordinary least squares

enum class AliasPolicy {
  Error,  // any rank deficiency throws SingularDesignError
  Drop,   // columns linearly dependent on earlier columns get coefficient 0
};

struct OlsFit {
  Eigen::VectorXd beta;       // covariate coefficients only
  double intercept = 0.0;
  int rank = 0;               // number of non-aliased covariates
  std::vector<char> aliased;  // per covariate
};

/// Least squares of y on x (optionally with intercept, which is discarded
/// from `beta`). Aliasing is detected column by column in input order with a
/// relative tolerance, then the kept columns are solved by pivoted QR.
inline OlsFit fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool intercept,
                      AliasPolicy policy = AliasPolicy::Error, double tol = 1e-7) {
  if (x.rows() != y.size()) throw ValidationError("ols: design and response lengths differ");
  if (!x.allFinite() || !y.allFinite()) throw NumericError("ols: design or response is not finite");
  const Eigen::Index m = x.rows();
  const Eigen::Index p = x.cols();
  OlsFit fit;
  fit.beta = Eigen::VectorXd::Zero(p);
  fit.aliased.assign(static_cast<std::size_t>(p), 0);
  if (m == 0) throw SingularDesignError("ols: no observations");
  if (policy == AliasPolicy::Error && m < p + (intercept ? 1 : 0))
    throw SingularDesignError("ols: " + std::to_string(m) + " observations cannot identify " + std::to_string(p) +
                              " coefficients" + (intercept ? " plus intercept" : ""));

  Eigen::MatrixXd xc = x;
  Eigen::VectorXd yc = y;
  Eigen::RowVectorXd xmean = Eigen::RowVectorXd::Zero(p);
  double ymean = 0.0;
  if (intercept) {
    xmean = x.colwise().mean();
    ymean = y.mean();
    xc.rowwise() -= xmean;
    yc.array() -= ymean;
  }

  // Gram-Schmidt pass (twice orthogonalized) to flag aliased columns.
  std::vector<Eigen::Index> kept;
  Eigen::MatrixXd q(m, std::min(m, p));
  Eigen::Index nq = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double base = intercept ? x.col(j).norm() : xc.col(j).norm();
    Eigen::VectorXd v = xc.col(j);
    for (int pass = 0; pass < 2 && nq > 0; ++pass) v -= q.leftCols(nq) * (q.leftCols(nq).transpose() * v);
    const double nv = v.norm();
    if (nq < m && nv > tol * std::max(base, std::numeric_limits<double>::min())) {
      q.col(nq++) = v / nv;
      kept.push_back(j);
    } else {
      fit.aliased[static_cast<std::size_t>(j)] = 1;
    }
  }
  fit.rank = static_cast<int>(kept.size());
  if (policy == AliasPolicy::Error && fit.rank < p)
    throw SingularDesignError("ols: design is rank deficient (rank " + std::to_string(fit.rank) + " < " +
                              std::to_string(p) + " covariates)");
  if (!kept.empty()) {
    Eigen::MatrixXd xk(m, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t c = 0; c < kept.size(); ++c) xk.col(static_cast<Eigen::Index>(c)) = xc.col(kept[c]);
    const Eigen::VectorXd bk = xk.colPivHouseholderQr().solve(yc);
    for (std::size_t c = 0; c < kept.size(); ++c) fit.beta[kept[c]] = bk[static_cast<Eigen::Index>(c)];
  }
  if (intercept) fit.intercept = ymean - xmean.dot(fit.beta);
  return fit;
}

/// OLS on an already-centered design (no intercept).
inline OlsFit fit_ols(const CenteredDesign& d, AliasPolicy policy = AliasPolicy::Error) {
  return fit_ols(d.rows, d.response, false, policy);
}

// ---------------------------------------------------------------------------
// Cross-validated penalty

struct CvConfig {
  int folds = 5;
  int grid_size = 50;
  double min_ratio = 1e-3;  // smallest grid value relative to lambda_max
  double saturation = 0.999;
  double min_gain = 1e-5;  // path stops once the explained fraction grows less than this
  LassoConfig solver;      // final fit at the chosen penalty
  LassoConfig path{1e-7, 10000, 1e-6, false, true};
};

struct CvResult {
  double lambda = 0.0;
  std::vector<double> grid;
  std::vector<double> cv_mean;
  std::vector<double> cv_se;
  std::size_t index_min = 0;
  std::size_t index_1se = 0;
  int folds_used = 0;
  bool fallback = false;  // too few rows to cross-validate; lambda_rate used
};

/// `size` values log-spaced from lambda_max down to lambda_max * min_ratio.
inline std::vector<double> default_lambda_grid(double lmax, int size = 50, double min_ratio = 1e-3) {
  std::vector<double> g;
  if (lmax <= 0.0 || size < 1) return {0.0};
  if (size == 1) return {lmax};
  const double step = std::log(min_ratio) / (size - 1);
  for (int i = 0; i < size; ++i) g.push_back(lmax * std::exp(step * i));
  return g;
}

namespace detail {

/// Warm-started path over a decreasing grid. Once the training fit explains
/// `saturation` of the variance, fills the rows, or stops improving by a
/// relative `min_gain`, later grid points reuse the last fit.
inline std::vector<Eigen::VectorXd> lasso_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                               const std::vector<double>& grid, const LassoConfig& cfg,
                                               double saturation, double min_gain = 0.0) {
  const Eigen::Index p = x.cols();
  std::vector<Eigen::VectorXd> out;
  out.reserve(grid.size());
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd residual = y;
  const Eigen::VectorXd colsq = column_sq_norms(x);
  const double tss = y.squaredNorm();
  bool saturated = x.rows() == 0 || p == 0 || tss == 0.0;
  double explained = 0.0;
  for (double lambda : grid) {
    if (!saturated) {
      LassoFit scratch;
      coordinate_descent(x, y, colsq, lambda, cfg, beta, residual, scratch);
      const auto active = (beta.array() != 0.0).count();
      const double now = 1.0 - residual.squaredNorm() / tss;
      if (now >= saturation || active >= x.rows() || (active > 0 && now - explained < min_gain * now))
        saturated = true;
      explained = now;
    }
    out.push_back(beta);
  }
  return out;
}

}  // namespace detail

/// K-fold cross-validation with stratum-balanced folds and the 1-SE rule.
/// Each training split is re-centered at its own stratum means.
inline CvResult select_lambda_cv(const CenteredDesign& d, int folds, std::vector<double> grid, CounterRng& rng,
                                 const CvConfig& cfg = {}) {
  if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
  CvResult res;
  if (grid.empty()) grid = default_lambda_grid(lambda_max(d), cfg.grid_size, cfg.min_ratio);
  std::sort(grid.begin(), grid.end(), std::greater<>());
  res.grid = grid;
  const Eigen::Index m = d.m();
  const Eigen::Index p = d.p();
  if (grid.size() == 1) {
    res.lambda = grid.front();
    res.cv_mean.assign(1, 0.0);
    res.cv_se.assign(1, 0.0);
    res.folds_used = 0;
    return res;
  }
  if (m < 2) {
    res.fallback = true;
    res.lambda = lambda_rate(std::max<long>(m, 2), std::max<long>(p, 2));
    return res;
  }
  const int F = static_cast<int>(std::min<Eigen::Index>(folds, m));
  res.folds_used = F;

  // Round-robin over a shuffled order inside each stratum block.
  std::vector<int> fold_of(static_cast<std::size_t>(m));
  int next = 0;
  for (const auto& b : d.blocks) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(b.size));
    std::iota(idx.begin(), idx.end(), b.begin);
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    for (auto r : idx) {
      fold_of[static_cast<std::size_t>(r)] = next;
      next = (next + 1) % F;
    }
  }

  const std::size_t G = grid.size();
  std::vector<std::vector<double>> mse(static_cast<std::size_t>(F), std::vector<double>(G, 0.0));
  std::vector<double> weight(static_cast<std::size_t>(F), 0.0);
  for (int f = 0; f < F; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index r = 0; r < m; ++r) (fold_of[static_cast<std::size_t>(r)] == f ? test : train).push_back(r);
    Eigen::MatrixXd xt(static_cast<Eigen::Index>(train.size()), p);
    Eigen::VectorXd yt(static_cast<Eigen::Index>(train.size()));
    Eigen::MatrixXd xv(static_cast<Eigen::Index>(test.size()), p);
    Eigen::VectorXd yv(static_cast<Eigen::Index>(test.size()));
    Eigen::Index it = 0, iv = 0;
    for (const auto& b : d.blocks) {
      const Eigen::Index t0 = it;
      Eigen::RowVectorXd xm = Eigen::RowVectorXd::Zero(p);
      double ym = 0.0;
      for (Eigen::Index r = b.begin; r < b.begin + b.size; ++r)
        if (fold_of[static_cast<std::size_t>(r)] != f) {
          xt.row(it) = d.rows.row(r);
          yt[it] = d.response[r];
          xm += d.rows.row(r);
          ym += d.response[r];
          ++it;
        }
      const Eigen::Index nt = it - t0;
      if (nt > 0) {
        xm /= static_cast<double>(nt);
        ym /= static_cast<double>(nt);
        xt.middleRows(t0, nt).rowwise() -= xm;
        yt.segment(t0, nt).array() -= ym;
      }
      for (Eigen::Index r = b.begin; r < b.begin + b.size; ++r)
        if (fold_of[static_cast<std::size_t>(r)] == f) {
          xv.row(iv) = d.rows.row(r) - xm;
          yv[iv] = d.response[r] - ym;
          ++iv;
        }
    }
    const auto path = detail::lasso_path(xt, yt, grid, cfg.path, cfg.saturation, cfg.min_gain);
    weight[static_cast<std::size_t>(f)] = static_cast<double>(test.size());
    for (std::size_t g = 0; g < G; ++g)
      mse[static_cast<std::size_t>(f)][g] = (yv - xv * path[g]).squaredNorm() / static_cast<double>(test.size());
  }

  const double wsum = std::accumulate(weight.begin(), weight.end(), 0.0);
  res.cv_mean.assign(G, 0.0);
  res.cv_se.assign(G, 0.0);
  for (std::size_t g = 0; g < G; ++g) {
    double mean = 0.0;
    for (int f = 0; f < F; ++f) mean += weight[static_cast<std::size_t>(f)] * mse[static_cast<std::size_t>(f)][g];
    mean /= wsum;
    double var = 0.0;
    for (int f = 0; f < F; ++f) {
      const double dv = mse[static_cast<std::size_t>(f)][g] - mean;
      var += weight[static_cast<std::size_t>(f)] * dv * dv;
    }
    var /= wsum;
    res.cv_mean[g] = mean;
    res.cv_se[g] = std::sqrt(var / (F - 1));
  }
  res.index_min = 0;
  for (std::size_t g = 1; g < G; ++g)
    if (res.cv_mean[g] < res.cv_mean[res.index_min]) res.index_min = g;
  const double bound = res.cv_mean[res.index_min] + res.cv_se[res.index_min];
  res.index_1se = res.index_min;
  for (std::size_t g = 0; g < res.index_min; ++g)
    if (res.cv_mean[g] <= bound) {
      res.index_1se = g;
      break;
    }
  res.lambda = grid[res.index_1se];
  return res;
}

}  // namespace caradj
