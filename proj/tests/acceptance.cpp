// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "caradj/harness.hpp"
#include "cli.hpp"

using namespace caradj;

namespace {

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

struct Verdict {
  bool ok = true;
  std::string detail;

  void check(bool cond, const std::string& what) {
    if (!cond) ok = false;
    detail += (detail.empty() ? "" : "; ") + what + (cond ? "" : " [x]");
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

int failures = 0;

void report(int id, const char* title, const Verdict& v) {
  std::printf("criterion %2d %-44s %s\n    %s\n", id, title, v.ok ? "PASS" : "FAIL", v.detail.c_str());
  std::fflush(stdout);
  if (!v.ok) ++failures;
}

HarnessConfig table_run(ModelId id, SchemeKind scheme, double pi, int threads) {
  HarnessConfig c;
  c.model = ModelSpec::of(id);
  c.model.pi = pi;
  c.scheme.kind = scheme;
  c.scheme.pi = pi;
  c.scheme.block_size = 6;
  c.scheme.bias = 0.75;
  c.n = 200;
  c.reps = 1000;
  c.seed = 1;
  c.threads = threads;
  return c;
}

const ReportRow& row(const ReplicationReport& r, EstimatorKind k) {
  for (const auto& x : r.rows)
    if (x.estimator == k) return x;
  throw Error("missing row");
}

bool within(double v, double target, double rel) { return std::abs(v - target) <= rel * target; }

// SD targets with relative tolerances, bias bound, and adjusted coverage band.
void table_one_checks(const ReplicationReport& rep, Verdict& sd, Verdict& cp) {
  struct Target {
    EstimatorKind kind;
    double sd;
    double tol;
  };
  const Target targets[] = {{EstimatorKind::DiffInMeans, 5.48, 0.10},
                            {EstimatorKind::OlsCommon, 1.71, 0.10},
                            {EstimatorKind::OlsSpecific, 0.59, 0.15},
                            {EstimatorKind::LassoCommon, 1.85, 0.15},
                            {EstimatorKind::LassoSpecific, 0.69, 0.15}};
  for (const auto& t : targets) {
    const auto& r = row(rep, t.kind);
    const std::string name = estimator_code(t.kind);
    sd.check(within(r.sd, t.sd, t.tol), name + fmt(" SD %.3f (%.2f", r.sd, t.sd) + fmt("+-%.0f%%)", 100 * t.tol));
    const double bound = 3.0 * r.sd / std::sqrt(static_cast<double>(r.successes));
    sd.check(std::abs(r.bias) < bound, name + fmt(" |bias| %.3f < %.3f", std::abs(r.bias), bound));
    const double se = std::sqrt(r.cp_adj * (1 - r.cp_adj) / std::max(1, r.successes - r.adj_failures));
    cp.check(r.cp_adj >= 0.92 && r.cp_adj <= 0.97, name + fmt(" CP-adj %.3f (binomial SE %.3f)", r.cp_adj, se));
    if (r.failures > 0) sd.check(false, name + fmt(" %.0f failed replications", r.failures));
  }
}

// Linear population with one stratum: X = L z, Y(a) = X'beta + eps.
ModelSpec linear_population(const Eigen::MatrixXd& chol, const Eigen::VectorXd& beta) {
  ModelSpec m = ModelSpec::of(ModelId::Custom);
  const int p = static_cast<int>(beta.size());
  m.p = p;
  m.custom.base_count = p;
  m.custom.draw_base = [chol, p](CounterRng& rng, Eigen::Ref<Eigen::VectorXd> x) {
    Eigen::VectorXd z(p);
    for (int j = 0; j < p; ++j) z[j] = rng.normal();
    x = chol * z;
  };
  m.custom.mean = [beta](const Eigen::VectorXd& x, int) { return x.dot(beta); };
  m.custom.scale = [](const Eigen::VectorXd&, int) { return 1.0; };
  m.custom.stratum = [](const Eigen::VectorXd&) { return std::string("all"); };
  return m;
}

std::string simulate(const std::vector<std::string>& extra) {
  std::vector<std::string> args = {"simulate", "--model", "1", "--n", "200", "--reps", "20", "--seed", "11"};
  args.insert(args.end(), extra.begin(), extra.end());
  std::ostringstream out, err;
  if (cli::run_cli(args, out, err) != 0) return "error: " + err.str();
  return out.str();
}

}  // namespace

int main() {
  const int threads = workers();
  std::printf("acceptance run, %d worker thread(s)\n\n", threads);

  // 1, 2: Model 1 under simple randomization, timed single-threaded.
  const auto t0 = std::chrono::steady_clock::now();
  const auto sr = run_replications(table_run(ModelId::Model1, SchemeKind::Simple, 0.5, 1));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  {
    Verdict sd, cp;
    table_one_checks(sr, sd, cp);
    sd.check(secs < 300.0, fmt("runtime %.1f s single-threaded (< 300 s)", secs));
    report(1, "Model 1 table reproduction (SR)", sd);
    report(2, "adjusted coverage calibration (SR)", cp);
  }

  // 3: Model 3 small strata.
  {
    const auto rep = run_replications(table_run(ModelId::Model3, SchemeKind::Simple, 0.5, threads));
    const auto& ols = row(rep, EstimatorKind::OlsSpecific);
    const auto& lasso = row(rep, EstimatorKind::LassoSpecific);
    Verdict v;
    v.check(ols.cp_unadj < 0.90, fmt("ols_specific CP-unadj %.3f < 0.90", ols.cp_unadj));
    v.check(ols.cp_adj >= 0.94, fmt("CP-adj %.3f >= 0.94", ols.cp_adj));
    v.check(ols.sd > lasso.sd, fmt("SD ols_specific %.2f > lasso_specific %.2f", ols.sd, lasso.sd));
    v.detail += fmt("; %.0f of %.0f replications had an empty stratum arm", ols.failures, rep.reps);
    report(3, "Model 3 small-stratum fragility", v);
  }

  // 4: the same conclusions under stratified blocks and minimization.
  {
    Verdict all;
    for (auto scheme : {SchemeKind::StratifiedBlock, SchemeKind::PocockSimon}) {
      const auto rep = run_replications(table_run(ModelId::Model1, scheme, 0.5, threads));
      Verdict sd, cp;
      table_one_checks(rep, sd, cp);
      all.check(sd.ok && cp.ok, std::string(scheme_code(scheme)) + ": " + sd.detail + "; " + cp.detail);
    }
    report(4, "scheme invariance (SBR block 6, PS p_bc 0.75)", all);
  }

  // 5: unequal allocation.
  {
    const auto rep = run_replications(table_run(ModelId::Model1, SchemeKind::Simple, 2.0 / 3.0, threads));
    const double d = row(rep, EstimatorKind::DiffInMeans).sd;
    const double l = row(rep, EstimatorKind::LassoSpecific).sd;
    Verdict v;
    v.check(within(d, 5.83, 0.10), fmt("dim SD %.3f (5.83+-10%%)", d));
    v.check(within(l, 0.70, 0.15), fmt("lasso_specific SD %.3f (0.70+-15%%)", l));
    report(5, "unequal allocation pi = 2/3", v);
  }

  // 6: empirical variance gap against the analytic one.
  {
    Eigen::Matrix3d sigma;
    sigma << 1.0, 0.5, 0.25, 0.5, 1.0, 0.5, 0.25, 0.5, 1.0;
    Eigen::Vector3d beta(1.0, -0.5, 0.8);
    beta *= std::sqrt(4.0 / beta.dot(sigma * beta));
    HarnessConfig c;
    c.model = linear_population(sigma.llt().matrixL(), beta);
    c.n = 2000;
    c.reps = 5000;
    c.seed = 6;
    c.threads = threads;
    c.estimators = {EstimatorKind::DiffInMeans, EstimatorKind::LassoCommon};
    const auto rep = run_replications(c);
    const double gap = c.n * (std::pow(rep.rows[1].sd, 2) - std::pow(rep.rows[0].sd, 2));
    const double delta = asymptotic_delta_common(sigma, beta, 0.5);
    Verdict v;
    v.check(std::abs(gap - delta) <= 0.10 * std::abs(delta),
            fmt("n*(Var lasso - Var dim) = %.3f vs analytic %.3f (rel. err %.3f)", gap, delta,
                std::abs(gap - delta) / std::abs(delta)));
    report(6, "variance gap matches analytic value", v);
  }

  // 7: solver certificates on random instances.
  {
    Verdict v;
    double worst_kkt = 0.0, worst_ols = 0.0;
    int nonzero = 0, unconverged = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      CounterRng rng{StreamKey(700).child(s)};
      // Every fourth instance is wide; the rest keep m >= 3p so the unpenalized
      // problem is well conditioned.
      const int p = 2 + static_cast<int>(rng.below(30));
      const int m = s % 4 == 0 ? p / 2 + 1 + static_cast<int>(rng.below(p)) : 3 * p + static_cast<int>(rng.below(60));
      Eigen::MatrixXd x(m, p);
      Eigen::VectorXd y(m);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
        y[i] = x(i, 0) - 2.0 * x(i, p - 1) + rng.normal();
      }
      const double lmax = lambda_max(x, y);
      const double lambda = lmax * rng.uniform(0.01, 0.99);
      const auto fit = fit_lasso(x, y, lambda);
      if (!fit.converged) ++unconverged;
      worst_kkt = std::max(worst_kkt, kkt_violation(x, y, fit.beta, lambda) / (1.0 + lambda));
      for (double f : {1.0, 1.0 + rng.uniform()}) nonzero += fit_lasso(x, y, lmax * f).active_count;
      if (m > p) {
        const auto zero = fit_lasso(x, y, 0.0, LassoConfig{1e-13, 200000, 1e-10});
        const Eigen::VectorXd ols = (x.transpose() * x).ldlt().solve(x.transpose() * y);
        worst_ols = std::max(worst_ols, (zero.beta - ols).lpNorm<Eigen::Infinity>());
      }
    }
    v.check(unconverged == 0, fmt("unconverged fits: %.0f", unconverged));
    v.check(worst_kkt <= 1e-6, fmt("max KKT violation / (1 + lambda) = %.2e", worst_kkt));
    v.check(worst_ols <= 1e-8, fmt("max |lambda=0 fit - OLS| = %.2e", worst_ols));
    v.check(nonzero == 0, fmt("nonzero coefficients at lambda >= lambda_max: %.0f", nonzero));
    report(7, "solver certificates", v);
  }

  // 8: reduction identities.
  {
    Verdict v;
    bool zero_exact = true, k1_exact = true;
    for (std::uint64_t s = 0; s < 50; ++s) {
      auto m = ModelSpec::of(s % 3 == 0 ? ModelId::Model1 : s % 3 == 1 ? ModelId::Model2 : ModelId::Model3);
      m.p = 20;
      const auto pop = generate(m, 400, StreamKey(800).child(s).child("data"));
      RandomizationScheme sbr;
      sbr.kind = SchemeKind::StratifiedBlock;
      auto ds = reveal(pop, assign_all(sbr, pop.units(), StreamKey(800).child(s).child("assign")), CovariateSet::Full);
      const auto plain = tau_hat(ds);
      for (auto mode : {AdjustMode::Common, AdjustMode::Specific}) {
        const auto g = tau_gen(ds, AdjustedVectors::zeros(mode, ds.num_strata(), ds.num_covariates()));
        zero_exact = zero_exact && g.tau == plain.tau;
      }
      std::fill(ds.strata.begin(), ds.strata.end(), 0);
      ds.coding = StratumCoding::identity(1);
      LassoOptions o;
      o.mode = LambdaMode::Fixed;
      o.lambda1 = 0.05 * static_cast<double>(s % 7);
      o.lambda0 = 0.3;
      k1_exact = k1_exact && tau_lasso_specific(ds, o).tau == tau_lasso_common(ds, o).tau &&
                 tau_ols_specific(ds).tau == tau_ols_common(ds).tau;
    }
    v.check(zero_exact, "zero vectors reproduce dim bit-for-bit (50 datasets, both modes)");
    v.check(k1_exact, "single stratum: specific == common for OLS and Lasso (50 datasets)");

    Eigen::MatrixXd x(8, 2);
    x << 1, 5, 3, -1, 1, 5, 3, -1, 2, 0, 7, 4, 2, 0, 7, 4;
    TrialDataset ds;
    ds.outcomes = (Eigen::VectorXd(8) << 3, 5, 1, 2, 9, 4, 6, 0).finished();
    ds.assignments = {1, 1, 0, 0, 1, 1, 0, 0};
    ds.strata = {0, 0, 0, 0, 1, 1, 1, 1};
    ds.coding = StratumCoding::identity(2);
    ds.covariates = x;
    EstimatorOptions opt;
    opt.lasso.mode = LambdaMode::Fixed;
    opt.lasso.lambda1 = opt.lasso.lambda0 = 0.01;
    bool same = true;
    for (auto k : {EstimatorKind::OlsCommon, EstimatorKind::LassoCommon, EstimatorKind::LassoSpecific})
      same = same && estimate(ds, k, opt).tau == tau_hat(ds).tau;
    v.check(same, "balanced covariates: every estimator equals dim");
    report(8, "reduction identities", v);
  }

  // 9: randomization invariants.
  {
    Verdict v;
    RandomizationScheme sbr;
    sbr.kind = SchemeKind::StratifiedBlock;
    const int total = 1'000'000, strata = 10;
    std::vector<Unit> units(total);
    CounterRng rng{StreamKey(900)};
    for (auto& u : units) u.stratum = static_cast<int>(rng.below(strata));
    const auto a = assign_all(sbr, units, StreamKey(901));
    std::vector<int> n1(strata, 0), nk(strata, 0);
    double worst = 0.0;
    for (int i = 0; i < total; ++i) {
      n1[units[i].stratum] += a[i];
      ++nk[units[i].stratum];
      worst = std::max(worst, std::abs(n1[units[i].stratum] - 0.5 * nk[units[i].stratum]));
    }
    v.check(worst <= 3.0, fmt("block 6 prefix imbalance max %.1f <= 3 over 10^6 assignments", worst));

    for (auto id : {ModelId::Model1, ModelId::Model2}) {
      const auto pop = generate(ModelSpec::of(id), 10'000, StreamKey(902).child(static_cast<std::uint64_t>(id)));
      for (auto kind : {SchemeKind::Simple, SchemeKind::StratifiedBlock, SchemeKind::StratifiedBiasedCoin,
                        SchemeKind::WeiAdaptive, SchemeKind::PocockSimon}) {
        RandomizationScheme s;
        s.kind = kind;
        const auto as = assign_all(s, pop.units(), StreamKey(903).child(scheme_code(kind)));
        std::vector<double> t(static_cast<std::size_t>(pop.coding.size()), 0.0), c = t;
        for (int i = 0; i < pop.size(); ++i) {
          t[pop.strata[i]] += as[i];
          c[pop.strata[i]] += 1;
        }
        double dev = 0.0, smallest = 1e9;
        for (std::size_t k = 0; k < t.size(); ++k) {
          dev = std::max(dev, std::abs(t[k] / c[k] - 0.5));
          smallest = std::min(smallest, c[k]);
        }
        v.check(dev <= 0.02, model_name(id) + " " + scheme_code(kind) +
                                 fmt(" max |pi_k - pi| %.4f (smallest stratum %.0f, binomial SD %.4f)", dev,
                                     smallest, std::sqrt(0.25 / smallest)));
      }
    }
    report(9, "randomization invariants", v);
  }

  // 10: determinism through the command line.
  {
    Verdict v;
    const auto base = simulate({});
    bool same = base.rfind("error", 0) != 0;
    for (const char* t : {"1", "2", "4"}) same = same && simulate({"--threads", t}) == base;
    const auto json = simulate({"--format", "json"});
    same = same && simulate({"--format", "json", "--threads", "3"}) == json;
    v.check(same, "simulate output byte-identical across repeats and --threads 1/2/3/4 (markdown and json)");
    report(10, "determinism", v);
  }

  std::printf("\n%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
