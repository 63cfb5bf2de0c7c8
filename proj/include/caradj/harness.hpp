#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "caradj/csv.hpp"
#include "caradj/errors.hpp"
#include "caradj/estimators.hpp"
#include "caradj/models.hpp"
#include "caradj/randomization.hpp"
#include "caradj/variance.hpp"

namespace caradj {

inline constexpr int kReportSchemaVersion = 1;

struct HarnessConfig {
  ModelSpec model;
  RandomizationScheme scheme;
  int n = 200;
  int reps = 1000;
  std::vector<EstimatorKind> estimators = all_estimators();
  EstimatorOptions options;
  double level = 0.95;
  // Small strata routinely exhaust the df of stratum-specific OLS; floor the
  // denominator there so the adjusted interval stays defined.
  DfPolicy df_policy = DfPolicy::Floor;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const {
    model.validate();
    scheme.validate();
    if (n < 2) throw ConfigError("n must be at least 2");
    if (reps < 1) throw ConfigError("reps must be at least 1");
    if (threads < 1) throw ConfigError("threads must be at least 1");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must lie in (0, 1)");
    if (std::abs(scheme.pi - model.pi) > 1e-12) throw ConfigError("scheme and model allocations differ");
  }
};

/// One estimator in one replication.
struct EstimatorDraw {
  bool ok = false;
  std::string failure;
  double tau = 0.0;
  double se_unadj = 0.0;
  bool cover_unadj = false;
  bool adj_ok = false;
  double se_adj = 0.0;
  bool cover_adj = false;
};

struct ReplicationDraws {
  std::vector<EstimatorDraw> draws;  // parallel to HarnessConfig::estimators
};

struct ReportRow {
  std::string model;
  EstimatorKind estimator = EstimatorKind::DiffInMeans;
  double true_tau = 0.0;
  double bias = 0.0;
  double sd = 0.0;
  double se_unadj = 0.0;
  double se_adj = 0.0;
  double cp_unadj = 0.0;
  double cp_adj = 0.0;
  int failures = 0;      // replications where the estimate itself failed
  int adj_failures = 0;  // estimate fine, adjusted variance unavailable
  int successes = 0;
};

struct ReplicationReport {
  std::vector<ReportRow> rows;
  std::vector<std::pair<std::string, std::string>> config;
  std::uint64_t seed = 0;
  int reps = 0;
};

namespace detail {

inline const TrialDataset& dataset_for(EstimatorKind k, const TrialDataset& base, const TrialDataset& full) {
  return k == EstimatorKind::LassoCommon || k == EstimatorKind::LassoSpecific ? full : base;
}

}  // namespace detail

/// Runs one replication: data from stream "data", assignment from "assign",
/// Lasso cross-validation folds from "lasso", all children of (seed, r).
inline ReplicationDraws run_replication(const HarnessConfig& cfg, int r, double truth) {
  const StreamKey key = StreamKey(cfg.seed).child(static_cast<std::uint64_t>(r));
  const Population pop = generate(cfg.model, cfg.n, key.child("data"));
  const std::vector<int> a = assign_all(cfg.scheme, pop.units(), key.child("assign"));
  const TrialDataset base = reveal(pop, a, CovariateSet::Base);
  const TrialDataset full = reveal(pop, a, CovariateSet::Full);
  EstimatorOptions opt = cfg.options;
  opt.lasso.key = key.child("lasso");

  ReplicationDraws out;
  for (EstimatorKind kind : cfg.estimators) {
    EstimatorDraw d;
    try {
      Inference inf = infer(estimate(detail::dataset_for(kind, base, full), kind, opt), cfg.model.pi, cfg.level,
                            cfg.df_policy);
      d.ok = true;
      d.tau = inf.estimate.tau;
      d.se_unadj = inf.unadjusted.se_tau;
      d.cover_unadj = inf.ci_unadjusted.contains(truth);
      if (inf.adjusted) {
        d.adj_ok = true;
        d.se_adj = inf.adjusted->se_tau;
        d.cover_adj = inf.ci_adjusted->contains(truth);
      }
    } catch (const Error& e) {
      d.failure = e.what();
    }
    out.draws.push_back(std::move(d));
  }
  return out;
}

/// Aggregates draws in replication order, so the result does not depend on
/// which worker produced which replication.
inline std::vector<ReportRow> aggregate(const HarnessConfig& cfg, const std::vector<ReplicationDraws>& reps,
                                        double truth) {
  std::vector<ReportRow> rows;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
    ReportRow row;
    row.model = model_name(cfg.model.id);
    row.estimator = cfg.estimators[e];
    row.true_tau = truth;
    double sum = 0.0, se_u = 0.0, se_a = 0.0;
    int cov_u = 0, cov_a = 0, adj_n = 0;
    for (const auto& r : reps) {
      const auto& d = r.draws[e];
      if (!d.ok) {
        ++row.failures;
        continue;
      }
      ++row.successes;
      sum += d.tau;
      se_u += d.se_unadj;
      cov_u += d.cover_unadj;
      if (d.adj_ok) {
        ++adj_n;
        se_a += d.se_adj;
        cov_a += d.cover_adj;
      } else {
        ++row.adj_failures;
      }
    }
    const int m = row.successes;
    if (m == 0) {
      row.bias = row.sd = row.se_unadj = row.se_adj = row.cp_unadj = row.cp_adj = nan;
      rows.push_back(row);
      continue;
    }
    const double mean = sum / m;
    double ss = 0.0;
    for (const auto& r : reps)
      if (r.draws[e].ok) ss += (r.draws[e].tau - mean) * (r.draws[e].tau - mean);
    row.bias = mean - truth;
    row.sd = m > 1 ? std::sqrt(ss / (m - 1)) : 0.0;
    row.se_unadj = se_u / m;
    row.cp_unadj = static_cast<double>(cov_u) / m;
    row.se_adj = adj_n > 0 ? se_a / adj_n : nan;
    row.cp_adj = adj_n > 0 ? static_cast<double>(cov_a) / adj_n : nan;
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<std::pair<std::string, std::string>> describe(const HarnessConfig& cfg) {
  auto num = [](double v) { return format_exact(v); };
  std::string est;
  for (auto k : cfg.estimators) est += (est.empty() ? "" : ",") + std::string(estimator_code(k));
  std::string lambda = cfg.options.lasso.mode == LambdaMode::CrossValidation ? "cv"
                       : cfg.options.lasso.mode == LambdaMode::Rate          ? "rate"
                                                                             : "fixed";
  return {{"model", model_name(cfg.model.id)},
          {"n", std::to_string(cfg.n)},
          {"reps", std::to_string(cfg.reps)},
          {"scheme", scheme_code(cfg.scheme.kind)},
          {"pi", num(cfg.scheme.pi)},
          {"block_size", std::to_string(cfg.scheme.block_size)},
          {"pbc", num(cfg.scheme.bias)},
          {"p", std::to_string(cfg.model.p)},
          {"estimators", est},
          {"lambda", lambda},
          {"cv_folds", std::to_string(cfg.options.lasso.cv.folds)},
          {"level", num(cfg.level)},
          {"df_policy", cfg.df_policy == DfPolicy::Strict ? "strict" : "floor"},
          {"seed", std::to_string(cfg.seed)}};
}

inline ReplicationReport run_replications(const HarnessConfig& cfg) {
  cfg.validate();
  const double truth = true_tau(cfg.model);
  std::vector<ReplicationDraws> draws(static_cast<std::size_t>(cfg.reps));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < cfg.reps; r = next++) draws[static_cast<std::size_t>(r)] = run_replication(cfg, r, truth);
  };
  const int workers = std::min(cfg.threads, cfg.reps);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  ReplicationReport rep;
  rep.rows = aggregate(cfg, draws, truth);
  rep.config = describe(cfg);
  rep.seed = cfg.seed;
  rep.reps = cfg.reps;
  return rep;
}

enum class ReportFormat { Csv, Markdown, Json };

inline ReportFormat parse_report_format(const std::string& s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "markdown" || s == "md") return ReportFormat::Markdown;
  if (s == "json") return ReportFormat::Json;
  throw ConfigError("unknown output format '" + s + "' (expected csv, markdown or json)");
}

inline const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {"Model",  "Estimator", "Bias",   "SD",      "SE-unadj",
                                                "SE-adj", "CP-unadj",  "CP-adj", "Failures"};
  return cols;
}

namespace detail {

inline std::string fixed2(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s(buf);
  return s == "-0.00" ? "0.00" : s;
}

inline std::vector<std::string> row_cells(const ReportRow& r) {
  return {r.model,          estimator_code(r.estimator), fixed2(r.bias),   fixed2(r.sd),
          fixed2(r.se_unadj), fixed2(r.se_adj),          fixed2(r.cp_unadj), fixed2(r.cp_adj),
          std::to_string(r.failures)};
}

inline nlohmann::json number_or_null(double v) { return std::isnan(v) ? nlohmann::json() : nlohmann::json(v); }

}  // namespace detail

inline std::string emit_report(const ReplicationReport& rep, ReportFormat fmt) {
  std::ostringstream out;
  const auto& cols = report_columns();
  switch (fmt) {
    case ReportFormat::Csv:
      for (std::size_t j = 0; j < cols.size(); ++j) out << (j ? "," : "") << cols[j];
      out << '\n';
      for (const auto& r : rep.rows) {
        const auto cells = detail::row_cells(r);
        for (std::size_t j = 0; j < cells.size(); ++j) out << (j ? "," : "") << cells[j];
        out << '\n';
      }
      break;
    case ReportFormat::Markdown:
      out << '|';
      for (const auto& c : cols) out << ' ' << c << " |";
      out << "\n|";
      for (std::size_t j = 0; j < cols.size(); ++j) out << (j < 2 ? " --- |" : " ---: |");
      out << '\n';
      for (const auto& r : rep.rows) {
        out << '|';
        for (const auto& c : detail::row_cells(r)) out << ' ' << c << " |";
        out << '\n';
      }
      break;
    case ReportFormat::Json: {
      nlohmann::ordered_json j;
      j["schema_version"] = kReportSchemaVersion;
      nlohmann::ordered_json conf;
      for (const auto& [k, v] : rep.config) conf[k] = v;
      j["config"] = conf;
      j["seed"] = rep.seed;
      j["reps"] = rep.reps;
      j["rows"] = nlohmann::ordered_json::array();
      for (const auto& r : rep.rows) {
        nlohmann::ordered_json row;
        row["model"] = r.model;
        row["estimator"] = estimator_code(r.estimator);
        row["true_tau"] = r.true_tau;
        row["bias"] = detail::number_or_null(r.bias);
        row["sd"] = detail::number_or_null(r.sd);
        row["se_unadj"] = detail::number_or_null(r.se_unadj);
        row["se_adj"] = detail::number_or_null(r.se_adj);
        row["cp_unadj"] = detail::number_or_null(r.cp_unadj);
        row["cp_adj"] = detail::number_or_null(r.cp_adj);
        row["failures"] = r.failures;
        row["adj_failures"] = r.adj_failures;
        j["rows"].push_back(row);
      }
      out << j.dump(2) << '\n';
      break;
    }
  }
  return out.str();
}

}  // namespace caradj
