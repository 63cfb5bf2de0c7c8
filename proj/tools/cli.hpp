#pragma once

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "caradj/config.hpp"
#include "caradj/csv.hpp"
#include "caradj/expansion.hpp"
#include "caradj/harness.hpp"
#include "caradj/randomization.hpp"
#include "caradj/variance.hpp"

namespace caradj::cli {

enum ExitCode { kOk = 0, kUsage = 2, kRuntime = 3 };

/// String-valued flags that mirror config-file keys. Values given on the
/// command line are laid over the file, which is laid over the defaults.
class FlagSet {
 public:
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto slot = std::make_shared<std::string>();
    flags_.push_back({app->add_option(flag, *slot, help), key, slot});
  }

  std::set<std::string> keys() const {
    std::set<std::string> k;
    for (const auto& f : flags_) k.insert(f.key);
    return k;
  }

  KeyValueConfig resolve(const std::string& config_path) const {
    KeyValueConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path, keys());
    for (const auto& f : flags_)
      if (f.option->count() > 0) cfg.set(f.key, *f.value);
    return cfg;
  }

 private:
  struct Flag {
    CLI::Option* option;
    std::string key;
    std::shared_ptr<std::string> value;
  };
  std::vector<Flag> flags_;
};

namespace detail {

class Settings {
 public:
  explicit Settings(KeyValueConfig cfg) : cfg_(std::move(cfg)) {}

  std::string str(const std::string& key, const std::string& fallback) {
    auto v = cfg_.get(key);
    return record(key, v ? *v : fallback);
  }
  long long integer(const std::string& key, long long fallback) {
    auto v = cfg_.get(key);
    const long long out = v ? config_int(key, *v) : fallback;
    record(key, std::to_string(out));
    return out;
  }
  double real(const std::string& key, double fallback) {
    auto v = cfg_.get(key);
    const double out = v ? config_real(key, *v) : fallback;
    record(key, format_exact(out));
    return out;
  }
  bool flag(const std::string& key, bool fallback) {
    auto v = cfg_.get(key);
    bool out = fallback;
    if (v) {
      if (*v == "true" || *v == "1" || *v == "yes") out = true;
      else if (*v == "false" || *v == "0" || *v == "no") out = false;
      else throw ConfigError("'" + key + "' expects true or false, got '" + *v + "'");
    }
    record(key, out ? "true" : "false");
    return out;
  }
  /// Seed from the settings, or fresh OS entropy reported on `err`.
  std::uint64_t seed(std::ostream& err) {
    if (auto v = cfg_.get("seed")) {
      const auto s = config_uint("seed", *v);
      record("seed", std::to_string(s));
      return s;
    }
    std::random_device rd;
    const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    err << "seed: " << s << '\n';
    record("seed", std::to_string(s));
    return s;
  }

  const std::vector<std::pair<std::string, std::string>>& resolved() const noexcept { return resolved_; }

 private:
  const std::string& record(const std::string& key, std::string value) {
    for (auto& [k, v] : resolved_)
      if (k == key) {
        v = std::move(value);
        return v;
      }
    resolved_.emplace_back(key, std::move(value));
    return resolved_.back().second;
  }

  KeyValueConfig cfg_;
  std::vector<std::pair<std::string, std::string>> resolved_;
};

inline DfPolicy parse_df_policy(const std::string& s) {
  if (s == "strict") return DfPolicy::Strict;
  if (s == "floor") return DfPolicy::Floor;
  throw ConfigError("unknown df policy '" + s + "' (expected strict or floor)");
}

inline LambdaMode parse_lambda_mode(const std::string& s) {
  if (s == "cv") return LambdaMode::CrossValidation;
  if (s == "rate") return LambdaMode::Rate;
  if (s == "fixed") return LambdaMode::Fixed;
  throw ConfigError("unknown lambda mode '" + s + "' (expected cv, rate or fixed)");
}

inline std::vector<EstimatorKind> parse_estimator_list(const std::string& s) {
  if (s == "all") return all_estimators();
  std::vector<EstimatorKind> out;
  for (const auto& item : split_list(s)) out.push_back(parse_estimator(item));
  return out;
}

inline RandomizationScheme scheme_from(Settings& s, bool need_pi_default_half = true) {
  RandomizationScheme scheme;
  scheme.kind = parse_scheme(s.str("scheme", "sr"));
  scheme.pi = s.real("pi", need_pi_default_half ? 0.5 : scheme.pi);
  scheme.block_size = static_cast<int>(s.integer("block_size", 6));
  scheme.bias = s.real("pbc", 0.75);
  for (const auto& w : split_list(s.str("weights", ""))) scheme.margin_weights.push_back(config_real("weights", w));
  scheme.validate();
  return scheme;
}

inline LassoOptions lasso_from(Settings& s, std::uint64_t seed) {
  LassoOptions o;
  o.mode = parse_lambda_mode(s.str("lambda", "cv"));
  if (o.mode == LambdaMode::Fixed) {
    const double both = s.real("lambda_value", 0.0);
    o.lambda1 = s.real("lambda1", both);
    o.lambda0 = s.real("lambda0", both);
    if (!(o.lambda1 >= 0.0 && o.lambda0 >= 0.0)) throw ConfigError("fixed penalties must be non-negative");
  }
  o.rate_constant = s.real("rate_constant", 1.0);
  o.cv.folds = static_cast<int>(s.integer("cv_folds", 5));
  if (o.cv.folds < 2) throw ConfigError("cv_folds must be at least 2");
  o.key = StreamKey(seed);
  return o;
}

/// Output goes to --out when given, otherwise to `fallback`.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ConfigError("cannot open output file '" + path + "'");
      stream_ = file_.get();
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

inline void echo(std::ostream& err, const Settings& s) {
  err << "config:";
  for (const auto& [k, v] : s.resolved()) err << ' ' << k << '=' << v;
  err << '\n';
}

inline nlohmann::ordered_json config_json(const Settings& s) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : s.resolved()) j[k] = v;
  return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int cmd_simulate(const KeyValueConfig& kv, std::ostream& out, std::ostream& err) {
  detail::Settings s(kv);
  HarnessConfig cfg;
  const std::string model_list = s.str("model", "1");
  std::vector<ModelId> models;
  for (const auto& m : split_list(model_list == "all" ? "1,2,3" : model_list)) models.push_back(parse_model(m));
  if (models.empty()) throw ConfigError("model list is empty");
  cfg.n = static_cast<int>(s.integer("n", 200));
  cfg.reps = static_cast<int>(s.integer("reps", 1000));
  cfg.scheme = detail::scheme_from(s);
  const int p = static_cast<int>(s.integer("p", 100));
  const double mu0 = s.real("mu0", 0.0);
  const double mu1 = s.real("mu1", 0.0);
  cfg.estimators = detail::parse_estimator_list(s.str("estimators", "all"));
  cfg.level = s.real("level", 0.95);
  cfg.df_policy = detail::parse_df_policy(s.str("df_policy", "floor"));
  cfg.seed = s.seed(err);
  cfg.options.lasso = detail::lasso_from(s, cfg.seed);
  cfg.threads = static_cast<int>(s.integer("threads", 1));
  const ReportFormat fmt = parse_report_format(s.str("format", "markdown"));
  const std::string path = s.str("out", "");
  std::vector<HarnessConfig> runs;
  for (ModelId id : models) {
    HarnessConfig c = cfg;
    c.model = ModelSpec::of(id);
    c.model.pi = cfg.scheme.pi;
    c.model.p = p;
    c.model.mu0 = mu0;
    c.model.mu1 = mu1;
    c.validate();
    runs.push_back(std::move(c));
  }
  detail::Sink sink(path, out);

  ReplicationReport rep;
  rep.seed = cfg.seed;
  rep.reps = cfg.reps;
  for (const auto& c : runs) {
    auto part = run_replications(c);
    rep.rows.insert(rep.rows.end(), part.rows.begin(), part.rows.end());
  }
  // Worker count and destination do not change the report, so they stay out
  // of it and repeated runs remain byte-identical.
  for (const auto& [k, v] : s.resolved())
    if (k != "threads" && k != "out" && k != "format") rep.config.emplace_back(k, v);
  if (fmt != ReportFormat::Json) detail::echo(err, s);
  sink.get() << emit_report(rep, fmt);
  return kOk;
}

namespace detail {

struct AnalysisRow {
  EstimatorKind kind;
  std::optional<Inference> inference;
  std::string error;
};

inline double reduction(const VarianceEstimate& chosen, const VarianceEstimate& base) {
  return base.total > 0.0 ? 1.0 - chosen.total / base.total : 0.0;
}

inline nlohmann::ordered_json counts_json(const AdjustedVectors& a, int arm) {
  const auto& v = arm == 1 ? a.selected1 : a.selected0;
  return nlohmann::ordered_json(v);
}

}  // namespace detail

inline int cmd_analyze(const KeyValueConfig& kv, std::ostream& out, std::ostream& err) {
  detail::Settings s(kv);
  const std::string data = s.str("data", "");
  if (data.empty()) throw ConfigError("analyze needs --data");
  ColumnSchema schema;
  schema.outcome = s.str("outcome", "y");
  schema.assignment = s.str("assignment", "a");
  schema.stratum = s.str("stratum", "stratum");
  const std::string cov = s.str("covariates", "auto");
  const auto estimators = detail::parse_estimator_list(s.str("estimators", "all"));
  const double level = s.real("level", 0.95);
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must lie in (0, 1)");
  const DfPolicy policy = detail::parse_df_policy(s.str("df_policy", "floor"));
  const bool json = s.flag("json", false);
  EstimatorOptions opt;
  opt.ols.stratum_centered = s.flag("ols_centered", false);
  opt.specific.min_units = static_cast<int>(s.integer("min_units", 1));
  opt.specific.policy = s.flag("fallback", false) ? DegeneratePolicy::FallbackToCommon : DegeneratePolicy::Fail;
  const auto seed = s.seed(err);
  opt.lasso = detail::lasso_from(s, seed);
  const std::string pi_text = s.str("pi", "observed");

  const CsvTable table = read_csv_file(data);
  if (cov == "auto") {
    for (const auto& h : table.header)
      if (h != schema.outcome && h != schema.assignment && h != schema.stratum) schema.covariates.push_back(h);
  } else if (cov != "none") {
    schema.covariates = split_list(cov);
  }
  const TrialDataset ds = dataset_from_table(table, schema);
  int n1 = 0;
  for (int a : ds.assignments) n1 += a;
  const double pi = pi_text == "observed" ? static_cast<double>(n1) / ds.size() : config_real("pi", pi_text);
  if (!(pi > 0.0 && pi < 1.0)) throw ValidationError("allocation pi must lie in (0, 1); both arms need units");

  // The unadjusted estimator is the reference for variance reductions.
  const Inference reference = infer(tau_hat(ds), pi, level, DfPolicy::Floor);
  std::vector<detail::AnalysisRow> rows;
  bool failed = false;
  for (EstimatorKind kind : estimators) {
    detail::AnalysisRow row{kind, std::nullopt, ""};
    try {
      row.inference = infer(estimate(ds, kind, opt), pi, level, policy);
    } catch (const Error& e) {
      row.error = e.what();
      failed = true;
    }
    rows.push_back(std::move(row));
  }

  if (json) {
    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = "analyze";
    j["config"] = detail::config_json(s);
    j["n"] = ds.size();
    j["strata"] = ds.num_strata();
    j["covariates"] = ds.num_covariates();
    j["pi"] = pi;
    j["results"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      nlohmann::ordered_json e;
      e["estimator"] = estimator_code(r.kind);
      if (!r.inference) {
        e["error"] = r.error;
        j["results"].push_back(e);
        continue;
      }
      const auto& inf = *r.inference;
      e["tau"] = inf.estimate.tau;
      e["se_unadj"] = inf.unadjusted.se_tau;
      e["ci_unadj"] = {inf.ci_unadjusted.lower, inf.ci_unadjusted.upper};
      e["se_adj"] = inf.adjusted ? nlohmann::ordered_json(inf.adjusted->se_tau) : nlohmann::ordered_json();
      e["ci_adj"] = inf.ci_adjusted ? nlohmann::ordered_json({inf.ci_adjusted->lower, inf.ci_adjusted->upper})
                                    : nlohmann::ordered_json();
      if (inf.estimate.adjustment) {
        e["selected_treated"] = detail::counts_json(*inf.estimate.adjustment, 1);
        e["selected_control"] = detail::counts_json(*inf.estimate.adjustment, 0);
        if (!inf.estimate.adjustment->lambda1.empty()) {
          e["lambda_treated"] = inf.estimate.adjustment->lambda1;
          e["lambda_control"] = inf.estimate.adjustment->lambda0;
        }
      }
      e["variance_reduction"] = detail::reduction(inf.unadjusted, reference.unadjusted);
      if (inf.adjusted)
        e["variance_reduction_adj"] = detail::reduction(*inf.adjusted, *reference.adjusted);
      j["results"].push_back(e);
    }
    out << j.dump(2) << '\n';
  } else {
    detail::echo(err, s);
    out << "n=" << ds.size() << " strata=" << ds.num_strata() << " covariates=" << ds.num_covariates()
        << " pi=" << pi << " level=" << level << '\n';
    for (const auto& r : rows) {
      out << '\n' << estimator_code(r.kind) << '\n';
      if (!r.inference) {
        out << "  error: " << r.error << '\n';
        continue;
      }
      const auto& inf = *r.inference;
      out << "  estimate:           " << inf.estimate.tau << '\n';
      out << "  se (unadjusted):    " << inf.unadjusted.se_tau << "  ci [" << inf.ci_unadjusted.lower << ", "
          << inf.ci_unadjusted.upper << "]\n";
      if (inf.adjusted)
        out << "  se (adjusted):      " << inf.adjusted->se_tau << "  ci [" << inf.ci_adjusted->lower << ", "
            << inf.ci_adjusted->upper << "]\n";
      else
        out << "  se (adjusted):      unavailable (" << inf.adjusted_error << ")\n";
      if (inf.estimate.adjustment) {
        const auto& a = *inf.estimate.adjustment;
        auto list = [](const std::vector<int>& v) {
          std::string t;
          for (int x : v) t += (t.empty() ? "" : ",") + std::to_string(x);
          return t;
        };
        out << "  selected:           treated " << list(a.selected1) << ", control " << list(a.selected0) << '\n';
      }
      out << "  variance reduction: " << detail::reduction(inf.unadjusted, reference.unadjusted);
      if (inf.adjusted) out << " (adjusted " << detail::reduction(*inf.adjusted, *reference.adjusted) << ")";
      out << '\n';
    }
  }
  if (failed) {
    for (const auto& r : rows)
      if (!r.inference) err << "error: " << estimator_code(r.kind) << ": " << r.error << '\n';
    return kRuntime;
  }
  return kOk;
}

inline int cmd_randomize(const KeyValueConfig& kv, std::ostream& out, std::ostream& err) {
  detail::Settings s(kv);
  const std::string data = s.str("data", "");
  if (data.empty()) throw ConfigError("randomize needs --data");
  const RandomizationScheme scheme = detail::scheme_from(s);
  const std::string stratum = s.str("stratum", "");
  const auto margins = split_list(s.str("margins", ""));
  const std::string column = s.str("column", "assignment");
  const std::string path = s.str("out", "");
  const auto seed = s.seed(err);

  CsvTable table = read_csv_file(data);
  if (table.column(column)) throw ConfigError("input already has a column named '" + column + "'");
  std::vector<std::size_t> margin_cols;
  for (const auto& m : margins) margin_cols.push_back(table.require_column(m));
  if (margin_cols.empty() && !stratum.empty()) margin_cols.push_back(table.require_column(stratum));
  std::optional<std::size_t> strat_col;
  if (!stratum.empty()) strat_col = table.require_column(stratum);
  if (scheme.kind == SchemeKind::PocockSimon && !scheme.margin_weights.empty() &&
      scheme.margin_weights.size() != margin_cols.size())
    throw ConfigError("need one weight per margin");

  StratumCoding strata;
  std::vector<StratumCoding> levels(margin_cols.size());
  std::vector<Unit> units;
  for (const auto& r : table.rows) {
    Unit u;
    u.stratum = strat_col ? strata.encode(r[*strat_col]) : 0;
    for (std::size_t j = 0; j < margin_cols.size(); ++j) u.margins.push_back(levels[j].encode(r[margin_cols[j]]));
    units.push_back(std::move(u));
  }
  const auto a = assign_all(scheme, units, StreamKey(seed));
  detail::echo(err, s);
  table.header.push_back(column);
  for (std::size_t i = 0; i < table.rows.size(); ++i) table.rows[i].push_back(std::to_string(a[i]));
  detail::Sink sink(path, out);
  write_table(sink.get(), table);
  return kOk;
}

inline int cmd_expand(const KeyValueConfig& kv, std::ostream& out, std::ostream& err) {
  detail::Settings s(kv);
  const std::string data = s.str("data", "");
  if (data.empty()) throw ConfigError("expand needs --data");
  const auto continuous = split_list(s.str("continuous", ""));
  const auto binary = split_list(s.str("binary", ""));
  ExpansionSpec spec;
  spec.degree = static_cast<int>(s.integer("degree", 3));
  spec.interaction_depth = static_cast<int>(s.integer("depth", 2));
  spec.cross_interactions = s.flag("cross", true);
  spec.drop_constant = !s.flag("keep_constant", false);
  const bool keep_other = s.flag("keep_other", true);
  const std::string path = s.str("out", "");
  if (continuous.empty() && binary.empty()) throw ConfigError("expand needs --continuous and/or --binary columns");

  const CsvTable table = read_csv_file(data);
  std::vector<std::string> used;
  std::vector<std::size_t> cols;
  for (const auto& c : continuous) {
    spec.continuous.push_back(static_cast<int>(used.size()));
    cols.push_back(table.require_column(c));
    used.push_back(c);
  }
  for (const auto& c : binary) {
    spec.binary.push_back(static_cast<int>(used.size()));
    cols.push_back(table.require_column(c));
    used.push_back(c);
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          parse_number(table.rows[i][cols[j]], i + 1, used[j]);
  const ExpandedCovariates ex = expand_covariates(x, spec, used);

  CsvTable result;
  std::vector<std::size_t> other;
  if (keep_other)
    for (std::size_t j = 0; j < table.header.size(); ++j)
      if (std::find(cols.begin(), cols.end(), j) == cols.end()) other.push_back(j);
  for (auto j : other) result.header.push_back(table.header[j]);
  result.header.insert(result.header.end(), ex.names.begin(), ex.names.end());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    std::vector<std::string> row;
    for (auto j : other) row.push_back(table.rows[i][j]);
    for (Eigen::Index c = 0; c < ex.values.cols(); ++c)
      row.push_back(format_exact(ex.values(static_cast<Eigen::Index>(i), c)));
    result.rows.push_back(std::move(row));
  }
  detail::echo(err, s);
  detail::Sink sink(path, out);
  write_table(sink.get(), result);
  return kOk;
}

// ---------------------------------------------------------------------------

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Regression-adjusted treatment effects under covariate-adaptive randomization", "caradj"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  struct Command {
    CLI::App* app;
    FlagSet flags;
    std::string config;
    int (*run)(const KeyValueConfig&, std::ostream&, std::ostream&);
  };
  std::vector<std::unique_ptr<Command>> commands;
  auto add = [&](const std::string& name, const std::string& desc, auto run) {
    auto c = std::make_unique<Command>();
    c->app = app.add_subcommand(name, desc);
    c->app->add_option("--config", c->config, "key=value settings file; flags override it");
    c->run = run;
    commands.push_back(std::move(c));
    return commands.back().get();
  };

  auto scheme_flags = [](Command* c) {
    c->flags.add(c->app, "--scheme", "scheme", "sr, sbr, sbc, wei or ps");
    c->flags.add(c->app, "--pi", "pi", "target treated fraction (e.g. 0.5 or 2/3)");
    c->flags.add(c->app, "--block-size", "block_size", "stratified block size");
    c->flags.add(c->app, "--pbc", "pbc", "biased-coin probability for sbc and ps");
    c->flags.add(c->app, "--weights", "weights", "comma-separated minimization margin weights");
  };
  auto lasso_flags = [](Command* c) {
    c->flags.add(c->app, "--lambda", "lambda", "penalty choice: cv, rate or fixed");
    c->flags.add(c->app, "--lambda-value", "lambda_value", "fixed penalty for both arms");
    c->flags.add(c->app, "--lambda1", "lambda1", "fixed penalty, treated arm");
    c->flags.add(c->app, "--lambda0", "lambda0", "fixed penalty, control arm");
    c->flags.add(c->app, "--rate-constant", "rate_constant", "constant c in c*sqrt(log p / n)");
    c->flags.add(c->app, "--cv-folds", "cv_folds", "cross-validation folds");
  };

  Command* sim = add("simulate", "Monte Carlo replications of a simulation model", &cmd_simulate);
  sim->flags.add(sim->app, "--model", "model", "1, 2, 3, a comma list or all");
  sim->flags.add(sim->app, "--n", "n", "sample size");
  sim->flags.add(sim->app, "--reps", "reps", "replications");
  scheme_flags(sim);
  sim->flags.add(sim->app, "--p", "p", "covariate dimension for Lasso");
  sim->flags.add(sim->app, "--mu0", "mu0", "control intercept");
  sim->flags.add(sim->app, "--mu1", "mu1", "treated intercept");
  sim->flags.add(sim->app, "--estimators", "estimators", "comma list or 'all'");
  lasso_flags(sim);
  sim->flags.add(sim->app, "--level", "level", "confidence level");
  sim->flags.add(sim->app, "--df-policy", "df_policy", "strict or floor");
  sim->flags.add(sim->app, "--seed", "seed", "master seed");
  sim->flags.add(sim->app, "--threads", "threads", "worker threads (output does not depend on it)");
  sim->flags.add(sim->app, "--format", "format", "csv, markdown or json");
  sim->flags.add(sim->app, "--out", "out", "write the report here instead of stdout");
  bool sim_json = false;
  sim->app->add_flag("--json", sim_json, "same as --format json");

  Command* ana = add("analyze", "Estimate the treatment effect of a trial CSV", &cmd_analyze);
  ana->flags.add(ana->app, "--data", "data", "input CSV");
  ana->flags.add(ana->app, "--outcome", "outcome", "outcome column");
  ana->flags.add(ana->app, "--assignment", "assignment", "0/1 assignment column");
  ana->flags.add(ana->app, "--stratum", "stratum", "stratum label column");
  ana->flags.add(ana->app, "--covariates", "covariates", "comma list, 'auto' (all other columns) or 'none'");
  ana->flags.add(ana->app, "--estimators", "estimators", "comma list or 'all'");
  lasso_flags(ana);
  ana->flags.add(ana->app, "--level", "level", "confidence level");
  ana->flags.add(ana->app, "--pi", "pi", "allocation used in the variance; default is the observed n1/n");
  ana->flags.add(ana->app, "--df-policy", "df_policy", "strict or floor");
  ana->flags.add(ana->app, "--ols-centered", "ols_centered", "pooled OLS on stratum-centered covariates (true/false)");
  ana->flags.add(ana->app, "--min-units", "min_units", "smallest stratum-arm cell for specific fits");
  ana->flags.add(ana->app, "--fallback", "fallback", "use the common fit for small cells (true/false)");
  ana->flags.add(ana->app, "--seed", "seed", "seed for cross-validation folds");
  bool ana_json = false;
  ana->app->add_flag("--json", ana_json, "machine-readable output");

  Command* ran = add("randomize", "Append a treatment assignment column to a CSV", &cmd_randomize);
  ran->flags.add(ran->app, "--data", "data", "input CSV in arrival order");
  scheme_flags(ran);
  ran->flags.add(ran->app, "--stratum", "stratum", "stratum column for stratified schemes");
  ran->flags.add(ran->app, "--margins", "margins", "comma list of minimization factor columns");
  ran->flags.add(ran->app, "--column", "column", "name of the new column");
  ran->flags.add(ran->app, "--seed", "seed", "seed");
  ran->flags.add(ran->app, "--out", "out", "output CSV path");

  Command* exp = add("expand", "Polynomial and interaction expansion of covariate columns", &cmd_expand);
  exp->flags.add(exp->app, "--data", "data", "input CSV");
  exp->flags.add(exp->app, "--continuous", "continuous", "comma list of continuous columns");
  exp->flags.add(exp->app, "--binary", "binary", "comma list of 0/1 columns");
  exp->flags.add(exp->app, "--degree", "degree", "highest power of continuous columns");
  exp->flags.add(exp->app, "--depth", "depth", "1: no products, 2: pairwise products");
  exp->flags.add(exp->app, "--cross", "cross", "continuous-by-binary products (true/false)");
  exp->flags.add(exp->app, "--keep-constant", "keep_constant", "keep constant generated columns (true/false)");
  exp->flags.add(exp->app, "--keep-other", "keep_other", "copy the non-expanded columns first (true/false)");
  exp->flags.add(exp->app, "--out", "out", "output CSV path");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    for (const auto& c : commands)
      if (c->app->parsed()) {
        err << c->app->help();
        return kUsage;
      }
    err << app.help();
    return kUsage;
  }

  for (const auto& c : commands) {
    if (!c->app->parsed()) continue;
    try {
      KeyValueConfig kv = c->flags.resolve(c->config);
      if (c.get() == sim && sim_json) kv.set("format", "json");
      if (c.get() == ana && ana_json) kv.set("json", "true");
      return c->run(kv, out, err);
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << '\n';
      return kUsage;
    } catch (const SchemaError& e) {
      err << "error: " << e.what() << '\n';
      return kUsage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kRuntime;
    }
  }
  return kUsage;
}

}  // namespace caradj::cli
