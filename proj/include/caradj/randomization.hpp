#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "caradj/errors.hpp"
#include "caradj/rng.hpp"

namespace caradj {

enum class SchemeKind { Simple, StratifiedBlock, StratifiedBiasedCoin, WeiAdaptive, PocockSimon };

inline const char* scheme_code(SchemeKind k) {
  switch (k) {
    case SchemeKind::Simple: return "sr";
    case SchemeKind::StratifiedBlock: return "sbr";
    case SchemeKind::StratifiedBiasedCoin: return "sbc";
    case SchemeKind::WeiAdaptive: return "wei";
    case SchemeKind::PocockSimon: return "ps";
  }
  return "?";
}

inline SchemeKind parse_scheme(const std::string& code) {
  if (code == "sr" || code == "simple") return SchemeKind::Simple;
  if (code == "sbr" || code == "block") return SchemeKind::StratifiedBlock;
  if (code == "sbc" || code == "efron") return SchemeKind::StratifiedBiasedCoin;
  if (code == "wei") return SchemeKind::WeiAdaptive;
  if (code == "ps" || code == "minimization") return SchemeKind::PocockSimon;
  throw ConfigError("unknown randomization scheme '" + code + "' (expected sr, sbr, sbc, wei or ps)");
}

/// A sequential treatment-assignment rule and its parameters.
struct RandomizationScheme {
  SchemeKind kind = SchemeKind::Simple;
  double pi = 0.5;
  int block_size = 6;
  double bias = 0.75;                  // p_bc for the biased coin and minimization
  std::vector<double> margin_weights;  // minimization; empty means equal weights

  int ones_per_block() const { return static_cast<int>(std::lround(block_size * pi)); }

  void validate() const {
    if (kind == SchemeKind::Simple) {
      if (!(pi >= 0.0 && pi <= 1.0)) throw ConfigError("simple randomization needs pi in [0, 1]");
      return;
    }
    if (!(pi > 0.0 && pi < 1.0)) throw ConfigError("target allocation pi must lie in (0, 1)");
    switch (kind) {
      case SchemeKind::StratifiedBlock: {
        if (block_size < 2) throw ConfigError("block size must be at least 2");
        const double ones = block_size * pi;
        if (std::abs(ones - std::round(ones)) > 1e-9)
          throw ConfigError("block size " + std::to_string(block_size) + " times pi " + std::to_string(pi) +
                            " is not an integer");
        break;
      }
      case SchemeKind::StratifiedBiasedCoin:
      case SchemeKind::PocockSimon:
        if (!(bias > 0.5 && bias <= 1.0)) throw ConfigError("biased-coin probability must lie in (0.5, 1]");
        break;
      default:
        break;
    }
    if (kind == SchemeKind::PocockSimon && !margin_weights.empty()) {
      double sum = 0.0;
      for (double w : margin_weights) {
        if (w < 0.0) throw ConfigError("margin weights must be non-negative");
        sum += w;
      }
      if (sum <= 0.0) throw ConfigError("margin weights must have a positive sum");
    }
  }
};

/// What the rule sees about an arriving unit.
struct Unit {
  int stratum = 0;
  std::vector<int> margins;  // one level per stratification factor (minimization)
};

struct ArmCounts {
  int treated = 0;
  int control = 0;
  int total() const noexcept { return treated + control; }
};

/// Running tallies of a sequential assignment. Single-threaded.
class AssignmentState {
 public:
  explicit AssignmentState(RandomizationScheme scheme) : scheme_(std::move(scheme)) { scheme_.validate(); }

  const RandomizationScheme& scheme() const noexcept { return scheme_; }

  ArmCounts stratum_counts(int k) const {
    return k >= 0 && static_cast<std::size_t>(k) < strata_.size() ? strata_[static_cast<std::size_t>(k)] : ArmCounts{};
  }
  ArmCounts margin_counts(std::size_t margin, int level) const {
    if (margin >= margins_.size()) return {};
    auto it = margins_[margin].find(level);
    return it == margins_[margin].end() ? ArmCounts{} : it->second;
  }
  /// Remaining (not yet used) slots of the current block of stratum k.
  std::size_t block_residue(int k) const {
    return static_cast<std::size_t>(k) < blocks_.size() ? blocks_[static_cast<std::size_t>(k)].size() : 0;
  }
  std::size_t assigned() const noexcept { return assigned_; }

  /// Overwrite the tallies of stratum k (testing forced states).
  void set_stratum_counts(int k, ArmCounts c) { stratum_slot(k) = c; }
  void set_margin_counts(std::size_t margin, int level, ArmCounts c) { margin_slot(margin)[level] = c; }

  /// Probability that the next unit is treated, for rules whose draw is a
  /// single biased coin. Stratified block randomization is excluded.
  double treatment_probability(const Unit& u) const {
    const double pi = scheme_.pi;
    switch (scheme_.kind) {
      case SchemeKind::Simple:
        return pi;
      case SchemeKind::StratifiedBiasedCoin: {
        const double d = deficit(stratum_counts(u.stratum));
        if (std::abs(d) < 1e-9) return 0.5;
        return d > 0.0 ? 1.0 - scheme_.bias : scheme_.bias;
      }
      case SchemeKind::WeiAdaptive: {
        const ArmCounts c = stratum_counts(u.stratum);
        const double x = c.total() > 0 ? deficit(c) / c.total() : 0.0;
        return std::clamp(pi - x / 2.0, 0.0, 1.0);
      }
      case SchemeKind::PocockSimon: {
        const double g1 = minimization_score(u, 1);
        const double g0 = minimization_score(u, 0);
        if (std::abs(g1 - g0) <= 1e-9 * (1.0 + std::abs(g1) + std::abs(g0))) return pi;
        return g1 < g0 ? scheme_.bias : 1.0 - scheme_.bias;
      }
      case SchemeKind::StratifiedBlock:
        break;
    }
    throw Error("treatment_probability is not defined for stratified block randomization");
  }

  /// Weighted imbalance over the unit's margin levels if it joined `arm`.
  double minimization_score(const Unit& u, int arm) const {
    const double pi = scheme_.pi;
    double score = 0.0;
    for (std::size_t j = 0; j < u.margins.size(); ++j) {
      const double w = scheme_.margin_weights.empty() ? 1.0 : scheme_.margin_weights.at(j);
      ArmCounts c = margin_counts(j, u.margins[j]);
      (arm == 1 ? c.treated : c.control) += 1;
      score += w * std::abs(c.treated / pi - c.control / (1.0 - pi));
    }
    return score;
  }

  int assign_next(const Unit& u, CounterRng& rng) {
    if (u.stratum < 0) throw Error("unit has a negative stratum index");
    if (scheme_.kind == SchemeKind::PocockSimon && !scheme_.margin_weights.empty() &&
        u.margins.size() != scheme_.margin_weights.size())
      throw Error("unit margin count does not match the minimization weights");
    int a;
    if (scheme_.kind == SchemeKind::StratifiedBlock) {
      auto& block = block_slot(u.stratum);
      if (block.empty()) refill_block(block, rng);
      a = block.back();
      block.pop_back();
    } else {
      a = rng.bernoulli(treatment_probability(u)) ? 1 : 0;
    }
    record(u, a);
    return a;
  }

  void record(const Unit& u, int a) {
    auto& c = stratum_slot(u.stratum);
    (a == 1 ? c.treated : c.control) += 1;
    for (std::size_t j = 0; j < u.margins.size(); ++j) {
      auto& m = margin_slot(j)[u.margins[j]];
      (a == 1 ? m.treated : m.control) += 1;
    }
    ++assigned_;
  }

 private:
  double deficit(ArmCounts c) const { return c.treated - scheme_.pi * c.total(); }

  ArmCounts& stratum_slot(int k) {
    if (static_cast<std::size_t>(k) >= strata_.size()) strata_.resize(static_cast<std::size_t>(k) + 1);
    return strata_[static_cast<std::size_t>(k)];
  }
  std::unordered_map<int, ArmCounts>& margin_slot(std::size_t j) {
    if (j >= margins_.size()) margins_.resize(j + 1);
    return margins_[j];
  }
  std::vector<int>& block_slot(int k) {
    if (static_cast<std::size_t>(k) >= blocks_.size()) blocks_.resize(static_cast<std::size_t>(k) + 1);
    return blocks_[static_cast<std::size_t>(k)];
  }

  // Stored reversed so pop_back yields the permutation in order.
  void refill_block(std::vector<int>& block, CounterRng& rng) const {
    const int size = scheme_.block_size;
    const int ones = scheme_.ones_per_block();
    block.assign(static_cast<std::size_t>(size), 0);
    std::fill(block.begin(), block.begin() + ones, 1);
    for (int i = size - 1; i > 0; --i) {
      const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(block[static_cast<std::size_t>(i)], block[static_cast<std::size_t>(j)]);
    }
  }

  RandomizationScheme scheme_;
  std::vector<ArmCounts> strata_;
  std::vector<std::unordered_map<int, ArmCounts>> margins_;
  std::vector<std::vector<int>> blocks_;
  std::size_t assigned_ = 0;
};

/// Assigns `units` in order. The draw for unit i comes from stream
/// key.child(i), so the result depends only on (scheme, units, key).
inline std::vector<int> assign_all(const RandomizationScheme& scheme, const std::vector<Unit>& units, StreamKey key) {
  AssignmentState state(scheme);
  std::vector<int> out;
  out.reserve(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    CounterRng rng(key.child(static_cast<std::uint64_t>(i)));
    out.push_back(state.assign_next(units[i], rng));
  }
  return out;
}

inline std::vector<int> assign_all(const RandomizationScheme& scheme, const std::vector<Unit>& units, std::uint64_t seed) {
  return assign_all(scheme, units, StreamKey(seed));
}

}  // namespace caradj
