#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "caradj/errors.hpp"

namespace caradj {

/// Which input columns are continuous or binary and which terms to generate.
///
/// Term order of the output: continuous powers (each column in input order
/// contributes c, c^2, ..., c^degree), continuous pairwise products, binary
/// linear terms, binary pairwise products, then cross products of every
/// continuous-set term with every binary-set term.
struct ExpansionSpec {
  std::vector<int> continuous;
  std::vector<int> binary;
  int degree = 3;
  int interaction_depth = 2;  // 1: no products, 2: pairwise products
  bool cross_interactions = true;
  bool drop_constant = true;
};

struct ExpandedCovariates {
  Eigen::MatrixXd values;
  std::vector<std::string> names;
};

namespace detail {

inline std::string power_name(const std::string& base, int d) {
  return d == 1 ? base : base + "^" + std::to_string(d);
}

}  // namespace detail

inline ExpandedCovariates expand_covariates(const Eigen::MatrixXd& x, const ExpansionSpec& spec,
                                            const std::vector<std::string>& names = {}) {
  if (spec.degree < 1) throw ValidationError("expansion: degree must be at least 1");
  if (spec.interaction_depth < 1 || spec.interaction_depth > 2)
    throw ValidationError("expansion: interaction depth must be 1 or 2");
  auto check_index = [&](int j) {
    if (j < 0 || j >= x.cols()) throw ValidationError("expansion: column index " + std::to_string(j) + " out of range");
  };
  auto name_of = [&](int j) {
    return names.empty() ? "x" + std::to_string(j + 1) : names.at(static_cast<std::size_t>(j));
  };
  for (int j : spec.continuous) check_index(j);
  for (int j : spec.binary) {
    check_index(j);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (x(i, j) != 0.0 && x(i, j) != 1.0)
        throw ValidationError("expansion: column '" + name_of(j) + "' declared binary has value other than 0/1 at row " +
                              std::to_string(i + 1));
  }

  std::vector<Eigen::VectorXd> cols;
  std::vector<std::string> col_names;

  std::vector<Eigen::VectorXd> cont_terms;
  std::vector<std::string> cont_names;
  for (int j : spec.continuous) {
    Eigen::VectorXd pw = x.col(j);
    for (int d = 1; d <= spec.degree; ++d) {
      if (d > 1) pw = pw.cwiseProduct(x.col(j));
      cont_terms.push_back(pw);
      cont_names.push_back(detail::power_name(name_of(j), d));
    }
  }
  const bool pairs = spec.interaction_depth >= 2;
  if (pairs) {
    for (std::size_t a = 0; a < spec.continuous.size(); ++a)
      for (std::size_t b = a + 1; b < spec.continuous.size(); ++b) {
        cont_terms.push_back(x.col(spec.continuous[a]).cwiseProduct(x.col(spec.continuous[b])));
        cont_names.push_back(name_of(spec.continuous[a]) + "*" + name_of(spec.continuous[b]));
      }
  }

  std::vector<Eigen::VectorXd> bin_terms;
  std::vector<std::string> bin_names;
  for (int j : spec.binary) {
    bin_terms.push_back(x.col(j));
    bin_names.push_back(name_of(j));
  }
  if (pairs) {
    for (std::size_t a = 0; a < spec.binary.size(); ++a)
      for (std::size_t b = a + 1; b < spec.binary.size(); ++b) {
        bin_terms.push_back(x.col(spec.binary[a]).cwiseProduct(x.col(spec.binary[b])));
        bin_names.push_back(name_of(spec.binary[a]) + "*" + name_of(spec.binary[b]));
      }
  }

  cols = cont_terms;
  col_names = cont_names;
  cols.insert(cols.end(), bin_terms.begin(), bin_terms.end());
  col_names.insert(col_names.end(), bin_names.begin(), bin_names.end());
  if (pairs && spec.cross_interactions) {
    for (std::size_t a = 0; a < cont_terms.size(); ++a)
      for (std::size_t b = 0; b < bin_terms.size(); ++b) {
        cols.push_back(cont_terms[a].cwiseProduct(bin_terms[b]));
        col_names.push_back(cont_names[a] + "*" + bin_names[b]);
      }
  }

  ExpandedCovariates out;
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto& v = cols[c];
    const bool constant = v.size() == 0 || (v.array() == v[0]).all();
    if (!(spec.drop_constant && constant)) keep.push_back(c);
  }
  out.values.resize(x.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    out.values.col(static_cast<Eigen::Index>(c)) = cols[keep[c]];
    out.names.push_back(col_names[keep[c]]);
  }
  return out;
}

}  // namespace caradj
