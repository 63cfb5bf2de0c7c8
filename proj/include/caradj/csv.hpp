#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "caradj/errors.hpp"
#include "caradj/trial_data.hpp"

namespace caradj {

/// Header plus raw string cells of a comma-separated file.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return j;
    return std::nullopt;
  }

  std::size_t require_column(std::string_view name) const {
    if (auto j = column(name)) return *j;
    throw SchemaError("missing column '" + std::string(name) + "'");
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Double quotes group fields; "" inside quotes is a literal quote.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace detail

inline CsvTable parse_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      if (line.empty()) continue;
      t.header = detail::split_csv_line(line);
      have_header = true;
      continue;
    }
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != t.header.size())
      throw ParseError("row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(cells.size()) +
                           " cells, header has " + std::to_string(t.header.size()),
                       t.rows.size() + 1);
    t.rows.push_back(std::move(cells));
  }
  if (!have_header) throw SchemaError("file has no header row");
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  return parse_csv(in);
}

/// Strict numeric parse of a whole cell; `row` is 1-based for messages.
inline double parse_number(const std::string& cell, std::size_t row, std::string_view column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last)
    throw ParseError("row " + std::to_string(row) + ", column '" + std::string(column) + "': '" + cell +
                         "' is not a number",
                     row);
  return v;
}

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_exact(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// Roles of the columns of an analysis file.
struct ColumnSchema {
  std::string outcome;
  std::string assignment;
  std::string stratum;
  std::vector<std::string> covariates;
};

inline TrialDataset dataset_from_table(const CsvTable& t, const ColumnSchema& schema) {
  const std::size_t jy = t.require_column(schema.outcome);
  const std::size_t ja = t.require_column(schema.assignment);
  const std::size_t jb = t.require_column(schema.stratum);
  std::vector<std::size_t> jx;
  for (const auto& c : schema.covariates) jx.push_back(t.require_column(c));

  const auto n = static_cast<Eigen::Index>(t.rows.size());
  if (n == 0) throw ValidationError("file has no data rows");
  TrialDataset ds;
  ds.outcomes.resize(n);
  ds.covariates.resize(n, static_cast<Eigen::Index>(jx.size()));
  ds.covariate_names = schema.covariates;
  ds.assignments.resize(static_cast<std::size_t>(n));
  ds.strata.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = t.rows[static_cast<std::size_t>(i)];
    const auto row = static_cast<std::size_t>(i) + 1;
    ds.outcomes[i] = parse_number(r[jy], row, schema.outcome);
    const double a = parse_number(r[ja], row, schema.assignment);
    if (a != 0.0 && a != 1.0)
      throw ParseError("row " + std::to_string(row) + ": assignment '" + r[ja] + "' is not 0 or 1", row);
    ds.assignments[static_cast<std::size_t>(i)] = static_cast<int>(a);
    if (r[jb].empty()) throw ParseError("row " + std::to_string(row) + ": empty stratum label", row);
    ds.strata[static_cast<std::size_t>(i)] = ds.coding.encode(r[jb]);
    for (std::size_t j = 0; j < jx.size(); ++j)
      ds.covariates(i, static_cast<Eigen::Index>(j)) = parse_number(r[jx[j]], row, schema.covariates[j]);
  }
  ds.validate();
  return ds;
}

inline TrialDataset load_csv(const std::string& path, const ColumnSchema& schema) {
  return dataset_from_table(read_csv_file(path), schema);
}

/// Writes outcome, assignment, stratum label and covariates with
/// round-trip-exact number formatting.
inline void write_csv(std::ostream& out, const TrialDataset& ds, const ColumnSchema& schema) {
  out << detail::quote_if_needed(schema.outcome) << ',' << detail::quote_if_needed(schema.assignment) << ','
      << detail::quote_if_needed(schema.stratum);
  for (const auto& c : schema.covariates) out << ',' << detail::quote_if_needed(c);
  out << '\n';
  for (int i = 0; i < ds.size(); ++i) {
    out << format_exact(ds.outcomes[i]) << ',' << ds.assignments[static_cast<std::size_t>(i)] << ','
        << detail::quote_if_needed(ds.coding.decode(ds.strata[static_cast<std::size_t>(i)]));
    for (Eigen::Index j = 0; j < ds.covariates.cols(); ++j) out << ',' << format_exact(ds.covariates(i, j));
    out << '\n';
  }
}

inline void write_table(std::ostream& out, const CsvTable& t) {
  for (std::size_t j = 0; j < t.header.size(); ++j) out << (j ? "," : "") << detail::quote_if_needed(t.header[j]);
  out << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << detail::quote_if_needed(r[j]);
    out << '\n';
  }
}

}  // namespace caradj
