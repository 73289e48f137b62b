#include "omit/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace omit {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool is_na_token(const std::string& cell) {
  std::string c = lower(trim(cell));
  return c.empty() || c == "na" || c == "nan";
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& cell, int row, const std::string& col) {
  std::string c = trim(cell);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
  if (ec != std::errc() || ptr != c.data() + c.size()) {
    throw CsvError("malformed numeric cell '" + cell + "' at row " + std::to_string(row) +
                   ", column '" + col + "'");
  }
  return v;
}

}  // namespace

void ObservationTable::validate() const {
  const int m = n();
  if (m < 1) throw std::invalid_argument("ObservationTable: need at least one unit");
  if (X.rows() != m || t.size() != m || r.size() != m) {
    throw std::invalid_argument("ObservationTable: inconsistent sizes");
  }
  for (int i = 0; i < m; ++i) {
    if (r(i) != 0 && r(i) != 1) throw std::invalid_argument("ObservationTable: r must be 0/1");
    if (r(i) == 1 && t(i) != kMissing) {
      throw std::invalid_argument("ObservationTable: t present where r = 1");
    }
    if (r(i) == 0 && t(i) != 0 && t(i) != 1) {
      throw std::invalid_argument("ObservationTable: observed t must be 0/1");
    }
    if (!std::isfinite(y(i))) throw std::invalid_argument("ObservationTable: non-finite outcome");
  }
  if (!X.allFinite()) throw std::invalid_argument("ObservationTable: non-finite covariate");
}

ObservationTable ObservationTable::complete_case_view() const {
  const int m = n_obs();
  ObservationTable out;
  out.X.resize(m, d());
  out.y.resize(m);
  out.t.resize(m);
  out.r = Eigen::VectorXi::Zero(m);
  out.covariate_names = covariate_names;
  out.outcome_name = outcome_name;
  out.treatment_name = treatment_name;
  int k = 0;
  for (int i = 0; i < n(); ++i) {
    if (r(i) == 0) {
      out.X.row(k) = X.row(i);
      out.y(k) = y(i);
      out.t(k) = t(i);
      ++k;
    }
  }
  return out;
}

PotentialOutcomeTable PotentialOutcomeTable::from(Eigen::VectorXd y1_in, Eigen::VectorXd y0_in) {
  PotentialOutcomeTable po;
  po.y1 = std::move(y1_in);
  po.y0 = std::move(y0_in);
  po.tau_fp = (po.y1 - po.y0).mean();
  return po;
}

ObservationTable load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open file: " + path);
  if (schema.covariates.empty()) throw CsvError("schema needs at least one covariate column");

  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty file: " + path);
  auto header = split_line(line);
  for (auto& h : header) h = trim(h);

  auto col_index = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw CsvError("column '" + name + "' not found in header");
    return static_cast<int>(it - header.begin());
  };
  const int yi = col_index(schema.outcome);
  const int ti = col_index(schema.treatment);
  std::vector<int> xi;
  xi.reserve(schema.covariates.size());
  for (const auto& c : schema.covariates) xi.push_back(col_index(c));

  std::vector<double> ys;
  std::vector<int> ts, rs;
  std::vector<std::vector<double>> xs;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() < header.size()) {
      throw CsvError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                     " cells, expected " + std::to_string(header.size()));
    }
    if (is_na_token(cells[yi])) {
      throw CsvError("missing outcome at row " + std::to_string(row) +
                     " (only treatment missingness is supported)");
    }
    ys.push_back(parse_double(cells[yi], row, schema.outcome));

    const std::string tc = trim(cells[ti]);
    if (is_na_token(tc)) {
      ts.push_back(ObservationTable::kMissing);
      rs.push_back(1);
    } else if (tc == "0" || tc == "1") {
      ts.push_back(tc == "1" ? 1 : 0);
      rs.push_back(0);
    } else {
      throw CsvError("treatment cell must be 0, 1 or NA; got '" + tc + "' at row " +
                     std::to_string(row) + ", column '" + schema.treatment + "'");
    }

    std::vector<double> xrow;
    xrow.reserve(xi.size());
    for (size_t j = 0; j < xi.size(); ++j) {
      if (is_na_token(cells[xi[j]])) {
        throw CsvError("missing covariate at row " + std::to_string(row) + ", column '" +
                       schema.covariates[j] + "' (covariate missingness is not supported)");
      }
      xrow.push_back(parse_double(cells[xi[j]], row, schema.covariates[j]));
    }
    xs.push_back(std::move(xrow));
  }

  const int n = static_cast<int>(ys.size());
  if (n < 1) throw CsvError("no data rows in " + path);
  if (std::all_of(rs.begin(), rs.end(), [](int v) { return v == 1; })) {
    throw CsvError("all treatments missing: nothing to fit models on");
  }

  ObservationTable table;
  table.X.resize(n, static_cast<int>(xi.size()));
  table.y.resize(n);
  table.t.resize(n);
  table.r.resize(n);
  for (int i = 0; i < n; ++i) {
    table.y(i) = ys[i];
    table.t(i) = ts[i];
    table.r(i) = rs[i];
    for (size_t j = 0; j < xi.size(); ++j) table.X(i, static_cast<int>(j)) = xs[i][j];
  }
  table.covariate_names = schema.covariates;
  table.outcome_name = schema.outcome;
  table.treatment_name = schema.treatment;
  table.validate();
  return table;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {
void write_header_and_rows(std::ofstream& out, const ObservationTable& table,
                           const Eigen::VectorXi* t_star) {
  for (const auto& c : table.covariate_names) out << c << ',';
  out << table.treatment_name << ',' << table.outcome_name;
  if (t_star) out << ",t_star,imputed";
  out << '\n';
  for (int i = 0; i < table.n(); ++i) {
    for (int j = 0; j < table.d(); ++j) out << format_double(table.X(i, j)) << ',';
    if (table.r(i) == 0) out << table.t(i);
    out << ',' << format_double(table.y(i));
    if (t_star) out << ',' << (*t_star)(i) << ',' << table.r(i);
    out << '\n';
  }
}
}  // namespace

void write_csv(const std::string& path, const ObservationTable& table) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot write file: " + path);
  write_header_and_rows(out, table, nullptr);
}

void write_completed_csv(const std::string& path, const CompletedDataset& ds) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot write file: " + path);
  write_header_and_rows(out, *ds.base, &ds.t_star);
}

ColumnTransform standardize(Eigen::Ref<Eigen::VectorXd> v, const std::string& name) {
  const auto n = v.size();
  if (n < 2) throw std::invalid_argument("standardize: need at least two values");
  const double mean = v.mean();
  const double ss = (v.array() - mean).square().sum();
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) {
    throw std::invalid_argument("constant column" + (name.empty() ? "" : ": " + name));
  }
  v = (v.array() - mean) / sd;
  return {mean, sd};
}

std::pair<ObservationTable, std::vector<ColumnTransform>> standardize_columns(
    const ObservationTable& table, const std::vector<int>& columns) {
  ObservationTable out = table;
  std::vector<ColumnTransform> transforms;
  transforms.reserve(columns.size());
  for (int c : columns) {
    if (c < 0 || c >= out.d()) throw std::invalid_argument("standardize_columns: bad column index");
    Eigen::VectorXd col = out.X.col(c);
    transforms.push_back(standardize(col, out.covariate_names.empty()
                                              ? std::to_string(c)
                                              : out.covariate_names[c]));
    out.X.col(c) = col;
  }
  return {std::move(out), std::move(transforms)};
}

}  // namespace omit
