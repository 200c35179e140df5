#include "rescop/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unordered_map>
#include <vector>

#include "rescop/errors.hpp"

namespace rescop {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    raise(Errc::non_numeric_cell, "row " + std::to_string(row) + ", column " +
                                      col + ": cannot parse '" + cell + "'");
  }
  if (!std::isfinite(value)) {
    raise(Errc::non_finite_value, "row " + std::to_string(row) + ", column " +
                                      col + ": value is not finite");
  }
  return value;
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    raise(Errc::non_finite_value,
          std::string(what) + " contains a non-finite value");
  }
}

}  // namespace

ObservationSet::ObservationSet(Eigen::MatrixXd y, Eigen::MatrixXd x)
    : y_(std::move(y)), x_(std::move(x)) {
  if (y_.rows() != x_.rows()) {
    raise(Errc::length_mismatch,
          "responses have " + std::to_string(y_.rows()) +
              " rows but covariates have " + std::to_string(x_.rows()));
  }
  if (y_.rows() < 2) {
    raise(Errc::row_count_too_small,
          "need at least 2 rows, got " + std::to_string(y_.rows()));
  }
  if (y_.cols() < 2) {
    raise(Errc::invalid_argument,
          "need at least 2 response columns, got " + std::to_string(y_.cols()));
  }
  if (x_.cols() < 1) {
    raise(Errc::invalid_argument, "need at least 1 covariate column");
  }
  check_finite(y_, "response matrix");
  check_finite(x_, "covariate matrix");
}

ObservationSet load_csv(const std::string& path, int d, int q) {
  if (d < 2) raise(Errc::invalid_argument, "d must be >= 2");
  if (q < 1) raise(Errc::invalid_argument, "q must be >= 1");

  std::ifstream in(path);
  if (!in) raise(Errc::io_failure, "cannot open '" + path + "' for reading");

  std::string line;
  if (!std::getline(in, line)) {
    raise(Errc::row_count_too_small, "'" + path + "' is empty");
  }
  const auto header = split_line(line);
  std::unordered_map<std::string, int> position;
  for (std::size_t i = 0; i < header.size(); ++i) {
    position.emplace(header[i], static_cast<int>(i));
  }

  std::vector<std::string> wanted;
  for (int j = 1; j <= d; ++j) wanted.push_back("y" + std::to_string(j));
  for (int j = 1; j <= q; ++j) wanted.push_back("x" + std::to_string(j));
  std::vector<int> columns;
  for (const auto& name : wanted) {
    auto it = position.find(name);
    if (it == position.end()) {
      raise(Errc::missing_column, "'" + path + "' has no column '" + name + "'");
    }
    columns.push_back(it->second);
  }

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    std::vector<double> row;
    row.reserve(wanted.size());
    for (std::size_t k = 0; k < wanted.size(); ++k) {
      const int c = columns[k];
      if (c >= static_cast<int>(cells.size())) {
        raise(Errc::non_numeric_cell,
              "row " + std::to_string(lineno) + " has too few fields");
      }
      row.push_back(parse_cell(cells[c], lineno, wanted[k]));
    }
    rows.push_back(std::move(row));
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n < 2) {
    raise(Errc::row_count_too_small,
          "'" + path + "' has " + std::to_string(n) + " data rows, need >= 2");
  }
  Eigen::MatrixXd y(n, d);
  Eigen::MatrixXd x(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) y(i, j) = rows[i][j];
    for (int j = 0; j < q; ++j) x(i, j) = rows[i][d + j];
  }
  return ObservationSet(std::move(y), std::move(x));
}

void save_csv(const ObservationSet& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_failure, "cannot open '" + path + "' for writing");

  for (Eigen::Index j = 0; j < data.d(); ++j) {
    if (j) out << ',';
    out << 'y' << (j + 1);
  }
  for (Eigen::Index j = 0; j < data.q(); ++j) {
    out << ",x" << (j + 1);
  }
  out << '\n';

  char buf[64];
  auto write_value = [&](double v, bool lead_comma) {
    if (lead_comma) out << ',';
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    out.write(buf, ptr - buf);
  };
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.d(); ++j) write_value(data.y()(i, j), j > 0);
    for (Eigen::Index j = 0; j < data.q(); ++j) write_value(data.x()(i, j), true);
    out << '\n';
  }
  if (!out) raise(Errc::io_failure, "failed writing '" + path + "'");
}

}  // namespace rescop
