#include "rnsgp/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

namespace rnsgp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& cell, int line, const std::string& column) {
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (cell.empty() || used != cell.size() || !std::isfinite(v)) {
    throw CsvError("line " + std::to_string(line) + ": column " + column +
                       " is not a finite number: '" + cell + "'",
                   line);
  }
  return v;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    cells.push_back(trim(cell));
  }
  if (!line.empty() && line.back() == ',') {
    cells.emplace_back();
  }
  return cells;
}

TimeSeriesDataset read_series_csv(std::istream& in, double default_noise_var) {
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv_line(line);
    }
  }
  if (header.empty()) {
    throw CsvError("empty CSV: expected a header with columns t,y", 0);
  }
  const int header_line = line_no;
  auto find = [&](const std::string& name) -> std::optional<size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      return std::nullopt;
    }
    return static_cast<size_t>(it - header.begin());
  };
  const auto col_t = find("t");
  const auto col_y = find("y");
  const auto col_r = find("r");
  if (!col_t || !col_y) {
    throw CsvError("line " + std::to_string(header_line) + ": header must contain t and y",
                   header_line);
  }
  if (!col_r && !(default_noise_var > 0.0)) {
    throw CsvError("no r column and the default noise variance is not positive", header_line);
  }

  std::vector<double> t;
  std::vector<double> y;
  std::vector<double> r;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw CsvError("line " + std::to_string(line_no) + ": expected " +
                         std::to_string(header.size()) + " columns, found " +
                         std::to_string(cells.size()),
                     line_no);
    }
    const double tv = parse_number(cells[*col_t], line_no, "t");
    if (!t.empty() && !(tv > t.back())) {
      throw CsvError("line " + std::to_string(line_no) + ": t is not strictly increasing (" +
                         cells[*col_t] + " after " + format_number(t.back()) + ")",
                     line_no);
    }
    t.push_back(tv);
    y.push_back(parse_number(cells[*col_y], line_no, "y"));
    if (col_r) {
      const double rv = parse_number(cells[*col_r], line_no, "r");
      if (!(rv > 0.0)) {
        throw CsvError("line " + std::to_string(line_no) + ": r must be positive", line_no);
      }
      r.push_back(rv);
    } else {
      r.push_back(default_noise_var);
    }
  }
  if (t.empty()) {
    throw CsvError("CSV has no data rows", line_no);
  }
  TimeSeriesDataset d;
  d.times = Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
  d.values = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  d.noise_var = Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
  d.validate();
  return d;
}

TimeSeriesDataset read_series_csv(const std::filesystem::path& file, double default_noise_var) {
  std::ifstream in(file);
  if (!in) {
    throw CsvError("cannot open " + file.string(), 0);
  }
  return read_series_csv(in, default_noise_var);
}

std::string format_number(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace rnsgp
