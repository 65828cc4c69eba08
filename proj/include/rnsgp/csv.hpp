#pragma once

#include "rnsgp/dataset.hpp"

#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rnsgp {

/// Malformed input; `line()` is the 1-based line in the file (0 if unknown).
class CsvError : public std::invalid_argument {
 public:
  CsvError(const std::string& what, int line) : std::invalid_argument(what), line_(line) {}
  [[nodiscard]] int line() const { return line_; }

 private:
  int line_;
};

/// Reads a header row containing t and y (and optionally r) followed by
/// numeric rows. Missing r falls back to `default_noise_var`. Times must be
/// strictly increasing; the first offending row is reported.
[[nodiscard]] TimeSeriesDataset read_series_csv(std::istream& in, double default_noise_var);
[[nodiscard]] TimeSeriesDataset read_series_csv(const std::filesystem::path& file,
                                                double default_noise_var);

/// Round-trip formatting ("%.17g"; non-finite values as nan / inf / -inf).
[[nodiscard]] std::string format_number(double v);

/// Splits one CSV line on commas and trims surrounding whitespace.
[[nodiscard]] std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace rnsgp
