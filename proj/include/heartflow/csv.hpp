#pragma once

// Minimal CSV helpers shared by the writers and CLI readers. Output is UTF-8,
// comma separated, '.' decimal, '\n' line endings, mandatory header row, and
// numbers printed with a fixed "%.12g" so reruns are byte-identical.

#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace heartflow::csv {

std::string format_number(double v);

class Writer {
 public:
  explicit Writer(const std::string& path);

  void header(const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);
  /// Row of pre-formatted cells (for mixed text/number rows).
  void cells(const std::vector<std::string>& values);

 private:
  std::ofstream out_;
  std::string path_;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  /// Index of a column; throws if absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
  double number(std::size_t row, std::size_t col) const;
};

/// Reads a headered CSV file. Blank lines and lines starting with '#' are
/// skipped; every data row must have as many cells as the header.
Table read(const std::string& path);

}  // namespace heartflow::csv
