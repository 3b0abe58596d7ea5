#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace specrl {

// ============================================================================
//  Minimal CSV writing
// ============================================================================

inline std::string csv_quote(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_number(double v, int precision = 10) {
  std::ostringstream ss;
  ss << std::setprecision(precision) << v;
  return ss.str();
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns)
      : out_(path), columns_(static_cast<int>(columns.size())) {
    if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_cells(columns);
  }

  void row(const std::vector<std::string>& cells) {
    if (static_cast<int>(cells.size()) != columns_)
      throw std::invalid_argument("csv row width does not match the header");
    write_cells(cells);
  }

 private:
  void write_cells(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      out_ << (i ? "," : "") << csv_quote(cells[i]);
    out_ << '\n';
  }

  std::ofstream out_;
  int columns_;
};

}  // namespace specrl
