#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace ctl {

// 17 significant digits, '.' decimal separator; round-trips exactly.
std::string format_double(double value);

// Minimal CSV emitter: UTF-8, header row, one line per row() call.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  template <typename... Cells>
  void row(const Cells&... cells) {
    std::vector<std::string> formatted;
    formatted.reserve(sizeof...(cells));
    (formatted.push_back(format_cell(cells)), ...);
    write_row(formatted);
  }

  void write_row(const std::vector<std::string>& cells);

 private:
  static std::string format_cell(double v) { return format_double(v); }
  static std::string format_cell(int v) { return std::to_string(v); }
  static std::string format_cell(long v) { return std::to_string(v); }
  static std::string format_cell(unsigned long v) { return std::to_string(v); }
  static std::string format_cell(unsigned long long v) { return std::to_string(v); }
  static std::string format_cell(const std::string& v) { return v; }
  static std::string format_cell(const char* v) { return v; }

  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace ctl
