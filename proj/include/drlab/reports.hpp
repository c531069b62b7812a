#pragma once

#include <string>
#include <vector>

namespace drlab {

std::string format_double(double v);  // shortest round-trippable decimal

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(const std::vector<double>& values);
  void add_row_mixed(const std::vector<std::string>& cells);
  void write(const std::string& path) const;
  static CsvTable read(const std::string& path);

  bool operator==(const CsvTable& other) const = default;
};

void ensure_directory(const std::string& path);

}  // namespace drlab
