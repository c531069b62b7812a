#include "drlab/reports.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "drlab/common.hpp"

namespace drlab {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void CsvTable::add_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  rows.push_back(std::move(cells));
}

void CsvTable::add_row_mixed(const std::vector<std::string>& cells) { rows.push_back(cells); }

void CsvTable::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(Errc::io, "cannot write CSV file '" + path + "'");
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

CsvTable CsvTable::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot read CSV file '" + path + "'");
  CsvTable t;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (header) {
      t.columns = std::move(cells);
      header = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) fail(Errc::io, "cannot create directory '" + path + "': " + ec.message());
}

}  // namespace drlab
