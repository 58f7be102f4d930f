#include "zabs/io/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "zabs/errors.hpp"

namespace zabs::io {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

}  // namespace

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file: " + path);

  Dataset out;
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty data file: " + path);
  out.columns = split_line(line);
  if (out.columns.empty()) throw DataError("no header columns in " + path);

  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != out.columns.size()) {
      throw DataError("row " + std::to_string(lineno) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(out.columns.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string& c = cells[j];
      if (c.empty()) {
        throw DataError("missing value at row " + std::to_string(lineno) +
                        ", column '" + out.columns[j] + "'");
      }
      double v;
      const auto* first = c.data();
      const auto* last = c.data() + c.size();
      const auto res = std::from_chars(first, last, v);
      if (res.ec != std::errc{} || res.ptr != last) {
        throw DataError("malformed numeric cell '" + c + "' at row " +
                        std::to_string(lineno) + ", column '" +
                        out.columns[j] + "'");
      }
      row[j] = v;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("no data rows in " + path);

  out.cells.resize(static_cast<int>(rows.size()),
                   static_cast<int>(out.columns.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      out.cells(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    }
  }
  return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& columns) {
  std::ofstream outf(path);
  if (!outf) throw DataError("cannot write " + path);
  for (std::size_t j = 0; j < header.size(); ++j) {
    outf << (j ? "," : "") << header[j];
  }
  outf << "\n";
  outf.precision(17);
  for (int i = 0; i < columns.rows(); ++i) {
    for (int j = 0; j < columns.cols(); ++j) {
      outf << (j ? "," : "") << columns(i, j);
    }
    outf << "\n";
  }
}

}  // namespace zabs::io
