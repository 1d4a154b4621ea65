#include "zipln/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace zipln {

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  Table t;
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw io_error(path.string() + ": empty file", 1);
  ++line_no;
  auto header = split_csv_line(line);
  if (header.size() < 2)
    throw io_error(path.string() + ": header must contain an id column and data columns", 1);
  t.id_header = header.front();
  t.col_names.assign(header.begin() + 1, header.end());
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw io_error(path.string() + ": wrong number of fields", line_no);
    t.row_ids.push_back(cells.front());
    t.cells.emplace_back(cells.begin() + 1, cells.end());
  }
  if (t.row_ids.empty()) throw io_error(path.string() + ": no data rows", line_no);
  return t;
}

Mat table_to_matrix(const Table& table, bool integral, const std::string& what) {
  Mat m(table.rows(), table.cols());
  for (Index i = 0; i < table.rows(); ++i)
    for (Index j = 0; j < table.cols(); ++j) {
      const std::string& cell = table.cells[i][j];
      char* end = nullptr;
      double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0')
        throw io_error(what + ": non-numeric cell '" + cell + "'", long(i) + 2);
      if (integral && (!(v >= 0.0) || v != std::floor(v)))
        throw io_error(what + ": counts must be nonnegative integers, got '" + cell + "'",
                       long(i) + 2);
      m(i, j) = v;
    }
  return m;
}

void write_matrix(const std::filesystem::path& path, const Mat& m,
                  const std::vector<std::string>& col_names,
                  const std::vector<std::string>* row_ids, const std::string& id_header) {
  if (Index(col_names.size()) != m.cols())
    throw validation_error("write_matrix: column-name count mismatch");
  std::ofstream out(path);
  if (!out) throw write_error("cannot write " + path.string());
  out << id_header;
  for (const auto& name : col_names) out << ',' << name;
  out << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    if (row_ids)
      out << (*row_ids)[size_t(i)];
    else
      out << (i + 1);
    for (Index j = 0; j < m.cols(); ++j) out << ',' << format_g17(m(i, j));
    out << '\n';
  }
  if (!out) throw write_error("write failed for " + path.string());
}

Mat read_matrix(const std::filesystem::path& path) {
  Table t = read_table(path);
  return table_to_matrix(t, false, path.string());
}

std::vector<std::string> default_names(const std::string& prefix, Index k) {
  std::vector<std::string> names;
  names.reserve(size_t(k));
  for (Index j = 1; j <= k; ++j) names.push_back(prefix + std::to_string(j));
  return names;
}

}  // namespace zipln
