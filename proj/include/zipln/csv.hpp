#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "zipln/types.hpp"

namespace zipln {

/// Shortest representation that round-trips a double exactly (17 significant
/// digits).
std::string format_g17(double x);

/// Parsed CSV whose first column is a row identifier.
struct Table {
  std::string id_header;
  std::vector<std::string> row_ids;
  std::vector<std::string> col_names;
  std::vector<std::vector<std::string>> cells;

  Index rows() const { return Index(row_ids.size()); }
  Index cols() const { return Index(col_names.size()); }
};

/// Reads a CSV with header row and id column. Malformed rows raise io_error
/// carrying the 1-based line number.
Table read_table(const std::filesystem::path& path);

/// Numeric conversion of a Table; `integral` additionally requires
/// nonnegative integer cells (count matrices).
Mat table_to_matrix(const Table& table, bool integral, const std::string& what);

/// Writes id column + header + matrix rows with 17-digit reals. Row ids
/// default to 1..n when not supplied.
void write_matrix(const std::filesystem::path& path, const Mat& m,
                  const std::vector<std::string>& col_names,
                  const std::vector<std::string>* row_ids = nullptr,
                  const std::string& id_header = "id");

/// Plain matrix read: drops the id column of a Table.
Mat read_matrix(const std::filesystem::path& path);

std::vector<std::string> default_names(const std::string& prefix, Index k);

}  // namespace zipln
