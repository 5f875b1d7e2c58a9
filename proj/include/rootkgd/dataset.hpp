#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rootkgd {

/// Samples in rows, variables in columns, with one name per column.
struct DataMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> columns;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  /// Position of `name` in `columns`, or -1.
  Eigen::Index column_index(std::string_view name) const;

  /// Subset of columns, in the order given. Throws ValidationError naming a missing column.
  DataMatrix select(std::span<const std::string> names) const;

  /// Rows [first, first + count). Throws ValidationError("window exceeds dataset") when out of range.
  DataMatrix slice_rows(Eigen::Index first, Eigen::Index count) const;
};

/// Checks: at least one row and column, unique names, finite entries.
void check_data_matrix(const DataMatrix& data);

/// Parses CSV text: header row of column names, then one numeric sample per row.
/// Blank lines are skipped. Throws ParseError with the 1-based line number.
DataMatrix parse_csv(std::string_view text);
DataMatrix read_csv(const std::filesystem::path& path);

std::string format_csv(const DataMatrix& data);

}  // namespace rootkgd
