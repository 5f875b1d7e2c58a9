#include "rootkgd/dataset.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "rootkgd/error.hpp"
#include "rootkgd/io.hpp"

namespace rootkgd {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

}  // namespace

Eigen::Index DataMatrix::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<Eigen::Index>(i);
  }
  return -1;
}

DataMatrix DataMatrix::select(std::span<const std::string> names) const {
  DataMatrix out;
  out.values.resize(values.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    Eigen::Index src = column_index(names[j]);
    if (src < 0) throw ValidationError("column '" + names[j] + "' not found in dataset");
    out.values.col(static_cast<Eigen::Index>(j)) = values.col(src);
    out.columns.push_back(names[j]);
  }
  return out;
}

DataMatrix DataMatrix::slice_rows(Eigen::Index first, Eigen::Index count) const {
  if (first < 0 || count < 1 || first + count > values.rows()) {
    throw ValidationError("window exceeds dataset (rows " + std::to_string(first) + ".." +
                          std::to_string(first + count) + " requested, " +
                          std::to_string(values.rows()) + " available)");
  }
  return DataMatrix{values.middleRows(first, count), columns};
}

void check_data_matrix(const DataMatrix& data) {
  if (data.rows() < 1 || data.cols() < 1) throw ValidationError("data matrix is empty");
  if (static_cast<std::size_t>(data.cols()) != data.columns.size()) {
    throw ValidationError("data matrix column names do not match its width");
  }
  std::set<std::string> names(data.columns.begin(), data.columns.end());
  if (names.size() != data.columns.size()) throw ValidationError("duplicate column names");
  if (!data.values.allFinite()) throw ValidationError("data matrix contains non-finite values");
}

DataMatrix parse_csv(std::string_view text) {
  DataMatrix out;
  std::vector<double> flat;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;

    auto fields = split_fields(line);
    if (!have_header) {
      for (auto f : fields) {
        if (f.empty()) throw ParseError("line 1: empty column name");
        out.columns.push_back(unquote(f));
      }
      have_header = true;
      continue;
    }
    if (fields.size() != out.columns.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(out.columns.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      double value = 0.0;
      auto f = fields[j];
      if (!f.empty() && f.front() == '+') f.remove_prefix(1);
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
      if (ec != std::errc() || ptr != f.data() + f.size() || f.empty()) {
        throw ParseError("line " + std::to_string(line_no) + ", column '" + out.columns[j] +
                         "': not a number: '" + std::string(fields[j]) + "'");
      }
      if (!std::isfinite(value)) {
        throw ParseError("line " + std::to_string(line_no) + ", column '" + out.columns[j] +
                         "': non-finite value");
      }
      flat.push_back(value);
    }
  }
  if (!have_header) throw ParseError("CSV input is empty");

  const auto n = static_cast<Eigen::Index>(out.columns.size());
  const auto m = static_cast<Eigen::Index>(flat.size() / out.columns.size());
  out.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), m, n);
  return out;
}

DataMatrix read_csv(const std::filesystem::path& path) {
  try {
    return parse_csv(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string format_csv(const DataMatrix& data) {
  std::ostringstream out;
  for (std::size_t j = 0; j < data.columns.size(); ++j) {
    out << (j ? "," : "") << data.columns[j];
  }
  out << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      out << (j ? "," : "") << data.values(i, j);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace rootkgd
