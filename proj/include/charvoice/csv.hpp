#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace charvoice::csv {

// RFC 4180 table: quoted fields may hold delimiters, newlines and doubled
// quotes. The first record is the header.
class Table {
 public:
  static Table read(const std::filesystem::path& path, char delimiter);
  static Table parse(std::istream& in, char delimiter, std::string_view source);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& row(std::size_t i) const { return rows_[i]; }
  // 1-based line of the row's first physical line, for error messages.
  std::size_t line_of(std::size_t i) const { return lines_[i]; }

  std::optional<std::size_t> column(std::string_view name) const;
  // Throws ValidationError naming the source when the column is absent.
  std::size_t require_column(std::string_view name) const;

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> lines_;
};

// Splits a Python-style literal such as "['a', \"b's\"]", "{'x'}" or
// "[[1, 2], [3, 4]]" into its top-level elements. String elements come back
// unquoted, nested containers verbatim. A value that is not a bracketed
// literal is returned as a single element (or none when blank).
std::vector<std::string> split_list_literal(std::string_view literal);

}  // namespace charvoice::csv
