#include "charvoice/csv.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "charvoice/error.hpp"
#include "charvoice/text.hpp"

namespace charvoice::csv {

Table Table::read(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(fmt::format("cannot read {}", path.string()));
  return parse(in, delimiter, path.string());
}

Table Table::parse(std::istream& in, char delimiter, std::string_view source) {
  Table table;
  table.source_ = std::string(source);

  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  const auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
    const bool blank = record.size() == 1 && record.front().empty();
    if (!blank) {
      if (table.header_.empty()) {
        table.header_ = std::move(record);
      } else {
        if (record.size() != table.header_.size()) {
          throw ValidationError(fmt::format(
              "{}:{}: expected {} fields, found {}", table.source_,
              record_line, table.header_.size(), record.size()));
        }
        table.rows_.push_back(std::move(record));
        table.lines_.push_back(record_line);
      }
    }
    record.clear();
  };

  char c = 0;
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == delimiter) {
      record.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      end_record();
      ++line;
      record_line = line;
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) {
    throw ValidationError(fmt::format("{}:{}: unterminated quoted field",
                                      table.source_, record_line));
  }
  if (!field.empty() || !record.empty()) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    end_record();
  }
  if (!table.header_.empty() && !table.header_.front().empty() &&
      table.header_.front().rfind("\xEF\xBB\xBF", 0) == 0) {
    table.header_.front().erase(0, 3);
  }
  return table;
}

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (text::trim(header_[i]) == name) return i;
  }
  return std::nullopt;
}

std::size_t Table::require_column(std::string_view name) const {
  if (auto idx = column(name)) return *idx;
  throw ValidationError(
      fmt::format("{}: missing column '{}'", source_, name));
}

std::vector<std::string> split_list_literal(std::string_view literal) {
  std::string_view s = text::trim(literal);
  std::vector<std::string> out;
  if (s.empty()) return out;
  const char open = s.front();
  const char close = open == '[' ? ']' : open == '{' ? '}' : open == '(' ? ')' : 0;
  if (close == 0 || s.back() != close) {
    out.emplace_back(s);
    return out;
  }
  s = s.substr(1, s.size() - 2);

  std::size_t i = 0;
  const auto skip_ws = [&] {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\n' ||
                            s[i] == '\r')) {
      ++i;
    }
  };
  while (true) {
    skip_ws();
    if (i >= s.size()) break;
    if (s[i] == '\'' || s[i] == '"') {
      const char q = s[i++];
      std::string value;
      while (i < s.size() && s[i] != q) {
        if (s[i] == '\\' && i + 1 < s.size()) {
          const char e = s[i + 1];
          value.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
          i += 2;
        } else {
          value.push_back(s[i++]);
        }
      }
      if (i >= s.size()) {
        throw ValidationError(fmt::format(
            "unterminated string in list literal: {}", literal));
      }
      ++i;
      out.push_back(std::move(value));
    } else {
      const std::size_t start = i;
      int depth = 0;
      while (i < s.size()) {
        const char c = s[i];
        if (c == '[' || c == '{' || c == '(') {
          ++depth;
        } else if (c == ']' || c == '}' || c == ')') {
          --depth;
        } else if (c == ',' && depth == 0) {
          break;
        }
        ++i;
      }
      out.emplace_back(text::trim(s.substr(start, i - start)));
    }
    skip_ws();
    if (i < s.size()) {
      if (s[i] != ',') {
        throw ValidationError(
            fmt::format("malformed list literal: {}", literal));
      }
      ++i;
    }
  }
  return out;
}

}  // namespace charvoice::csv
