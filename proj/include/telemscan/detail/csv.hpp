#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "telemscan/error.hpp"

namespace telemscan::detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(pos)));
      break;
    }
    out.push_back(trim(line.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return out;
}

/// One data line with its 1-based line number in the source file.
struct CsvRow {
  std::size_t line_no = 0;
  std::vector<std::string> fields;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<CsvRow> rows;
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorCode::FileNotFound, path.string());
    }
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (!have_header) {
      // tolerate a UTF-8 byte order mark
      if (view.size() >= 3 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
      for (auto f : split_fields(view)) table.header.emplace_back(f);
      have_header = true;
      continue;
    }
    CsvRow row;
    row.line_no = line_no;
    for (auto f : split_fields(view)) row.fields.emplace_back(f);
    table.rows.push_back(std::move(row));
  }
  if (!have_header) {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": empty file");
  }
  return table;
}

inline std::string where(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no);
}

/// Parses a decimal real. Non-finite spellings parse successfully and are
/// reported separately so callers can emit NonFiniteValue.
inline double parse_real(std::string_view text, const std::string& context) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) {
    throw Error(ErrorCode::BadNumber, context + ": '" + std::string(text) + "'");
  }
  return value;
}

inline double parse_finite(std::string_view text, const std::string& context) {
  double value = parse_real(text, context);
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::NonFiniteValue, context + ": '" + std::string(text) + "'");
  }
  return value;
}

inline std::int64_t parse_index(std::string_view text, const std::string& context) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty() || value < 0) {
    throw Error(ErrorCode::BadNumber, context + ": bad index '" + std::string(text) + "'");
  }
  return value;
}

/// Formats a real with 12 significant digits, the declared interchange precision.
inline std::string format_real(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 12);
  return std::string(buf, ptr);
}

}  // namespace telemscan::detail
