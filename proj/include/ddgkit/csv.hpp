#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ddgkit/error.hpp"

namespace ddgkit::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

struct Document {
  std::vector<std::string> header;
  std::vector<Row> rows;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(trim(line.substr(start)));
      break;
    }
    out.emplace_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& fields, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += sep;
    out += fields[i];
  }
  return out;
}

// Parses CSV text with a header line. Blank lines are skipped; every data row
// must have as many fields as the header.
inline Document parse(std::istream& in, const std::string& source) {
  Document doc;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (!have_header) {
      doc.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != doc.header.size()) {
      throw Error(ErrorKind::parse, source + ":" + std::to_string(lineno) + ": expected " +
                                        std::to_string(doc.header.size()) + " fields, found " +
                                        std::to_string(fields.size()));
    }
    doc.rows.push_back(Row{lineno, std::move(fields)});
  }
  return doc;
}

inline Document read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  return parse(in, path.string());
}

inline void require_header(const Document& doc, const std::vector<std::string>& expected,
                           const std::string& source) {
  if (doc.header != expected) {
    throw Error(ErrorKind::schema, source + ": expected header '" + join(expected) + "', found '" +
                                       join(doc.header) + "'");
  }
}

// Strict decimal parse: the whole field must be consumed. Non-finite values
// are returned as such so callers can report them with context.
inline bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  std::string buf(text);
  char* end = nullptr;
  out = std::strtod(buf.c_str(), &end);
  return end == buf.c_str() + buf.size();
}

inline bool parse_int(std::string_view text, long long& out) {
  if (text.empty()) return false;
  std::string buf(text);
  char* end = nullptr;
  errno = 0;
  out = std::strtoll(buf.c_str(), &end, 10);
  return end == buf.c_str() + buf.size() && errno == 0;
}

inline std::string location(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

// Canonical float format for files written by the toolkit: 17 significant
// digits, scientific notation, round-trips exactly through strtod.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

inline std::string format_fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

}  // namespace ddgkit::csv
