#pragma once

// Result serialization: numeric CSV tables and JSON documents, written
// atomically (temp file in the target directory, then rename) so a crash
// never leaves a half-written result behind. Doubles are printed with the
// shortest representation that round-trips.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "adiabat/common.hpp"

namespace adiabat::io {

using json = nlohmann::json;

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// FNV-1a, 64 bit; manifests record this for every data file they describe.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

inline std::string fnv1a64_hex(std::string_view text) {
  char buf[17];
  const auto res = std::to_chars(buf, buf + sizeof(buf), fnv1a64(text), 16);
  std::string out(buf, res.ptr);
  return std::string(16 - out.size(), '0') + out;
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  ensure_directory(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row) {
    require(row.size() == header.size(), "CsvTable: row width does not match header");
    rows.push_back(std::move(row));
  }
};

inline std::string csv_string(const CsvTable& table) {
  std::ostringstream out;
  for (size_t i = 0; i < table.header.size(); ++i) {
    if (i) out << ',';
    out << table.header[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_double(row[i]);
    }
    out << '\n';
  }
  return out.str();
}

inline void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  write_text_atomic(path, csv_string(table));
}

inline void write_json(const std::filesystem::path& path, const json& doc) {
  write_text_atomic(path, doc.dump(2) + "\n");
}

// Malformed content is a schema problem for the caller; an unreadable file
// is an I/O problem.
inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace adiabat::io
