/**
 * @file csv.hpp
 * @brief Locale-independent RFC 4180 CSV emission and atomic file writes.
 *
 * Numbers use std::to_chars shortest round-trip form, so re-reading a value with
 * std::from_chars yields the same double. Empty fields stand for "no value".
 */
#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

namespace magsense::csv {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

class Writer {
 public:
  explicit Writer(const std::vector<std::string>& header) { row(header); }

  Writer& field(const std::string& s) {
    sep();
    buf_ += quote(s);
    return *this;
  }
  Writer& field(double v) {
    sep();
    buf_ += format_double(v);
    return *this;
  }
  Writer& field(bool b) {
    sep();
    buf_ += b ? '1' : '0';
    return *this;
  }
  Writer& field(int v) { return field(static_cast<long long>(v)); }
  Writer& field(long long v) {
    sep();
    buf_ += std::to_string(v);
    return *this;
  }
  Writer& field(std::optional<double> v) {
    sep();
    if (v) buf_ += format_double(*v);
    return *this;
  }
  Writer& empty() {
    sep();
    return *this;
  }
  void end_row() {
    buf_ += "\r\n";
    first_ = true;
  }
  void row(const std::vector<std::string>& fields) {
    for (const auto& f : fields) field(f);
    end_row();
  }

  const std::string& str() const { return buf_; }

 private:
  void sep() {
    if (!first_) buf_ += ',';
    first_ = false;
  }
  std::string buf_;
  bool first_ = true;
};

/// Writes content to a sibling temp file and renames it over path.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

}  // namespace magsense::csv
