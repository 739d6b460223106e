#pragma once

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>
#include <system_error>

#include "anomscope/error.hpp"

namespace anomscope {

namespace detail {

inline std::string_view trim_cr(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
    line.remove_suffix(1);
  while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
  return line;
}

template <typename T>
T parse_number(std::string_view text, const std::string& context) {
  T value{};
  text = trim_cr(text);
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  require(ec == std::errc() && p == text.data() + text.size() && !text.empty(),
          context + ": not a number: '" + std::string(text) + "'");
  return value;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace detail

// Shortest decimal that parses back to the same double.
inline std::string format_exact(double v) {
  std::array<char, 32> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  detail::ensure(ec == std::errc(), "to_chars failed");
  return std::string(buf.data(), p);
}

inline std::string format_fixed(double v, int decimals) {
  std::array<char, 64> buf{};
  auto [p, ec] =
      std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, decimals);
  detail::ensure(ec == std::errc(), "to_chars failed");
  return std::string(buf.data(), p);
}

// Writes `contents` to a sibling temp file and renames it over `path`, so
// readers never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  namespace fs = std::filesystem;
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    detail::require(static_cast<bool>(out), "cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw InputError("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw InputError("cannot move " + tmp.string() + " to " + path.string());
  }
}

}  // namespace anomscope
