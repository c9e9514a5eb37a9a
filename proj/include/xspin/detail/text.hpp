#pragma once

// Locale-independent number <-> text helpers shared by the CSV, config and
// plot emitters. Doubles use the shortest round-trip decimal form, so
// emitting and re-parsing a value is lossless and byte-deterministic.

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace xspin::detail {

inline std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Fixed precision variant used for plot coordinates.
inline std::string fmt_fixed(double v, int precision) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

// Short general form for tick labels.
inline std::string fmt_general(double v, int precision) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, precision);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
  double v = 0.0;
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(text.data(), last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw std::invalid_argument("invalid number '" + std::string(text) + "'");
  return v;
}

inline std::uint64_t parse_uint64(std::string_view text) {
  std::uint64_t v = 0;
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(text.data(), last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw std::invalid_argument("invalid unsigned integer '" + std::string(text) + "'");
  return v;
}

inline long parse_long(std::string_view text) {
  long v = 0;
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(text.data(), last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw std::invalid_argument("invalid integer '" + std::string(text) + "'");
  return v;
}

inline std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace xspin::detail
