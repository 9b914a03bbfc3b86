#pragma once

#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace simpli2::sql {

/// A scalar SQL value. `std::monostate` is NULL.
using Value = std::variant<std::monostate, std::int64_t, double, std::string>;

inline bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

inline std::optional<std::int64_t> parse_int(std::string_view text) {
  if (text.empty()) return std::nullopt;
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return out;
}

inline std::optional<double> parse_double(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double out = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return out;
}

/// Canonical form used for both equality and hashing: integral doubles and
/// numeric strings collapse onto numbers so that `=` and hash joins agree.
inline Value canonical(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) {
    if (std::isfinite(*d) && std::floor(*d) == *d && std::fabs(*d) < 9.0e18) return static_cast<std::int64_t>(*d);
    return v;
  }
  if (const auto* s = std::get_if<std::string>(&v)) {
    if (auto i = parse_int(*s)) return *i;
    if (auto d = parse_double(*s)) return canonical(Value(*d));
  }
  return v;
}

inline std::string to_string(const Value& v) {
  switch (v.index()) {
    case 0: return "NULL";
    case 1: return std::to_string(std::get<std::int64_t>(v));
    case 2: {
      char buf[64];
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), std::get<double>(v));
      return std::string(buf, ptr);
    }
    default: return std::get<std::string>(v);
  }
}

/// Total order over canonical values: NULL < numbers < strings. Numbers of
/// either representation compare numerically.
inline std::strong_ordering compare_canonical(const Value& a, const Value& b) {
  auto rank = [](const Value& v) { return v.index() == 0 ? 0 : (v.index() == 3 ? 2 : 1); };
  if (auto c = rank(a) <=> rank(b); c != 0) return c;
  switch (rank(a)) {
    case 0: return std::strong_ordering::equal;
    case 1: {
      if (a.index() == 1 && b.index() == 1) return std::get<std::int64_t>(a) <=> std::get<std::int64_t>(b);
      double x = a.index() == 1 ? static_cast<double>(std::get<std::int64_t>(a)) : std::get<double>(a);
      double y = b.index() == 1 ? static_cast<double>(std::get<std::int64_t>(b)) : std::get<double>(b);
      if (x < y) return std::strong_ordering::less;
      if (x > y) return std::strong_ordering::greater;
      return std::strong_ordering::equal;
    }
    default: return std::get<std::string>(a).compare(std::get<std::string>(b)) <=> 0;
  }
}

/// SQL comparison: NULL operands yield no ordering (nullopt).
inline std::optional<std::strong_ordering> compare(const Value& a, const Value& b) {
  if (is_null(a) || is_null(b)) return std::nullopt;
  auto ca = canonical(a);
  auto cb = canonical(b);
  // Mixed number/string: fall back to textual comparison.
  if ((ca.index() == 3) != (cb.index() == 3)) return to_string(a).compare(to_string(b)) <=> 0;
  return compare_canonical(ca, cb);
}

struct ValueHash {
  std::size_t operator()(const Value& v) const {
    auto c = canonical(v);
    switch (c.index()) {
      case 0: return 0x9e3779b9;
      case 1: return std::hash<std::int64_t>{}(std::get<std::int64_t>(c));
      case 2: return std::hash<double>{}(std::get<double>(c));
      default: return std::hash<std::string>{}(std::get<std::string>(c));
    }
  }
};

}  // namespace simpli2::sql
