#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <boost/rational.hpp>

// Boost before 1.75 resolves `rational == integer` in C++20 to a reversed
// template that calls itself. Exact non-template overloads win resolution.
namespace boost {
#define MUSAGENT_RATIONAL_EQ(I)                                                                              \
  inline bool operator==(const rational<std::int64_t>& a, I b) { return a == rational<std::int64_t>(b); } \
  inline bool operator==(I b, const rational<std::int64_t>& a) { return a == rational<std::int64_t>(b); }
MUSAGENT_RATIONAL_EQ(int)
MUSAGENT_RATIONAL_EQ(long)
MUSAGENT_RATIONAL_EQ(long long)
#undef MUSAGENT_RATIONAL_EQ
}  // namespace boost

namespace musagent {

// Score time in quarter-note beats, exact.
using Beat = boost::rational<std::int64_t>;

inline double to_double(const Beat& b) {
  return boost::rational_cast<double>(b);
}

inline std::string to_string(const Beat& b) {
  if (b.denominator() == 1) return std::to_string(b.numerator());
  return std::to_string(b.numerator()) + "/" + std::to_string(b.denominator());
}

// Accepts "n" or "n/d".
inline Beat parse_beat(std::string_view text) {
  auto slash = text.find('/');
  try {
    if (slash == std::string_view::npos) return Beat(std::stoll(std::string(text)));
    std::int64_t num = std::stoll(std::string(text.substr(0, slash)));
    std::int64_t den = std::stoll(std::string(text.substr(slash + 1)));
    if (den == 0) throw std::invalid_argument("zero denominator");
    return Beat(num, den);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a rational beat value: " + std::string(text));
  }
}

inline Beat beat_min(const Beat& a, const Beat& b) { return a < b ? a : b; }
inline Beat beat_max(const Beat& a, const Beat& b) { return a < b ? b : a; }

}  // namespace musagent
