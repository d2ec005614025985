#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>

namespace dclab {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline std::string to_string(const Rational& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

// Parses "p", "p/q", or a plain decimal like "0.25" into an exact rational.
inline std::optional<Rational> parse_rational(const std::string& s) {
  if (s.empty()) return std::nullopt;
  auto parse_int = [](const std::string& t) -> std::optional<BigInt> {
    if (t.empty()) return std::nullopt;
    size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
    if (i == t.size()) return std::nullopt;
    for (; i < t.size(); ++i)
      if (t[i] < '0' || t[i] > '9') return std::nullopt;
    return BigInt(t);
  };
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    auto num = parse_int(s.substr(0, slash));
    auto den = parse_int(s.substr(slash + 1));
    if (!num || !den || *den == 0) return std::nullopt;
    return Rational(*num, *den);
  }
  auto dot = s.find('.');
  if (dot != std::string::npos) {
    auto whole = parse_int(s.substr(0, dot));
    std::string frac = s.substr(dot + 1);
    if (!whole || frac.empty()) return std::nullopt;
    for (char c : frac)
      if (c < '0' || c > '9') return std::nullopt;
    BigInt den = 1;
    for (size_t i = 0; i < frac.size(); ++i) den *= 10;
    BigInt fnum(frac);
    bool neg = s[0] == '-';
    Rational r = Rational(*whole) + (neg ? -Rational(fnum, den) : Rational(fnum, den));
    return r;
  }
  auto num = parse_int(s);
  if (!num) return std::nullopt;
  return Rational(*num);
}

// Largest multiple of 2^-32 that is <= x (x >= 0). Used where a test needs a
// rational stand-in for an irrational bound without overstating it.
inline Rational rational_floor_2p32(double x) {
  if (x <= 0) return Rational(0);
  long double scaled = static_cast<long double>(x) * 4294967296.0L;
  BigInt n = BigInt(static_cast<long long>(scaled));
  return Rational(n, BigInt(4294967296LL));
}

// Smallest multiple of 2^-32 that is >= x, plus one extra step to absorb the
// floating-point error of x itself.
inline Rational rational_ceil_2p32(double x) {
  long double scaled = static_cast<long double>(x) * 4294967296.0L;
  BigInt n = BigInt(static_cast<long long>(scaled)) + 2;
  return Rational(n, BigInt(4294967296LL));
}

}  // namespace dclab
