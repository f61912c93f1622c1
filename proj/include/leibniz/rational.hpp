#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace leibniz {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline BigInt numerator(const Rational& q) { return boost::multiprecision::numerator(q); }
inline BigInt denominator(const Rational& q) { return boost::multiprecision::denominator(q); }

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

/// Exact conversion; every finite double is a dyadic rational.
inline Rational rational_from_double(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("rational_from_double: non-finite value");
    if (x == 0.0) return Rational(0);
    int exp = 0;
    double mant = std::frexp(x, &exp);  // x = mant * 2^exp, |mant| in [1/2, 1)
    // 53 doublings make the mantissa integral.
    auto scaled = static_cast<std::int64_t>(std::ldexp(mant, 53));
    Rational r(scaled);
    int shift = exp - 53;
    if (shift > 0)
        r *= Rational(BigInt(1) << shift);
    else if (shift < 0)
        r /= Rational(BigInt(1) << -shift);
    return r;
}

inline BigInt floor_to_int(const Rational& q) {
    BigInt n = numerator(q), d = denominator(q);  // d > 0
    BigInt quo = n / d;
    if (n < 0 && quo * d != n) --quo;
    return quo;
}

inline bool is_integer(const Rational& q) { return denominator(q) == 1; }

/// True when the denominator is a power of two (the point is a partition
/// endpoint of some dyadic level).
inline bool is_dyadic_rational(const Rational& q) {
    BigInt d = denominator(q);
    return (d & (d - 1)) == 0;
}

inline Rational pow2(long k) {
    if (k >= 0) return Rational(BigInt(1) << k);
    return Rational(1, BigInt(1) << -k);
}

/// Accepts "p/q", integers, and plain decimals ("0.25" becomes 1/4 exactly).
inline std::optional<Rational> parse_rational(std::string_view text) {
    auto parse_side = [](std::string_view s) -> std::optional<Rational> {
        if (s.empty()) return std::nullopt;
        bool neg = false;
        std::size_t i = 0;
        if (s[0] == '+' || s[0] == '-') {
            neg = s[0] == '-';
            i = 1;
        }
        BigInt intpart = 0, fracpart = 0;
        BigInt fracscale = 1;
        bool any_digit = false, seen_dot = false;
        for (; i < s.size(); ++i) {
            char c = s[i];
            if (c == '.') {
                if (seen_dot) return std::nullopt;
                seen_dot = true;
            } else if (c >= '0' && c <= '9') {
                any_digit = true;
                if (!seen_dot) {
                    intpart = intpart * 10 + (c - '0');
                } else {
                    fracpart = fracpart * 10 + (c - '0');
                    fracscale *= 10;
                }
            } else {
                return std::nullopt;
            }
        }
        if (!any_digit) return std::nullopt;
        Rational r = Rational(intpart) + Rational(fracpart, fracscale);
        return neg ? -r : r;
    };

    auto slash = text.find('/');
    if (slash == std::string_view::npos) return parse_side(text);
    auto lhs = parse_side(text.substr(0, slash));
    auto rhs = parse_side(text.substr(slash + 1));
    if (!lhs || !rhs || *rhs == 0) return std::nullopt;
    return *lhs / *rhs;
}

inline std::string format_rational(const Rational& q) {
    if (is_integer(q)) return numerator(q).str();
    return numerator(q).str() + "/" + denominator(q).str();
}

}  // namespace leibniz
