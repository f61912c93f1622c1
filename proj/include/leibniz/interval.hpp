#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "leibniz/errors.hpp"
#include "leibniz/rational.hpp"

namespace leibniz {

/// Closed interval of doubles. Used both as an outward-rounded enclosure
/// (interval arithmetic) and as a plain [lower, upper] bound pair.
struct ValueInterval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return lo <= x && x <= hi; }
    bool contains(const ValueInterval& o) const { return lo <= o.lo && o.hi <= hi; }
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double step_down(double x, int ulps = 1) {
    for (int i = 0; i < ulps; ++i) x = std::nextafter(x, -kInf);
    return x;
}
inline double step_up(double x, int ulps = 1) {
    for (int i = 0; i < ulps; ++i) x = std::nextafter(x, +kInf);
    return x;
}

/// Outward nudge. Basic IEEE ops are within half an ulp, libm within a
/// couple; k relative epsilons plus a denormal pad cover k ulps and cost
/// two flops instead of nextafter loops.
inline ValueInterval widen(ValueInterval v, int ulps) {
    constexpr double eps = 2.220446049250313e-16;  // 2^-52
    constexpr double pad = 1e-300;
    double d = ulps * eps;
    if (std::isfinite(v.lo)) v.lo = v.lo - d * std::fabs(v.lo) - pad;
    if (std::isfinite(v.hi)) v.hi = v.hi + d * std::fabs(v.hi) + pad;
    return v;
}

inline ValueInterval iv_point(double x) { return {x, x}; }

inline ValueInterval iv_hull(ValueInterval a, ValueInterval b) {
    return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

/// Enclosure of an exact rational, one ulp out on each side unless the
/// conversion is exact.
inline ValueInterval iv_of(const Rational& q) {
    double d = to_double(q);
    if (rational_from_double(d) == q) return {d, d};
    return {step_down(d), step_up(d)};
}

inline ValueInterval iv_neg(ValueInterval a) { return {-a.hi, -a.lo}; }

inline ValueInterval iv_add(ValueInterval a, ValueInterval b) {
    return widen({a.lo + b.lo, a.hi + b.hi}, 1);
}
inline ValueInterval iv_sub(ValueInterval a, ValueInterval b) {
    return widen({a.lo - b.hi, a.hi - b.lo}, 1);
}

inline ValueInterval iv_mul(ValueInterval a, ValueInterval b) {
    if ((a.lo == 0.0 && a.hi == 0.0) || (b.lo == 0.0 && b.hi == 0.0)) return {0.0, 0.0};
    double c[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
    for (double& x : c)
        if (std::isnan(x)) x = 0.0;  // 0 * inf corners contribute nothing
    return widen({std::min({c[0], c[1], c[2], c[3]}), std::max({c[0], c[1], c[2], c[3]})}, 1);
}

/// Division by an interval containing zero returns the whole line: the
/// caller keeps a sound (if useless) bound instead of a silent gap.
inline ValueInterval iv_div(ValueInterval a, ValueInterval b) {
    if (b.lo <= 0.0 && 0.0 <= b.hi) return {-kInf, kInf};
    double c[4] = {a.lo / b.lo, a.lo / b.hi, a.hi / b.lo, a.hi / b.hi};
    return widen({std::min({c[0], c[1], c[2], c[3]}), std::max({c[0], c[1], c[2], c[3]})}, 1);
}

inline ValueInterval iv_abs(ValueInterval a) {
    if (a.lo >= 0.0) return a;
    if (a.hi <= 0.0) return iv_neg(a);
    return {0.0, std::max(-a.lo, a.hi)};
}

inline ValueInterval iv_scale(double c, ValueInterval a) {
    return iv_mul(iv_point(c), a);
}

inline ValueInterval iv_exp(ValueInterval a) {
    return widen({std::exp(a.lo), std::exp(a.hi)}, 4);
}

inline ValueInterval iv_log(ValueInterval a, const std::string& node = "log") {
    if (a.lo <= 0.0) throw DomainError(node, "interval reaches non-positive values");
    ValueInterval r = widen({std::log(a.lo), std::log(a.hi)}, 4);
    return r;
}

inline ValueInterval iv_sqrt(ValueInterval a, const std::string& node = "sqrt") {
    if (a.lo < 0.0) throw DomainError(node, "interval reaches negative values");
    ValueInterval r = widen({std::sqrt(a.lo), std::sqrt(a.hi)}, 2);
    r.lo = std::max(r.lo, 0.0);
    return r;
}

namespace detail {
inline ValueInterval iv_trig(ValueInterval a, bool is_sin) {
    constexpr double two_pi = 6.283185307179586;
    if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || a.width() >= two_pi) return {-1.0, 1.0};
    double flo = is_sin ? std::sin(a.lo) : std::cos(a.lo);
    double fhi = is_sin ? std::sin(a.hi) : std::cos(a.hi);
    ValueInterval r = widen({std::min(flo, fhi), std::max(flo, fhi)}, 4);
    // Extrema sit at pi/2 + k*pi (sin) or k*pi (cos). The k range is
    // conservative; an extra extremum only widens the enclosure.
    constexpr double pi = 3.141592653589793;
    double offset = is_sin ? pi / 2 : 0.0;
    double kmin = std::floor((a.lo - offset) / pi) - 1;
    double kmax = std::ceil((a.hi - offset) / pi) + 1;
    for (double k = kmin; k <= kmax; ++k) {
        double t = offset + k * pi;
        if (t >= step_down(a.lo, 2) && t <= step_up(a.hi, 2)) {
            double v = is_sin ? std::sin(t) : std::cos(t);
            if (v > 0.5) r.hi = 1.0;
            if (v < -0.5) r.lo = -1.0;
        }
    }
    r.lo = std::max(r.lo, -1.0);
    r.hi = std::min(r.hi, 1.0);
    return r;
}
}  // namespace detail

inline ValueInterval iv_sin(ValueInterval a) { return detail::iv_trig(a, true); }
inline ValueInterval iv_cos(ValueInterval a) { return detail::iv_trig(a, false); }

/// x^(p/q). Integer exponents get sign handling; fractional exponents
/// require a non-negative base.
inline ValueInterval iv_pow(ValueInterval a, const Rational& expo, const std::string& node = "pow") {
    if (expo == 0) return {1.0, 1.0};
    if (is_integer(expo)) {
        long e = numerator(expo).convert_to<long>();
        bool invert = e < 0;
        unsigned long n = invert ? -e : e;
        ValueInterval r;
        if (n % 2 == 1 || a.lo >= 0.0) {
            double plo = std::pow(a.lo, double(n)), phi = std::pow(a.hi, double(n));
            r = widen({std::min(plo, phi), std::max(plo, phi)}, 4);
        } else if (a.hi <= 0.0) {
            r = widen({std::pow(a.hi, double(n)), std::pow(a.lo, double(n))}, 4);
        } else {  // even power across zero
            r = widen({0.0, std::max(std::pow(a.lo, double(n)), std::pow(a.hi, double(n)))}, 4);
            r.lo = 0.0;
        }
        return invert ? iv_div({1.0, 1.0}, r) : r;
    }
    if (a.lo < 0.0) throw DomainError(node, "fractional power of an interval reaching negatives");
    double e = to_double(Rational(expo));
    double plo = std::pow(a.lo, e), phi = std::pow(a.hi, e);
    ValueInterval r = widen({std::min(plo, phi), std::max(plo, phi)}, 4);
    if (a.lo >= 0.0) r.lo = std::max(r.lo, 0.0);
    return r;
}

}  // namespace leibniz
