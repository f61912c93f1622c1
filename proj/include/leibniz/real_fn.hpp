#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "leibniz/interval.hpp"
#include "leibniz/rational.hpp"

namespace leibniz {

/// A real function of one variable with up to three evaluation routes:
/// plain double evaluation (always present), exact rational evaluation
/// (polynomial-style functions), and an interval range enclosure used
/// for per-fraction bounds. Missing routes degrade gracefully: callers
/// fall back to doubles and to sampled ranges.
struct RealFn {
    std::function<double(double)> fd;
    std::function<std::optional<Rational>(const Rational&)> fq;
    std::function<ValueInterval(const ValueInterval&)> range;
    std::string label;

    double operator()(double x) const { return fd(x); }
    bool has_exact() const { return static_cast<bool>(fq); }
    bool has_range() const { return static_cast<bool>(range); }

    std::optional<Rational> exact(const Rational& x) const {
        if (!fq) return std::nullopt;
        return fq(x);
    }
};

inline RealFn constant_fn(const Rational& c, std::string label = "") {
    double cd = to_double(c);
    if (label.empty()) label = format_rational(c);
    return RealFn{
        [cd](double) { return cd; },
        [c](const Rational&) -> std::optional<Rational> { return c; },
        [c](const ValueInterval&) { return iv_of(c); },
        std::move(label)};
}

/// coeffs[k] multiplies x^k. All three routes use Horner form; the
/// interval route is inclusion-isotone, which the Darboux refinement
/// monotonicity test relies on.
inline RealFn polynomial_fn(std::vector<Rational> coeffs, std::string label = "") {
    while (coeffs.size() > 1 && coeffs.back() == 0) coeffs.pop_back();
    std::vector<double> cd(coeffs.size());
    std::vector<ValueInterval> ci(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        cd[i] = to_double(coeffs[i]);
        ci[i] = iv_of(coeffs[i]);
    }
    if (label.empty()) {
        label = "poly(";
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            if (i) label += ",";
            label += format_rational(coeffs[i]);
        }
        label += ")";
    }
    return RealFn{
        [cd](double x) {
            double acc = 0.0;
            for (std::size_t i = cd.size(); i-- > 0;) acc = acc * x + cd[i];
            return acc;
        },
        [coeffs](const Rational& x) -> std::optional<Rational> {
            Rational acc = 0;
            for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
            return acc;
        },
        [ci](const ValueInterval& x) {
            ValueInterval acc{0.0, 0.0};
            for (std::size_t i = ci.size(); i-- > 0;) acc = iv_add(iv_mul(acc, x), ci[i]);
            return acc;
        },
        std::move(label)};
}

/// Wraps an opaque callable; no exact route, no range enclosure.
inline RealFn opaque_fn(std::function<double(double)> f, std::string label) {
    return RealFn{std::move(f), nullptr, nullptr, std::move(label)};
}

}  // namespace leibniz
