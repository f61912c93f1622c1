#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "leibniz/distribution.hpp"
#include "leibniz/expr.hpp"
#include "leibniz/integrate.hpp"
#include "leibniz/measure.hpp"
#include "leibniz/partition.hpp"

namespace leibniz {

struct SuiteLine {
    std::string label;
    bool pass = false;
    std::string detail;
};

struct SuiteReport {
    std::string name;
    bool pass = true;
    std::vector<SuiteLine> lines;

    void add(std::string label, bool ok, std::string detail = "") {
        pass = pass && ok;
        lines.push_back({std::move(label), ok, std::move(detail)});
    }

    std::string to_text() const {
        std::ostringstream os;
        for (const auto& l : lines) {
            os << (l.pass ? "[PASS] " : "[FAIL] ") << name << ": " << l.label;
            if (!l.detail.empty()) os << " (" << l.detail << ")";
            os << "\n";
        }
        os << (pass ? "[PASS] " : "[FAIL] ") << name << " suite\n";
        return os.str();
    }
};

namespace suitedetail {

inline Rational random_rational(std::mt19937_64& rng, long denom_pow = 20) {
    std::uniform_int_distribution<std::int64_t> d(0, (std::int64_t(1) << denom_pow));
    return Rational(d(rng), BigInt(1) << denom_pow);
}

inline std::vector<Rational> random_poly_coeffs(std::mt19937_64& rng, int degree, int scale_num,
                                                int scale_den, bool nonneg = false) {
    std::uniform_int_distribution<int> d(nonneg ? 0 : -scale_num, scale_num);
    std::vector<Rational> coeffs;
    for (int k = 0; k <= degree; ++k) coeffs.emplace_back(d(rng), scale_den);
    return coeffs;
}

inline std::string fmt(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

}  // namespace suitedetail

/// A uniformly infinitesimal distribution: value at index n is
/// +/- mu(U_n)/max(1, n), bounded on every level-d fraction by
/// (1/d) * mu(U). Its integral interval must collapse onto 0.
inline MonadicDistribution berkeley_oscillation(const PartitionScheme& scheme,
                                                const FinAddMeasure& mu) {
    return custom_distribution(
        scheme,
        [mu](const Monad& m) {
            return EventualSeq(
                [mu, m](std::size_t n) {
                    double v = mu.value(m.chain(n)) / std::max<double>(1.0, static_cast<double>(n));
                    return n % 2 ? -v : v;
                },
                "berkeley oscillation");
        },
        [mu](const Fraction& u) -> std::optional<ValueInterval> {
            double v = mu.value(u) / std::max<double>(1.0, static_cast<double>(u.level));
            return ValueInterval{-v, v};
        },
        "berkeley-oscillation", mu);
}

/// Newton-Leibniz check for one (f, f') pair.
inline SuiteReport newton_leibniz_suite(const RealFn& f, const RealFn& fprime,
                                        const PartitionScheme& scheme, double epsilon,
                                        std::size_t max_depth) {
    SuiteReport rep;
    rep.name = "newton-leibniz";
    NewtonLeibnizReport nl = newton_leibniz_report(f, fprime, scheme, epsilon, max_depth);
    rep.add("f = " + f.label + ": " + nl.summary, nl.pass);
    if (nl.ratio_diag.size() >= 2) {
        bool shrinks = nl.ratio_diag.back() <= nl.ratio_diag.front() + 1e-12;
        rep.add("difference quotient drift |df/dx - f'| shrinks with level", shrinks,
                suitedetail::fmt(nl.ratio_diag.front()) + " -> " +
                    suitedetail::fmt(nl.ratio_diag.back()));
    }
    return rep;
}

/// Default Newton-Leibniz trio on the scheme's domain.
inline SuiteReport newton_leibniz_suite(const PartitionScheme& scheme, double epsilon,
                                        std::size_t max_depth) {
    SuiteReport rep;
    rep.name = "newton-leibniz";
    struct Case {
        const char* f;
        const char* fprime;
    } cases[] = {{"x^2", "2*x"}, {"sin(x)", "cos(x)"}, {"exp(x)", "exp(x)"}};
    for (const auto& c : cases) {
        SuiteReport one = newton_leibniz_suite(parse_fn(c.f), parse_fn(c.fprime), scheme, epsilon,
                                               max_depth);
        for (auto& l : one.lines) rep.add(l.label, l.pass, l.detail);
    }
    return rep;
}

/// Rule of neglect: the certificate interval of a uniformly
/// infinitesimal distribution has width <= 2/depth and straddles 0.
inline SuiteReport berkeley_suite(const PartitionScheme& scheme, std::size_t depth) {
    SuiteReport rep;
    rep.name = "berkeley";
    FinAddMeasure mu = FinAddMeasure::length();
    MonadicDistribution phi = berkeley_oscillation(scheme, mu);
    double total = mu.value(scheme.root());
    double eps = 1.025 * total / static_cast<double>(depth);
    IntegrateResult r = integrate(phi, scheme, eps, depth);
    if (!r.certified()) {
        rep.add("certificate exists at depth " + std::to_string(depth), false,
                r.failure().reason);
        return rep;
    }
    const IntegralCertificate& cert = r.certificate();
    rep.add("certified at depth " + std::to_string(depth), cert.certified_depth == depth,
            "depth " + std::to_string(cert.certified_depth));
    double width = cert.upper_total - cert.lower_total;
    double cap = 2.0 * total / static_cast<double>(depth);
    rep.add("interval width <= 2/depth", width <= cap * (1 + 1e-9),
            suitedetail::fmt(width) + " vs " + suitedetail::fmt(cap));
    rep.add("interval contains 0", cert.lower_total <= 0.0 && 0.0 <= cert.upper_total,
            "[" + suitedetail::fmt(cert.lower_total) + ", " + suitedetail::fmt(cert.upper_total) + "]");
    return rep;
}

/// Random finite unions of closed intervals: the sandwich integral of
/// the indicator pairing must land on the exact total length.
inline SuiteReport indicator_suite(const PartitionScheme& scheme, std::size_t count,
                                   std::uint64_t seed, double epsilon, std::size_t max_depth) {
    SuiteReport rep;
    rep.name = "indicator";
    std::mt19937_64 rng(seed);
    FinAddMeasure mu = FinAddMeasure::length();
    std::size_t ok = 0;
    double worst = 0.0;
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<int> nparts(1, 5);
        int k = nparts(rng);
        std::vector<Rational> cuts;
        for (int j = 0; j < 2 * k; ++j)
            cuts.push_back(scheme.lo() + scheme.domain_width() * suitedetail::random_rational(rng));
        std::sort(cuts.begin(), cuts.end());
        std::vector<std::pair<Rational, Rational>> parts;
        for (int j = 0; j + 1 < 2 * k; j += 2) parts.emplace_back(cuts[j], cuts[j + 1]);
        ClosedSet y = ClosedSet::of(parts);
        double exact_len = to_double(y.total_length());
        IntegrateResult r = integrate(indicator_dist(y, mu, scheme), scheme, epsilon, max_depth);
        if (!r.certified()) continue;
        double err = std::fabs(r.certificate().value - exact_len);
        worst = std::max(worst, err);
        deepest = std::max(deepest, r.certificate().certified_depth);
        if (err <= epsilon) ++ok;
    }
    rep.add("all " + std::to_string(count) + " unions certified within epsilon", ok == count,
            std::to_string(ok) + "/" + std::to_string(count) + ", worst error " +
                suitedetail::fmt(worst) + ", deepest level " + std::to_string(deepest));
    return rep;
}

/// |I(a*phi + b*psi) - a*I(phi) - b*I(psi)| <= |a| eps_phi + |b| eps_psi + eps.
inline SuiteReport linearity_suite(const PartitionScheme& scheme, std::size_t count,
                                   std::uint64_t seed, double epsilon) {
    SuiteReport rep;
    rep.name = "linearity";
    std::mt19937_64 rng(seed);
    FinAddMeasure mu = FinAddMeasure::length();
    double eps_part = 1e-5;
    std::size_t ok = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<int> scalar(-256, 256);
        double alpha = scalar(rng) / 256.0, beta = scalar(rng) / 256.0;
        RealFn f = polynomial_fn(suitedetail::random_poly_coeffs(rng, 3, 64, 256));
        RealFn g = polynomial_fn(suitedetail::random_poly_coeffs(rng, 3, 64, 256));
        MonadicDistribution phi = form_f_dmu(f, mu, scheme);
        MonadicDistribution psi = form_f_dmu(g, mu, scheme);
        MonadicDistribution comb =
            dist_combine(dist_scale(alpha, phi), dist_scale(beta, psi), DistOp::Add);
        IntegrateResult rp = integrate(phi, scheme, eps_part, 24);
        IntegrateResult rq = integrate(psi, scheme, eps_part, 24);
        IntegrateResult rc = integrate(comb, scheme, epsilon, 24);
        if (!rp.certified() || !rq.certified() || !rc.certified()) continue;
        double lhs = std::fabs(rc.certificate().value - alpha * rp.certificate().value -
                               beta * rq.certificate().value);
        double budget = std::fabs(alpha) * eps_part + std::fabs(beta) * eps_part + epsilon;
        worst = std::max(worst, lhs - budget);
        if (lhs <= budget) ++ok;
    }
    rep.add("linearity bound holds on all " + std::to_string(count) + " combinations", ok == count,
            std::to_string(ok) + "/" + std::to_string(count) + ", worst excess " +
                suitedetail::fmt(worst));
    return rep;
}

/// Estimate-level comparison principle: f >= g pointwise (f = g + p with
/// p >= 0 on the domain) forces both Darboux sums of f dmu to dominate
/// those of g dmu at every level.
inline SuiteReport comparison_suite(const PartitionScheme& scheme, std::size_t count,
                                    std::uint64_t seed, std::size_t max_level) {
    SuiteReport rep;
    rep.name = "comparison";
    std::mt19937_64 rng(seed);
    FinAddMeasure mu = FinAddMeasure::length();
    std::size_t ok = 0;
    for (std::size_t i = 0; i < count; ++i) {
        auto gc = suitedetail::random_poly_coeffs(rng, 3, 128, 256);
        auto pc = suitedetail::random_poly_coeffs(rng, 3, 128, 256, /*nonneg=*/true);
        std::uniform_int_distribution<int> c0(32, 128);
        pc[0] = Rational(c0(rng), 256);  // strictly positive floor
        auto fc = gc;
        for (std::size_t k = 0; k < fc.size(); ++k) fc[k] += pc[k];
        // f is built literally as g + p so the interval bounds inherit
        // the pointwise dominance
        RealFn g = polynomial_fn(gc), p = polynomial_fn(pc);
        RealFn f{[g, p](double x) { return g(x) + p(x); },
                 [g, p](const Rational& x) -> std::optional<Rational> {
                     auto a = g.exact(x), b = p.exact(x);
                     if (!a || !b) return std::nullopt;
                     return *a + *b;
                 },
                 [g, p](const ValueInterval& box) { return iv_add(g.range(box), p.range(box)); },
                 "g+p"};
        auto tf = darboux_table(form_f_dmu(f, mu, scheme), scheme, max_level);
        auto tg = darboux_table(form_f_dmu(g, mu, scheme), scheme, max_level);
        bool dominated = true;
        for (std::size_t lv = 0; lv < tf.size(); ++lv) {
            if (tf[lv].lower < tg[lv].lower || tf[lv].upper < tg[lv].upper) dominated = false;
        }
        if (dominated) ++ok;
    }
    rep.add("Darboux sums dominate at every level <= " + std::to_string(max_level), ok == count,
            std::to_string(ok) + "/" + std::to_string(count));
    return rep;
}

}  // namespace leibniz
