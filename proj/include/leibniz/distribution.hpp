#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "leibniz/errors.hpp"
#include "leibniz/eventual_seq.hpp"
#include "leibniz/interval.hpp"
#include "leibniz/measure.hpp"
#include "leibniz/partition.hpp"
#include "leibniz/rational.hpp"
#include "leibniz/real_fn.hpp"

namespace leibniz {

/// Finite union of closed intervals with rational endpoints, normalized
/// to sorted disjoint parts (touching parts merge).
struct ClosedSet {
    std::vector<std::pair<Rational, Rational>> parts;

    static ClosedSet of(std::vector<std::pair<Rational, Rational>> raw) {
        std::vector<std::pair<Rational, Rational>> xs;
        for (auto& p : raw)
            if (p.first <= p.second) xs.push_back(std::move(p));
        std::sort(xs.begin(), xs.end(),
                  [](const auto& l, const auto& r) { return l.first < r.first; });
        ClosedSet out;
        for (auto& p : xs) {
            if (!out.parts.empty() && p.first <= out.parts.back().second)
                out.parts.back().second = std::max(out.parts.back().second, p.second);
            else
                out.parts.push_back(std::move(p));
        }
        return out;
    }

    bool empty() const { return parts.empty(); }

    bool contains(const Rational& p) const {
        for (const auto& [lo, hi] : parts)
            if (lo <= p && p <= hi) return true;
        return false;
    }

    enum class Rel { Inside, Outside, Straddle };

    /// Inside: u is covered by one part. Outside: u does not meet the set
    /// at all (not even at an endpoint). Straddle: everything else.
    Rel relation(const Fraction& u) const {
        bool meets = false;
        for (const auto& [lo, hi] : parts) {
            if (lo <= u.lo && u.hi <= hi) return Rel::Inside;
            if (u.lo <= hi && lo <= u.hi) meets = true;
        }
        return meets ? Rel::Straddle : Rel::Outside;
    }

    Rational total_length() const {
        Rational acc = 0;
        for (const auto& [lo, hi] : parts) acc += hi - lo;
        return acc;
    }

    std::size_t boundary_point_count() const { return parts.size() * 2; }
};

enum class DistKind {
    MeasureDiff,
    FDmu,
    Indicator,
    PureDelta,
    DeltaTimesDmu,
    Df,
    Tagged,
    Scaled,
    Combined,
    Custom
};

enum class DistOp { Add, Mul };

/// Geometry of one cell handed to the fast (double-only) bound route:
/// enclosures of the exact endpoints, of the level width, and of the
/// whole fraction.
struct CellGeom {
    std::size_t level = 0;
    ValueInterval lo_pt, hi_pt;  // endpoint enclosures
    ValueInterval width_iv;      // enclosure of the level width
    ValueInterval box;           // hull of the fraction
};

/// A map from monads to eventual sequences: the integrand objects of the
/// sandwich integrator. Each constructor also supplies a per-fraction
/// range bound (boundHint) when it can; the integrator samples when it
/// cannot and says so in the certificate caveats.
class MonadicDistribution {
public:
    EventualSeq eval_on(const Monad& m) const {
        if (!m.scheme().same(state_->scheme))
            throw SchemeMismatch("monad belongs to a different scheme");
        return state_->eval(m);
    }

    std::optional<ValueInterval> bound_hint(const Fraction& u) const {
        if (!state_->bound) return std::nullopt;
        return state_->bound(u);
    }

    bool has_fast_bound() const { return static_cast<bool>(state_->fast_bound); }
    ValueInterval fast_bound(const CellGeom& g) const { return state_->fast_bound(g); }

    DistKind kind() const { return state_->kind; }
    const PartitionScheme& scheme() const { return state_->scheme; }
    const std::string& label() const { return state_->label; }
    bool bounds_sampled() const { return state_->sampled_bounds; }

    const std::optional<FinAddMeasure>& pairing_measure() const { return state_->measure; }
    const std::optional<Rational>& delta_point() const { return state_->x0; }
    TieRule delta_tie() const { return state_->tie; }
    const std::optional<RealFn>& fn() const { return state_->f; }

    struct State {
        DistKind kind = DistKind::Custom;
        PartitionScheme scheme;
        std::string label;
        std::function<EventualSeq(const Monad&)> eval;
        std::function<std::optional<ValueInterval>(const Fraction&)> bound;
        std::function<ValueInterval(const CellGeom&)> fast_bound;
        std::optional<FinAddMeasure> measure;
        std::optional<RealFn> f;
        std::optional<Rational> x0;
        TieRule tie = TieRule::Leftmost;
        bool sampled_bounds = false;
        explicit State(PartitionScheme s) : scheme(std::move(s)) {}
    };

    explicit MonadicDistribution(std::shared_ptr<const State> s) : state_(std::move(s)) {}

private:
    std::shared_ptr<const State> state_;
};

namespace detail {

/// Fast dyadic-loop enclosure of mu on a cell, available for length and
/// Stieltjes (with a range-capable generator) and their scales/sums.
inline std::function<ValueInterval(const CellGeom&)> measure_fast_iv(const FinAddMeasure& mu) {
    switch (mu.kind()) {
        case MeasureKind::Length:
            return [](const CellGeom& g) { return g.width_iv; };
        case MeasureKind::Stieltjes: {
            const auto& g = *mu.stieltjes_fn();
            if (!g.has_range()) return nullptr;
            auto range = g.range;
            return [range](const CellGeom& c) {
                ValueInterval d = iv_sub(range(c.hi_pt), range(c.lo_pt));
                d.lo = std::max(d.lo, 0.0);  // weights are non-negative
                return d;
            };
        }
        default:
            return nullptr;
    }
}

inline ValueInterval measure_iv(const FinAddMeasure& mu, const Fraction& u) {
    if (auto q = mu.exact(u)) return iv_of(*q);
    return widen(iv_point(mu.value(u)), 2);
}

/// Checks (cheaply) that widths actually shrink; a scheme stuck at its
/// level-1 width cannot carry infinitesimal monads.
inline void require_shrinking(const PartitionScheme& scheme) {
    if (scheme.kind() == PartitionScheme::Kind::Dyadic) return;
    if (!(scheme.max_width_at(6) < scheme.max_width_at(1)))
        throw NotShrinkingScheme("partition widths do not shrink");
}

inline std::uint64_t owner_index(const PartitionScheme& scheme, const Rational& x0, TieRule tie,
                                 std::size_t level) {
    return scheme.index_at(x0, level, tie);
}

inline void require_delta_viable(const PartitionScheme& scheme, const Rational& x0,
                                 const FinAddMeasure& mu, TieRule tie) {
    if (x0 < scheme.lo() || x0 > scheme.hi()) throw PointOutsideDomain("delta point outside [a,b]");
    if (!mu.compatible_with(scheme)) throw SchemeMismatch("measure bound to a different scheme");
    for (std::size_t lv = 0; lv <= 48; ++lv) {
        Fraction owner = scheme.fraction_at(lv, owner_index(scheme, x0, tie, lv));
        if (mu.value(owner) == 0.0)
            throw ZeroDifferentialAtAtom("measure vanishes on the level-" + std::to_string(lv) +
                                         " chain fraction at " + format_rational(x0));
    }
}

}  // namespace detail

/// The measure differential as a distribution: x maps to {mu(U_n)}.
inline MonadicDistribution measure_diff(const FinAddMeasure& mu, const PartitionScheme& scheme) {
    if (!mu.compatible_with(scheme)) throw SchemeMismatch("measure bound to a different scheme");
    auto s = std::make_shared<MonadicDistribution::State>(scheme);
    s->kind = DistKind::MeasureDiff;
    s->label = "d(" + mu.name() + ")";
    s->measure = mu;
    s->eval = [mu](const Monad& m) { return differential(mu, m); };
    s->bound = [mu](const Fraction& u) -> std::optional<ValueInterval> {
        return iv_point(mu.value(u));
    };
    s->fast_bound = detail::measure_fast_iv(mu);
    return MonadicDistribution(std::move(s));
}

/// f(lim x) * dmu(x). Monads built from a known point evaluate f there
/// exactly; anonymous chains use the level-n midpoint, and the induced
/// error stays inside the per-fraction range bounds.
inline MonadicDistribution form_f_dmu(const RealFn& f, const FinAddMeasure& mu,
                                      const PartitionScheme& scheme) {
    detail::require_shrinking(scheme);
    if (!mu.compatible_with(scheme)) throw SchemeMismatch("measure bound to a different scheme");
    auto s = std::make_shared<MonadicDistribution::State>(scheme);
    s->kind = DistKind::FDmu;
    s->label = f.label + "*d(" + mu.name() + ")";
    s->measure = mu;
    s->f = f;
    s->sampled_bounds = !f.has_range();
    s->eval = [f, mu](const Monad& m) {
        return EventualSeq(
            [f, mu, m](std::size_t n) {
                Fraction u = m.chain(n);
                double fx;
                if (m.anchor()) {
                    auto exact = f.exact(*m.anchor());
                    fx = exact ? to_double(*exact) : f(to_double(*m.anchor()));
                } else {
                    fx = f(u.midpoint_double());
                }
                return fx * mu.value(u);
            },
            f.label + "*d(" + mu.name() + ") along " + m.note());
    };
    if (f.has_range()) {
        auto range = f.range;
        s->bound = [range, mu](const Fraction& u) -> std::optional<ValueInterval> {
            return iv_mul(range(u.box()), detail::measure_iv(mu, u));
        };
        if (auto mf = detail::measure_fast_iv(mu))
            s->fast_bound = [range, mf](const CellGeom& c) { return iv_mul(range(c.box), mf(c)); };
    }
    return MonadicDistribution(std::move(s));
}

/// 1_Y(lim x) * dmu(x): the differential where the limit lands in Y, the
/// zero sequence elsewhere.
inline MonadicDistribution indicator_dist(const ClosedSet& y, const FinAddMeasure& mu,
                                          const PartitionScheme& scheme) {
    if (!mu.compatible_with(scheme)) throw SchemeMismatch("measure bound to a different scheme");
    auto s = std::make_shared<MonadicDistribution::State>(scheme);
    s->kind = DistKind::Indicator;
    s->label = "indicator*d(" + mu.name() + ")";
    s->measure = mu;
    s->eval = [y, mu](const Monad& m) {
        bool member;
        if (m.anchor()) {
            member = y.contains(*m.anchor());
        } else {
            // Walk until the chain settles inside or outside; a chain
            // pinned to a boundary point for the whole probe is resolved
            // by midpoint membership (the limit is that boundary point
            // whenever the scheme is infinitesimal).
            constexpr std::size_t kProbe = 96;
            member = false;
            for (std::size_t lv = 0;; ++lv) {
                auto rel = y.relation(m.chain(lv));
                if (rel == ClosedSet::Rel::Inside) {
                    member = true;
                    break;
                }
                if (rel == ClosedSet::Rel::Outside) break;
                if (lv == kProbe) {
                    member = y.contains(m.chain(lv).midpoint());
                    break;
                }
            }
        }
        if (!member) return EventualSeq::constant(0.0);
        return differential(mu, m);
    };
    s->bound = [y, mu](const Fraction& u) -> std::optional<ValueInterval> {
        switch (y.relation(u)) {
            case ClosedSet::Rel::Inside: return iv_point(mu.value(u));
            case ClosedSet::Rel::Outside: return iv_point(0.0);
            default: return iv_hull(iv_point(0.0), iv_point(mu.value(u)));
        }
    };
    return MonadicDistribution(std::move(s));
}

/// The Dirac delta as a monadic distribution: 1/dmu on the x0-monad and
/// zero on every other monad (pointwise: the reciprocal while a chain
/// still follows the x0-chain, zero once it separates — equal, as an
/// eventual sequence, to zero off the atom).
inline MonadicDistribution delta_dist(const Rational& x0, const FinAddMeasure& mu, TieRule tie,
                                      const PartitionScheme& scheme) {
    detail::require_delta_viable(scheme, x0, mu, tie);
    auto s = std::make_shared<MonadicDistribution::State>(scheme);
    s->kind = DistKind::PureDelta;
    s->label = "delta(" + format_rational(x0) + ")";
    s->measure = mu;
    s->x0 = x0;
    s->tie = tie;
    PartitionScheme sc = scheme;
    s->eval = [x0, mu, tie, sc](const Monad& m) {
        return EventualSeq(
            [x0, mu, tie, sc, m](std::size_t n) {
                if (m.index_at(n) != detail::owner_index(sc, x0, tie, n)) return 0.0;
                double v = mu.value(m.chain(n));
                if (v == 0.0) throw ZeroDifferentialAtAtom("measure vanishes on a chain fraction");
                return extended_div(1.0, v);
            },
            "delta(" + format_rational(x0) + ") along " + m.note());
    };
    s->bound = [x0, mu, tie, sc](const Fraction& u) -> std::optional<ValueInterval> {
        if (u.index != detail::owner_index(sc, x0, tie, u.level)) return iv_point(0.0);
        return iv_hull(iv_point(0.0), iv_div({1.0, 1.0}, detail::measure_iv(mu, u)));
    };
    return MonadicDistribution(std::move(s));
}

/// delta(x0) paired with dmu: exactly 1 on the distinguished monad and 0
/// elsewhere. This is the integrable product form the atomic sandwich
/// certifies.
inline MonadicDistribution delta_times_dmu(const Rational& x0, const FinAddMeasure& mu, TieRule tie,
                                           const PartitionScheme& scheme) {
    detail::require_delta_viable(scheme, x0, mu, tie);
    auto s = std::make_shared<MonadicDistribution::State>(scheme);
    s->kind = DistKind::DeltaTimesDmu;
    s->label = "delta(" + format_rational(x0) + ")*d(" + mu.name() + ")";
    s->measure = mu;
    s->x0 = x0;
    s->tie = tie;
    PartitionScheme sc = scheme;
    s->eval = [x0, tie, sc](const Monad& m) {
        return EventualSeq(
            [x0, tie, sc, m](std::size_t n) {
                return m.index_at(n) == detail::owner_index(sc, x0, tie, n) ? 1.0 : 0.0;
            },
            "delta*dmu along " + m.note());
    };
    s->bound = [x0, tie, sc](const Fraction& u) -> std::optional<ValueInterval> {
        if (u.index != detail::owner_index(sc, x0, tie, u.level)) return iv_point(0.0);
        return ValueInterval{0.0, 1.0};
    };
    return MonadicDistribution(std::move(s));
}

/// df: the endpoint-difference sequence {f(b_n) - f(a_n)} along a chain
/// of segments. Level sums telescope to f(b) - f(a) at every depth.
inline MonadicDistribution df_dist(const RealFn& f, const PartitionScheme& scheme) {
    auto s = std::make_shared<MonadicDistribution::State>(scheme);
    s->kind = DistKind::Df;
    s->label = "d(" + f.label + ")";
    s->f = f;
    auto value_on = [f](const Fraction& u) {
        if (f.has_exact()) {
            auto vh = f.exact(u.hi), vl = f.exact(u.lo);
            if (vh && vl) return to_double(*vh - *vl);
        }
        return f(to_double(u.hi)) - f(to_double(u.lo));
    };
    s->eval = [f, value_on](const Monad& m) {
        return EventualSeq([value_on, m](std::size_t n) { return value_on(m.chain(n)); },
                           "d(" + f.label + ") along " + m.note());
    };
    s->bound = [f, value_on](const Fraction& u) -> std::optional<ValueInterval> {
        if (f.has_exact()) {
            auto vh = f.exact(u.hi), vl = f.exact(u.lo);
            if (vh && vl) return iv_of(*vh - *vl);
        }
        return widen(iv_point(value_on(u)), 4);
    };
    if (f.has_range()) {
        auto range = f.range;
        s->fast_bound = [range](const CellGeom& c) { return iv_sub(range(c.hi_pt), range(c.lo_pt)); };
    }
    return MonadicDistribution(std::move(s));
}

enum class TagSelector { LeftEndpoint, RightEndpoint, Midpoint };

inline std::function<Rational(const Fraction&)> selector_fn(TagSelector s) {
    switch (s) {
        case TagSelector::LeftEndpoint: return [](const Fraction& u) { return u.lo; };
        case TagSelector::RightEndpoint: return [](const Fraction& u) { return u.hi; };
        default: return [](const Fraction& u) { return u.midpoint(); };
    }
}

/// Loeb-style tagged sampling: f evaluated at a chosen point of each
/// chain fraction, times the measure of the fraction.
inline MonadicDistribution tagged_dist(const RealFn& f,
                                       std::function<Rational(const Fraction&)> selector,
                                       const FinAddMeasure& mu, const PartitionScheme& scheme,
                                       std::string selector_name = "tag") {
    if (!mu.compatible_with(scheme)) throw SchemeMismatch("measure bound to a different scheme");
    auto s = std::make_shared<MonadicDistribution::State>(scheme);
    s->kind = DistKind::Tagged;
    s->label = f.label + "(" + selector_name + ")*d(" + mu.name() + ")";
    s->measure = mu;
    s->f = f;
    s->sampled_bounds = !f.has_range();
    s->eval = [f, selector, mu](const Monad& m) {
        return EventualSeq(
            [f, selector, mu, m](std::size_t n) {
                Fraction u = m.chain(n);
                Rational p = selector(u);
                if (!u.contains(p))
                    throw SelectorOutOfFraction("selector left fraction at level " +
                                                std::to_string(n));
                auto exact = f.exact(p);
                double fx = exact ? to_double(*exact) : f(to_double(p));
                return fx * mu.value(u);
            },
            "tagged along " + m.note());
    };
    if (f.has_range()) {
        auto range = f.range;
        s->bound = [range, mu](const Fraction& u) -> std::optional<ValueInterval> {
            return iv_mul(range(u.box()), detail::measure_iv(mu, u));
        };
        if (auto mf = detail::measure_fast_iv(mu))
            s->fast_bound = [range, mf](const CellGeom& c) { return iv_mul(range(c.box), mf(c)); };
    }
    return MonadicDistribution(std::move(s));
}

inline MonadicDistribution tagged_dist(const RealFn& f, TagSelector sel, const FinAddMeasure& mu,
                                       const PartitionScheme& scheme) {
    const char* name = sel == TagSelector::LeftEndpoint    ? "left"
                       : sel == TagSelector::RightEndpoint ? "right"
                                                           : "mid";
    return tagged_dist(f, selector_fn(sel), mu, scheme, name);
}

/// alpha * phi, termwise.
inline MonadicDistribution dist_scale(double alpha, const MonadicDistribution& p) {
    auto s = std::make_shared<MonadicDistribution::State>(p.scheme());
    s->kind = DistKind::Scaled;
    s->label = std::to_string(alpha) + "*(" + p.label() + ")";
    s->sampled_bounds = p.bounds_sampled();
    s->eval = [alpha, p](const Monad& m) {
        EventualSeq base = p.eval_on(m);
        return EventualSeq([alpha, base](std::size_t n) { return alpha * base(n); },
                           "scaled " + base.note());
    };
    s->bound = [alpha, p](const Fraction& u) -> std::optional<ValueInterval> {
        auto b = p.bound_hint(u);
        if (!b) return std::nullopt;
        return iv_scale(alpha, *b);
    };
    if (p.has_fast_bound())
        s->fast_bound = [alpha, p](const CellGeom& c) { return iv_scale(alpha, p.fast_bound(c)); };
    return MonadicDistribution(std::move(s));
}

/// Termwise sum or product of two distributions on the same scheme.
/// delta paired with the differential of its own measure normalizes to
/// the exact product form.
inline MonadicDistribution dist_combine(const MonadicDistribution& p, const MonadicDistribution& q,
                                        DistOp op) {
    if (!p.scheme().same(q.scheme())) throw SchemeMismatch("distributions on different schemes");
    if (op == DistOp::Mul) {
        auto is_pair = [](const MonadicDistribution& d, const MonadicDistribution& e) {
            return d.kind() == DistKind::PureDelta && e.kind() == DistKind::MeasureDiff &&
                   d.pairing_measure() && e.pairing_measure() &&
                   d.pairing_measure()->name() == e.pairing_measure()->name();
        };
        if (is_pair(p, q))
            return delta_times_dmu(*p.delta_point(), *p.pairing_measure(), p.delta_tie(), p.scheme());
        if (is_pair(q, p))
            return delta_times_dmu(*q.delta_point(), *q.pairing_measure(), q.delta_tie(), q.scheme());
    }
    auto s = std::make_shared<MonadicDistribution::State>(p.scheme());
    s->kind = DistKind::Combined;
    s->label = "(" + p.label() + (op == DistOp::Add ? " + " : " * ") + q.label() + ")";
    s->sampled_bounds = p.bounds_sampled() || q.bounds_sampled();
    s->eval = [p, q, op](const Monad& m) {
        return combine(p.eval_on(m), q.eval_on(m), op == DistOp::Add ? SeqOp::Add : SeqOp::Mul);
    };
    s->bound = [p, q, op](const Fraction& u) -> std::optional<ValueInterval> {
        auto a = p.bound_hint(u), b = q.bound_hint(u);
        if (!a || !b) return std::nullopt;
        return op == DistOp::Add ? iv_add(*a, *b) : iv_mul(*a, *b);
    };
    if (p.has_fast_bound() && q.has_fast_bound()) {
        s->fast_bound = [p, q, op](const CellGeom& c) {
            return op == DistOp::Add ? iv_add(p.fast_bound(c), q.fast_bound(c))
                                     : iv_mul(p.fast_bound(c), q.fast_bound(c));
        };
    }
    return MonadicDistribution(std::move(s));
}

/// Fully custom distribution; `bound` may be null (the integrator will
/// fall back to sampled bounds and record the caveat).
inline MonadicDistribution custom_distribution(
    const PartitionScheme& scheme, std::function<EventualSeq(const Monad&)> eval,
    std::function<std::optional<ValueInterval>(const Fraction&)> bound, std::string label,
    std::optional<FinAddMeasure> base_measure = std::nullopt) {
    auto s = std::make_shared<MonadicDistribution::State>(scheme);
    s->kind = DistKind::Custom;
    s->label = std::move(label);
    s->eval = std::move(eval);
    s->bound = std::move(bound);
    s->measure = std::move(base_measure);
    s->sampled_bounds = !s->bound;
    return MonadicDistribution(std::move(s));
}

}  // namespace leibniz
