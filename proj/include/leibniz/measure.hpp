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
#include "leibniz/partition.hpp"
#include "leibniz/rational.hpp"
#include "leibniz/real_fn.hpp"

namespace leibniz {

/// Decides which fraction owns an atom sitting at x0, consistently with
/// monad_at's tie handling: an atom at a shared endpoint belongs to the
/// fraction the x0-monad descends through. Domain edges have only one
/// candidate regardless of the rule.
inline bool owns_atom(const Fraction& u, const Rational& x0, TieRule tie, const Rational& domain_lo,
                      const Rational& domain_hi) {
    if (x0 < u.lo || x0 > u.hi) return false;
    if (u.lo < x0 && x0 < u.hi) return true;
    if (x0 == u.hi) return tie == TieRule::Leftmost || x0 == domain_hi;
    // x0 == u.lo
    return tie == TieRule::Rightmost || x0 == domain_lo;
}

/// Finite union of open intervals, normalized to disjoint sorted parts.
struct OpenSet {
    std::vector<std::pair<Rational, Rational>> parts;

    static OpenSet of(std::vector<std::pair<Rational, Rational>> raw) {
        std::vector<std::pair<Rational, Rational>> xs;
        for (auto& p : raw)
            if (p.first < p.second) xs.push_back(std::move(p));
        std::sort(xs.begin(), xs.end(),
                  [](const auto& l, const auto& r) { return l.first < r.first; });
        OpenSet out;
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
            if (lo < p && p < hi) return true;
        return false;
    }

    bool on_boundary(const Rational& p) const {
        for (const auto& [lo, hi] : parts)
            if (p == lo || p == hi) return true;
        return false;
    }
};

enum class MeasureKind { Length, Stieltjes, Atom, Table, Scaled, Sum, Restricted, Custom };

/// A numeric function on fractions, additive across refinement: the
/// children of any fraction carry exactly its value in total. Values are
/// doubles; an exact rational route is kept wherever the constructor can
/// provide one (length, atoms, polynomial Stieltjes weights).
class FinAddMeasure {
public:
    static FinAddMeasure length() {
        auto s = std::make_shared<State>();
        s->kind = MeasureKind::Length;
        s->name = "length";
        s->value = [](const Fraction& u) { return to_double(u.width()); };
        s->exact = [](const Fraction& u) -> std::optional<Rational> { return u.width(); };
        return FinAddMeasure(std::move(s));
    }

    /// Lebesgue-Stieltjes weights g(hi) - g(lo). The generator must be
    /// non-decreasing on [a, b]; a coarse grid check runs eagerly and
    /// every evaluation re-checks the sign.
    static FinAddMeasure stieltjes(RealFn g, const Rational& a, const Rational& b) {
        constexpr int kGrid = 64;
        double prev = g(to_double(a));
        for (int i = 1; i <= kGrid; ++i) {
            double x = to_double(a + (b - a) * i / kGrid);
            double cur = g(x);
            if (cur < prev - 1e-12 * std::max({1.0, std::fabs(cur), std::fabs(prev)}))
                throw NonMonotoneStieltjes("generator decreases near x=" + std::to_string(x));
            prev = cur;
        }
        auto s = std::make_shared<State>();
        s->kind = MeasureKind::Stieltjes;
        s->name = "stieltjes(" + g.label + ")";
        s->g = g;
        s->value = [g](const Fraction& u) {
            double vh = g(to_double(u.hi));
            double d = vh - g(to_double(u.lo));
            if (d < -1e-9 * std::max(1.0, std::fabs(vh)))
                throw NonMonotoneStieltjes("negative weight on a fraction");
            return d;
        };
        if (g.has_exact()) {
            s->exact = [g](const Fraction& u) -> std::optional<Rational> {
                auto vh = g.exact(u.hi), vl = g.exact(u.lo);
                if (!vh || !vl) return std::nullopt;
                if (*vh < *vl) throw NonMonotoneStieltjes("negative weight on a fraction");
                return *vh - *vl;
            };
        }
        return FinAddMeasure(std::move(s));
    }

    /// Point mass at x0. Ownership at shared endpoints is tie-consistent
    /// with monad_at, so the differential along the owner monad is the
    /// constant mass and is eventually zero along every other monad.
    static FinAddMeasure atom(const Rational& x0, const Rational& mass, TieRule tie,
                              const Rational& domain_lo, const Rational& domain_hi) {
        if (x0 < domain_lo || x0 > domain_hi) throw PointOutsideDomain("atom outside [a,b]");
        auto s = std::make_shared<State>();
        s->kind = MeasureKind::Atom;
        s->name = "atom(" + format_rational(x0) + ")";
        s->atom_point = x0;
        s->atom_mass = mass;
        s->atom_tie = tie;
        double massd = to_double(mass);
        auto owned = [x0, tie, domain_lo, domain_hi](const Fraction& u) {
            return owns_atom(u, x0, tie, domain_lo, domain_hi);
        };
        s->value = [owned, massd](const Fraction& u) { return owned(u) ? massd : 0.0; };
        s->exact = [owned, mass](const Fraction& u) -> std::optional<Rational> {
            return owned(u) ? mass : Rational(0);
        };
        return FinAddMeasure(std::move(s));
    }

    /// Additive measure determined by its values on one full level of a
    /// scheme ("leaves"); coarser fractions sum their leaf range, deeper
    /// fractions split a leaf's value in proportion to length.
    static FinAddMeasure from_leaf_values(const PartitionScheme& scheme, std::size_t leaf_level,
                                          std::vector<double> leaf_values, std::string name) {
        if (leaf_values.size() != scheme.count_at(leaf_level))
            throw std::invalid_argument("leaf value count does not match the level");
        auto prefix = std::make_shared<std::vector<double>>(leaf_values.size() + 1, 0.0);
        for (std::size_t i = 0; i < leaf_values.size(); ++i)
            (*prefix)[i + 1] = (*prefix)[i] + leaf_values[i];
        auto leaves = std::make_shared<std::vector<double>>(std::move(leaf_values));

        auto s = std::make_shared<State>();
        s->kind = MeasureKind::Table;
        s->name = std::move(name);
        s->bound_scheme_id = scheme.id();
        PartitionScheme sc = scheme;
        s->value = [sc, leaf_level, prefix, leaves](const Fraction& u) {
            if (u.level <= leaf_level) {
                std::uint64_t b = u.index, e = u.index + 1;
                for (std::size_t lv = u.level; lv < leaf_level; ++lv) {
                    b = sc.child_index_range(lv, b).first;
                    e = sc.child_index_range(lv, e - 1).second;
                }
                return (*prefix)[e] - (*prefix)[b];
            }
            // below the leaves: proportional within the containing leaf
            std::uint64_t k = u.index;
            for (std::size_t lv = u.level; lv > leaf_level; --lv) {
                Fraction f = sc.fraction_at(lv, k);
                k = sc.parent_of(f).index;
            }
            Fraction leaf = sc.fraction_at(leaf_level, k);
            double ratio = to_double(u.width() / leaf.width());
            return (*leaves)[k] * ratio;
        };
        return FinAddMeasure(std::move(s));
    }

    /// Arbitrary fraction->value closure; additivity is the caller's
    /// promise (check_additivity will tell on them).
    static FinAddMeasure from_fraction_fn(std::function<double(const Fraction&)> value,
                                          std::string name,
                                          std::function<std::optional<Rational>(const Fraction&)>
                                              exact = nullptr) {
        auto s = std::make_shared<State>();
        s->kind = MeasureKind::Custom;
        s->name = std::move(name);
        s->value = std::move(value);
        s->exact = std::move(exact);
        return FinAddMeasure(std::move(s));
    }

    static FinAddMeasure scaled(const Rational& c, const FinAddMeasure& base) {
        auto s = std::make_shared<State>();
        s->kind = MeasureKind::Scaled;
        s->name = format_rational(c) + "*" + base.name();
        s->bound_scheme_id = base.state_->bound_scheme_id;
        double cd = to_double(c);
        s->value = [cd, base](const Fraction& u) { return cd * base.value(u); };
        s->exact = [c, base](const Fraction& u) -> std::optional<Rational> {
            auto v = base.exact(u);
            if (!v) return std::nullopt;
            return c * *v;
        };
        return FinAddMeasure(std::move(s));
    }

    static FinAddMeasure sum(const FinAddMeasure& p, const FinAddMeasure& q) {
        auto s = std::make_shared<State>();
        s->kind = MeasureKind::Sum;
        s->name = p.name() + "+" + q.name();
        s->bound_scheme_id = p.state_->bound_scheme_id ? p.state_->bound_scheme_id
                                                       : q.state_->bound_scheme_id;
        s->value = [p, q](const Fraction& u) { return p.value(u) + q.value(u); };
        s->exact = [p, q](const Fraction& u) -> std::optional<Rational> {
            auto a = p.exact(u), b = q.exact(u);
            if (!a || !b) return std::nullopt;
            return *a + *b;
        };
        return FinAddMeasure(std::move(s));
    }

    double value(const Fraction& u) const { return state_->value(u); }

    std::optional<Rational> exact(const Fraction& u) const {
        if (!state_->exact) return std::nullopt;
        return state_->exact(u);
    }

    double total_on(const PartitionScheme& scheme) const { return value(scheme.root()); }

    MeasureKind kind() const { return state_->kind; }
    const std::string& name() const { return state_->name; }
    bool has_exact() const { return static_cast<bool>(state_->exact); }

    const std::optional<Rational>& atom_point() const { return state_->atom_point; }
    const Rational& atom_mass() const { return state_->atom_mass; }
    TieRule atom_tie() const { return state_->atom_tie; }
    const std::optional<RealFn>& stieltjes_fn() const { return state_->g; }

    /// Table measures are pinned to the scheme they were built on.
    bool compatible_with(const PartitionScheme& scheme) const {
        return !state_->bound_scheme_id || state_->bound_scheme_id == scheme.id();
    }

private:
    struct State {
        MeasureKind kind = MeasureKind::Custom;
        std::string name;
        std::function<double(const Fraction&)> value;
        std::function<std::optional<Rational>(const Fraction&)> exact;
        std::optional<Rational> atom_point;
        Rational atom_mass = 0;
        TieRule atom_tie = TieRule::Leftmost;
        std::optional<RealFn> g;
        const void* bound_scheme_id = nullptr;
    };

    explicit FinAddMeasure(std::shared_ptr<const State> s) : state_(std::move(s)) {}
    std::shared_ptr<const State> state_;
};

/// The measure differential along a monad: value at index n is the
/// measure of the n-th chain fraction.
inline EventualSeq differential(const FinAddMeasure& mu, const Monad& m) {
    if (!mu.compatible_with(m.scheme()))
        throw SchemeMismatch("measure '" + mu.name() + "' is bound to a different scheme");
    return EventualSeq([mu, m](std::size_t n) { return mu.value(m.chain(n)); },
                       "d(" + mu.name() + ") along " + m.note());
}

/// mu restricted to an open set: T maps to mu(openSet n T). Supported
/// for length and Stieltjes (overlaps evaluate exactly) and for atoms
/// whose point stays clear of the set's boundary.
inline FinAddMeasure restrict(const FinAddMeasure& mu, const OpenSet& open_set) {
    switch (mu.kind()) {
        case MeasureKind::Length: {
            auto value = [open_set](const Fraction& u) {
                Rational acc = 0;
                for (const auto& [lo, hi] : open_set.parts) {
                    Rational l = std::max(lo, u.lo), h = std::min(hi, u.hi);
                    if (l < h) acc += h - l;
                }
                return to_double(acc);
            };
            auto exact = [open_set](const Fraction& u) -> std::optional<Rational> {
                Rational acc = 0;
                for (const auto& [lo, hi] : open_set.parts) {
                    Rational l = std::max(lo, u.lo), h = std::min(hi, u.hi);
                    if (l < h) acc += h - l;
                }
                return acc;
            };
            return FinAddMeasure::from_fraction_fn(value, "length|restricted", exact);
        }
        case MeasureKind::Stieltjes: {
            RealFn g = *mu.stieltjes_fn();
            auto value = [open_set, g](const Fraction& u) {
                double acc = 0.0;
                for (const auto& [lo, hi] : open_set.parts) {
                    Rational l = std::max(lo, u.lo), h = std::min(hi, u.hi);
                    if (l < h) acc += g(to_double(h)) - g(to_double(l));
                }
                return acc;
            };
            std::function<std::optional<Rational>(const Fraction&)> exact;
            if (g.has_exact()) {
                exact = [open_set, g](const Fraction& u) -> std::optional<Rational> {
                    Rational acc = 0;
                    for (const auto& [lo, hi] : open_set.parts) {
                        Rational l = std::max(lo, u.lo), h = std::min(hi, u.hi);
                        if (l < h) {
                            auto vh = g.exact(h), vl = g.exact(l);
                            if (!vh || !vl) return std::nullopt;
                            acc += *vh - *vl;
                        }
                    }
                    return acc;
                };
            }
            return FinAddMeasure::from_fraction_fn(value, mu.name() + "|restricted", exact);
        }
        case MeasureKind::Atom: {
            const Rational& x0 = *mu.atom_point();
            if (open_set.on_boundary(x0))
                throw UnsupportedMeasureKind(
                    "atom at " + format_rational(x0) +
                    " lies on the boundary of the open set; membership is ambiguous");
            if (open_set.contains(x0)) return mu;
            return FinAddMeasure::from_fraction_fn([](const Fraction&) { return 0.0; },
                                                   mu.name() + "|restricted-away",
                                                   [](const Fraction&) -> std::optional<Rational> {
                                                       return Rational(0);
                                                   });
        }
        default:
            throw UnsupportedMeasureKind("restrict supports length, stieltjes and interior atoms");
    }
}

struct AdditivityReport {
    bool pass = true;
    bool exact = false;  // every inspected value had an exact rational route
    double worst = 0.0;
    std::optional<Fraction> worst_at;
    std::size_t checked = 0;
};

/// Verifies child-sum == parent value for every fraction above `depth`.
/// Rational-valued measures are compared exactly; double-valued ones get
/// a tiny relative tolerance.
inline AdditivityReport check_additivity(const FinAddMeasure& mu, const PartitionScheme& scheme,
                                         std::size_t depth) {
    if (depth < 1) throw std::invalid_argument("depth must be >= 1");
    AdditivityReport rep;
    rep.exact = mu.has_exact();
    for (std::size_t lv = 0; lv < depth; ++lv) {
        std::uint64_t count = scheme.count_at(lv);
        for (std::uint64_t k = 0; k < count; ++k) {
            Fraction u = scheme.fraction_at(lv, k);
            auto [cb, ce] = scheme.child_index_range(lv, k);
            if (rep.exact) {
                auto pv = mu.exact(u);
                Rational sum = 0;
                bool ok = pv.has_value();
                for (std::uint64_t c = cb; ok && c < ce; ++c) {
                    auto cv = mu.exact(scheme.fraction_at(lv + 1, c));
                    if (!cv)
                        ok = false;
                    else
                        sum += *cv;
                }
                if (ok) {
                    ++rep.checked;
                    if (*pv != sum) {
                        double gap = std::fabs(to_double(*pv - sum));
                        rep.pass = false;
                        if (gap > rep.worst) {
                            rep.worst = gap;
                            rep.worst_at = u;
                        }
                    }
                    continue;
                }
                rep.exact = false;  // fall through to doubles from here on
            }
            double pv = mu.value(u);
            double sum = 0.0;
            for (std::uint64_t c = cb; c < ce; ++c) sum += mu.value(scheme.fraction_at(lv + 1, c));
            ++rep.checked;
            double gap = std::fabs(pv - sum);
            double tol = 1e-9 * std::max(1.0, std::fabs(pv));
            if (gap > tol) {
                rep.pass = false;
                if (gap > rep.worst) {
                    rep.worst = gap;
                    rep.worst_at = u;
                }
            }
        }
    }
    return rep;
}

}  // namespace leibniz
