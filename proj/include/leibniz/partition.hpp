#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "leibniz/errors.hpp"
#include "leibniz/eventual_seq.hpp"
#include "leibniz/interval.hpp"
#include "leibniz/rational.hpp"

namespace leibniz {

/// One element of a partition level: a closed interval with non-empty
/// interior, tagged with its level and position within the level.
struct Fraction {
    Rational lo;
    Rational hi;
    std::size_t level = 0;
    std::uint64_t index = 0;

    Rational width() const { return hi - lo; }
    Rational midpoint() const { return (lo + hi) / 2; }
    double midpoint_double() const { return to_double(midpoint()); }
    bool contains(const Rational& p) const { return lo <= p && p <= hi; }
    /// Widened double enclosure of the exact interval.
    ValueInterval box() const { return {step_down(to_double(lo)), step_up(to_double(hi))}; }

    bool operator==(const Fraction& o) const {
        return level == o.level && index == o.index && lo == o.lo && hi == o.hi;
    }
};

/// Which neighbouring fraction a shared endpoint belongs to. Leftmost
/// picks the fraction having the point as its right endpoint (when one
/// exists); atoms placed at shared endpoints follow the same rule.
enum class TieRule { Leftmost, Rightmost };

inline const char* to_string(TieRule t) { return t == TieRule::Leftmost ? "left" : "right"; }

class Monad;

/// A monotone sequence of finite closed-interval partitions of [a, b]:
/// level 0 is {[a, b]} and each level refines the previous one, so every
/// non-root fraction has a unique parent. Dyadic schemes are implicit
/// (any (level, index) pair resolves in O(1) exact arithmetic); custom
/// schemes materialize levels on demand and are validated lazily.
class PartitionScheme {
public:
    enum class Kind { Dyadic, Custom };

    using LevelGenerator = std::function<std::vector<Fraction>(std::size_t)>;

    static PartitionScheme dyadic(Rational a, Rational b) {
        if (!(a < b)) throw DegenerateDomain("dyadic scheme needs a < b");
        auto s = std::make_shared<State>();
        s->kind = Kind::Dyadic;
        s->a = std::move(a);
        s->b = std::move(b);
        s->label = "dyadic";
        return PartitionScheme(std::move(s));
    }

    static PartitionScheme custom(Rational a, Rational b, LevelGenerator gen, std::string label) {
        if (!(a < b)) throw DegenerateDomain("custom scheme needs a < b");
        auto s = std::make_shared<State>();
        s->kind = Kind::Custom;
        s->a = std::move(a);
        s->b = std::move(b);
        s->generator = std::move(gen);
        s->label = std::move(label);
        return PartitionScheme(std::move(s));
    }

    Kind kind() const { return state_->kind; }
    const Rational& lo() const { return state_->a; }
    const Rational& hi() const { return state_->b; }
    const std::string& label() const { return state_->label; }
    Rational domain_width() const { return state_->b - state_->a; }

    bool same(const PartitionScheme& o) const { return state_ == o.state_; }
    const void* id() const { return state_.get(); }

    std::uint64_t count_at(std::size_t level) const {
        if (state_->kind == Kind::Dyadic) {
            if (level >= 63) throw std::invalid_argument("dyadic level too deep for 64-bit indexing");
            return std::uint64_t(1) << level;
        }
        return materialized(level).fractions.size();
    }

    Fraction fraction_at(std::size_t level, std::uint64_t index) const {
        if (state_->kind == Kind::Dyadic) {
            std::uint64_t count = count_at(level);
            if (index >= count) throw std::out_of_range("fraction index out of range");
            Rational w = level_width(level);
            Rational lo = state_->a + w * index;
            return Fraction{lo, index + 1 == count ? state_->b : lo + w, level, index};
        }
        const auto& lv = materialized(level);
        if (index >= lv.fractions.size()) throw std::out_of_range("fraction index out of range");
        return lv.fractions[index];
    }

    Fraction root() const { return Fraction{state_->a, state_->b, 0, 0}; }

    /// Exact width of dyadic level fractions.
    Rational level_width(std::size_t level) const {
        if (state_->kind != Kind::Dyadic) throw std::logic_error("level_width is dyadic-only");
        return domain_width() / pow2(static_cast<long>(level));
    }

    Fraction parent_of(const Fraction& u) const {
        if (u.level == 0) throw RootHasNoParent("level-0 fraction has no parent");
        if (state_->kind == Kind::Dyadic) return fraction_at(u.level - 1, u.index >> 1);
        const auto& lv = materialized(u.level);
        return fraction_at(u.level - 1, lv.parent_index[u.index]);
    }

    std::pair<std::uint64_t, std::uint64_t> child_index_range(std::size_t level, std::uint64_t index) const {
        if (state_->kind == Kind::Dyadic) return {index * 2, index * 2 + 2};
        const auto& child = materialized(level + 1);
        return {child.first_child_of_parent[index], child.first_child_of_parent[index + 1]};
    }

    std::vector<Fraction> children_of(const Fraction& u) const {
        auto [b, e] = child_index_range(u.level, u.index);
        std::vector<Fraction> out;
        out.reserve(e - b);
        for (std::uint64_t k = b; k < e; ++k) out.push_back(fraction_at(u.level + 1, k));
        return out;
    }

    /// Index of the level-`level` fraction whose chain at `p` the tie
    /// rule selects.
    std::uint64_t index_at(const Rational& p, std::size_t level, TieRule tie) const {
        if (p < state_->a || p > state_->b) throw PointOutsideDomain("point outside [a,b]");
        if (state_->kind == Kind::Dyadic) {
            std::uint64_t count = count_at(level);
            Rational t = (p - state_->a) / level_width(level);
            BigInt k = floor_to_int(t);
            if (Rational(k) == t) {  // p is a level endpoint
                if (tie == TieRule::Leftmost)
                    return k > 0 ? (k - 1).convert_to<std::uint64_t>() : 0;
                auto ku = k.convert_to<std::uint64_t>();
                return ku < count ? ku : count - 1;
            }
            return k.convert_to<std::uint64_t>();
        }
        const auto& lv = materialized(level);
        // Fractions are ordered and tile [a,b]; find by upper endpoint.
        std::size_t lo = 0, hi = lv.fractions.size() - 1;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (lv.fractions[mid].hi < p)
                lo = mid + 1;
            else
                hi = mid;
        }
        // lo is the first fraction with hi >= p.
        if (lv.fractions[lo].hi == p && tie == TieRule::Rightmost && lo + 1 < lv.fractions.size())
            return lo + 1;
        if (lv.fractions[lo].lo == p && tie == TieRule::Leftmost && lo > 0)
            return lo - 1;
        return lo;
    }

    Monad monad_at(const Rational& p, TieRule tie = TieRule::Leftmost) const;
    Monad monad_from_path(std::function<std::uint64_t(std::size_t level, std::uint64_t parent_index)> pick,
                          std::string note = "path monad") const;

    /// Certified iff the maximal width at `depth` is <= tol (widths are
    /// non-increasing by nesting). Never refutes: a stagnant scheme is
    /// reported Undetermined at the inspected horizon.
    CompareVerdict infinitesimal_check(std::size_t depth, double tol) const {
        if (depth < 1) throw std::invalid_argument("depth must be >= 1");
        Rational qtol = rational_from_double(tol);
        for (std::size_t lv = 0; lv <= depth; ++lv) {
            if (max_width_at(lv) <= qtol) return CompareVerdict::make_certified(lv, depth);
        }
        return CompareVerdict::make_undetermined(depth);
    }

    Rational max_width_at(std::size_t level) const {
        if (state_->kind == Kind::Dyadic) return level_width(level);
        const auto& lv = materialized(level);
        Rational w = 0;
        for (const auto& f : lv.fractions)
            if (f.width() > w) w = f.width();
        return w;
    }

    /// Materialized (and validated) level; guarded against runaway sizes.
    const std::vector<Fraction>& level(std::size_t n) const { return materialized(n).fractions; }

private:
    struct Level {
        std::vector<Fraction> fractions;
        std::vector<std::uint64_t> parent_index;          // per fraction
        std::vector<std::uint64_t> first_child_of_parent;  // size = parent count + 1
    };

    struct State {
        Kind kind = Kind::Dyadic;
        Rational a, b;
        LevelGenerator generator;
        std::string label;
        mutable std::mutex mutex;
        mutable std::vector<Level> levels;
    };

    explicit PartitionScheme(std::shared_ptr<State> s) : state_(std::move(s)) {}

    const Level& materialized(std::size_t n) const {
        State& s = *state_;
        std::lock_guard<std::mutex> lock(s.mutex);
        if (s.kind == Kind::Dyadic) {
            // Materializing deep dyadic levels is almost always a bug;
            // the implicit accessors cover them.
            if (n > 22) throw std::invalid_argument("refusing to materialize dyadic level > 22");
        }
        while (s.levels.size() <= n) {
            std::size_t lv = s.levels.size();
            Level out;
            if (s.kind == Kind::Dyadic) {
                std::uint64_t count = std::uint64_t(1) << lv;
                Rational w = (s.b - s.a) / pow2(static_cast<long>(lv));
                out.fractions.reserve(count);
                Rational lo = s.a;
                for (std::uint64_t k = 0; k < count; ++k) {
                    Rational hi = k + 1 == count ? s.b : lo + w;
                    out.fractions.push_back(Fraction{lo, hi, lv, k});
                    lo = hi;
                }
            } else {
                out.fractions = lv == 0 ? std::vector<Fraction>{Fraction{s.a, s.b, 0, 0}}
                                        : s.generator(lv);
                if (out.fractions.size() > (std::size_t(1) << 22))
                    throw SchemeViolation("custom level " + std::to_string(lv) + " too large");
                validate_level(s, lv, out.fractions);
            }
            if (lv == 0) {
                out.parent_index = {0};
                out.first_child_of_parent = {0, 1};
            } else {
                link_to_parent(s.levels[lv - 1].fractions, out, lv);
            }
            s.levels.push_back(std::move(out));
        }
        return s.levels[n];
    }

    static void validate_level(const State& s, std::size_t lv, std::vector<Fraction>& fr) {
        if (fr.empty()) throw SchemeViolation("level " + std::to_string(lv) + " is empty");
        if (fr.front().lo != s.a || fr.back().hi != s.b)
            throw SchemeViolation("level " + std::to_string(lv) + " does not cover the domain");
        for (std::size_t i = 0; i < fr.size(); ++i) {
            fr[i].level = lv;
            fr[i].index = i;
            if (!(fr[i].lo < fr[i].hi))
                throw SchemeViolation("empty-interior fraction at level " + std::to_string(lv));
            if (i && fr[i].lo != fr[i - 1].hi)
                throw SchemeViolation("gap or overlap at level " + std::to_string(lv) +
                                      ", index " + std::to_string(i));
        }
    }

    static void link_to_parent(const std::vector<Fraction>& parents, Level& child, std::size_t lv) {
        child.parent_index.resize(child.fractions.size());
        child.first_child_of_parent.assign(parents.size() + 1, 0);
        std::size_t p = 0;
        for (std::size_t i = 0; i < child.fractions.size(); ++i) {
            const Fraction& c = child.fractions[i];
            while (p < parents.size() && parents[p].hi <= c.lo) ++p;
            if (p >= parents.size() || c.lo < parents[p].lo || c.hi > parents[p].hi)
                throw SchemeViolation("level " + std::to_string(lv) + " fraction " +
                                      std::to_string(i) + " not nested in a unique parent");
            child.parent_index[i] = p;
        }
        for (std::size_t i = 0; i < child.fractions.size(); ++i)
            child.first_child_of_parent[child.parent_index[i] + 1] = i + 1;
        for (std::size_t i = 1; i <= parents.size(); ++i) {
            if (child.first_child_of_parent[i] <= child.first_child_of_parent[i - 1])
                throw SchemeViolation("parent without children at level " + std::to_string(lv - 1));
        }
    }

    std::shared_ptr<State> state_;
};

/// A nested chain of fractions, one per level. Monads built from a known
/// point carry the point as an exact anchor; anonymous chains are driven
/// by a descent rule. The chain is memoized compute-once and safe to
/// share between threads.
class Monad {
public:
    Fraction chain(std::size_t level) const { return scheme().fraction_at(level, index_at(level)); }

    std::uint64_t index_at(std::size_t level) const {
        State& s = *state_;
        std::lock_guard<std::mutex> lock(s.mutex);
        while (s.path.size() <= level) {
            std::size_t lv = s.path.size();
            std::uint64_t idx;
            if (s.anchor) {
                idx = s.scheme.index_at(*s.anchor, lv, s.tie);
            } else {
                idx = lv == 0 ? 0 : s.pick(lv, s.path[lv - 1]);
                auto [b, e] = lv == 0 ? std::pair<std::uint64_t, std::uint64_t>{0, 1}
                                      : s.scheme.child_index_range(lv - 1, s.path[lv - 1]);
                if (idx < b || idx >= e)
                    throw SchemeViolation("descent rule left the refinement tree at level " +
                                          std::to_string(lv));
            }
            s.path.push_back(idx);
        }
        return s.path[level];
    }

    const PartitionScheme& scheme() const { return state_->scheme; }
    const std::optional<Rational>& anchor() const { return state_->anchor; }
    TieRule tie() const { return state_->tie; }
    const std::string& note() const { return state_->note; }

private:
    friend class PartitionScheme;

    struct State {
        explicit State(PartitionScheme s) : scheme(std::move(s)) {}
        PartitionScheme scheme;
        std::optional<Rational> anchor;
        TieRule tie = TieRule::Leftmost;
        std::function<std::uint64_t(std::size_t, std::uint64_t)> pick;
        std::string note;
        mutable std::mutex mutex;
        mutable std::vector<std::uint64_t> path;
    };

    explicit Monad(std::shared_ptr<State> s) : state_(std::move(s)) {}
    std::shared_ptr<State> state_;
};

inline Monad PartitionScheme::monad_at(const Rational& p, TieRule tie) const {
    if (p < state_->a || p > state_->b) throw PointOutsideDomain("monad_at: point outside [a,b]");
    auto ms = std::make_shared<Monad::State>(*this);
    ms->anchor = p;
    ms->tie = tie;
    ms->note = "monad_at(" + format_rational(p) + ", " + to_string(tie) + ")";
    return Monad(std::move(ms));
}

inline Monad PartitionScheme::monad_from_path(
    std::function<std::uint64_t(std::size_t, std::uint64_t)> pick, std::string note) const {
    auto ms = std::make_shared<Monad::State>(*this);
    ms->pick = std::move(pick);
    ms->note = std::move(note);
    return Monad(std::move(ms));
}

/// Midpoint of the first chain fraction whose width is <= tol; the true
/// limit point lies within tol of the returned value. Probing stops at
/// `max_probe_level` and reports a non-shrinking chain.
inline double monad_limit(const Monad& m, double tol, std::size_t max_probe_level = 256) {
    if (!(tol > 0.0)) throw std::invalid_argument("monad_limit: tol must be positive");
    Rational qtol = rational_from_double(tol);
    for (std::size_t lv = 0; lv <= max_probe_level; ++lv) {
        Fraction f = m.chain(lv);
        if (f.width() <= qtol) return f.midpoint_double();
    }
    throw NotShrinking("chain width did not reach tol by level " + std::to_string(max_probe_level));
}

}  // namespace leibniz
