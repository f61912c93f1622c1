#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "leibniz/distribution.hpp"
#include "leibniz/errors.hpp"
#include "leibniz/eventual_seq.hpp"
#include "leibniz/interval.hpp"
#include "leibniz/measure.hpp"
#include "leibniz/partition.hpp"
#include "leibniz/rational.hpp"
#include "leibniz/real_fn.hpp"

namespace leibniz {

struct LevelSums {
    std::size_t level = 0;
    double lower = 0.0;
    double upper = 0.0;
    double gap() const { return upper - lower; }
};

/// One element of the refinement antichain the sandwich measures are
/// built on, with the lower/upper bound of the distribution over it.
struct FrontCell {
    std::size_t level = 0;
    std::uint64_t index = 0;
    double lo = 0.0;
    double up = 0.0;
};

namespace detail {
struct Accumulator {
    // Neumaier compensated summation.
    double sum = 0.0, comp = 0.0;
    void add(double x) {
        double t = sum + x;
        comp += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    double get() const { return sum + comp; }
};
}  // namespace detail

/// A pair of finitely additive step measures represented on an antichain
/// of fractions (the "front"): on a front cell the measure takes the
/// recorded bound, below the front it distributes a cell's value in
/// proportion to the base measure, above it values add up the tree.
class SandwichFront {
public:
    SandwichFront(PartitionScheme scheme, FinAddMeasure base, std::vector<FrontCell> cells)
        : scheme_(std::move(scheme)), base_(std::move(base)), cells_(std::move(cells)) {
        if (cells_.empty()) throw std::invalid_argument("empty sandwich front");
        for (const auto& c : cells_) max_level_ = std::max(max_level_, c.level);
        if (scheme_.kind() == PartitionScheme::Kind::Dyadic) {
            std::sort(cells_.begin(), cells_.end(), [&](const FrontCell& a, const FrontCell& b) {
                return pos(a) < pos(b);
            });
            pos_.reserve(cells_.size());
            for (const auto& c : cells_) pos_.push_back(pos(c));
        } else {
            lo_.reserve(cells_.size());
            for (const auto& c : cells_) lo_.push_back(scheme_.fraction_at(c.level, c.index).lo);
            std::vector<std::size_t> order(cells_.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return lo_[a] < lo_[b]; });
            std::vector<FrontCell> sc;
            std::vector<Rational> sl;
            sc.reserve(cells_.size());
            sl.reserve(cells_.size());
            for (auto i : order) {
                sc.push_back(cells_[i]);
                sl.push_back(lo_[i]);
            }
            cells_ = std::move(sc);
            lo_ = std::move(sl);
        }
        prefix_lo_.resize(cells_.size() + 1, 0.0);
        prefix_up_.resize(cells_.size() + 1, 0.0);
        long double alo = 0.0L, aup = 0.0L;
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            alo += cells_[i].lo;
            aup += cells_[i].up;
            prefix_lo_[i + 1] = static_cast<double>(alo);
            prefix_up_[i + 1] = static_cast<double>(aup);
        }
    }

    const std::vector<FrontCell>& cells() const { return cells_; }
    std::size_t max_level() const { return max_level_; }
    double total(bool upper) const { return upper ? prefix_up_.back() : prefix_lo_.back(); }

    /// Value of the lower (upper) step measure on an arbitrary fraction.
    double value_on(const Fraction& u, bool upper) const {
        if (scheme_.kind() == PartitionScheme::Kind::Dyadic) {
            std::size_t shift = max_level_ - std::min(u.level, max_level_);
            if (u.level > max_level_) {
                // strictly below every front cell: locate the container
                std::uint64_t upos = u.index >> (u.level - max_level_);
                std::size_t i = locate(upos);
                return proportional(cells_[i], u, upper);
            }
            std::uint64_t ub = u.index << shift;
            std::uint64_t ue = (u.index + 1) << shift;
            std::size_t i = locate(ub);
            std::uint64_t ispan = std::uint64_t(1) << (max_level_ - cells_[i].level);
            if (pos_[i] <= ub && pos_[i] + ispan >= ue) {
                if (cells_[i].level == u.level) return upper ? cells_[i].up : cells_[i].lo;
                return proportional(cells_[i], u, upper);
            }
            // ancestor of a contiguous run of cells
            auto jt = std::lower_bound(pos_.begin() + static_cast<std::ptrdiff_t>(i), pos_.end(), ue);
            std::size_t j = static_cast<std::size_t>(jt - pos_.begin());
            return (upper ? prefix_up_[j] : prefix_lo_[j]) - (upper ? prefix_up_[i] : prefix_lo_[i]);
        }
        // custom scheme: rational interval relations
        double acc = 0.0;
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            Fraction f = scheme_.fraction_at(cells_[i].level, cells_[i].index);
            if (u.lo <= f.lo && f.hi <= u.hi) {
                acc += upper ? cells_[i].up : cells_[i].lo;
            } else if (f.lo <= u.lo && u.hi <= f.hi) {
                return proportional(cells_[i], u, upper);
            }
        }
        return acc;
    }

private:
    std::uint64_t pos(const FrontCell& c) const { return c.index << (max_level_ - c.level); }

    std::size_t locate(std::uint64_t p) const {
        auto it = std::upper_bound(pos_.begin(), pos_.end(), p);
        return static_cast<std::size_t>(it - pos_.begin()) - 1;
    }

    double proportional(const FrontCell& c, const Fraction& u, bool upper) const {
        double bound = upper ? c.up : c.lo;
        if (bound == 0.0) return 0.0;
        Fraction f = scheme_.fraction_at(c.level, c.index);
        double mf = base_.value(f);
        if (mf == 0.0) return 0.0;
        return bound * (base_.value(u) / mf);
    }

    PartitionScheme scheme_;
    FinAddMeasure base_;
    std::vector<FrontCell> cells_;
    std::vector<std::uint64_t> pos_;  // dyadic position keys
    std::vector<Rational> lo_;        // custom scheme keys
    std::vector<double> prefix_lo_, prefix_up_;
    std::size_t max_level_ = 0;
};

struct ConditionVerdict {
    std::string condition;
    CompareVerdict verdict;
};

/// A verified sandwich witnessing an integral value interval: two
/// finitely additive measures whose differentials pinch the distribution
/// in the declared comparison mode, with totals within epsilon of the
/// reported value.
struct IntegralCertificate {
    explicit IntegralCertificate(PartitionScheme s) : scheme(std::move(s)) {}

    double value = 0.0;
    double epsilon = 0.0;
    std::size_t certified_depth = 0;
    CompareMode mode = CompareMode::Eventual;
    double lower_total = 0.0;
    double upper_total = 0.0;
    std::vector<LevelSums> sums_by_level;
    std::vector<std::string> caveats;
    std::vector<ConditionVerdict> verdicts;

    /// Explicit per-level tables of both measures (level -> value per
    /// fraction index), up to table_depth. These are the mutable record
    /// verify_certificate audits.
    std::size_t table_depth = 0;
    std::vector<std::vector<double>> lower_table, upper_table;

    PartitionScheme scheme;
    std::shared_ptr<const SandwichFront> front;  // generic constructions
    std::optional<FinAddMeasure> exact_lower, exact_upper;  // exact differential fast paths

    FinAddMeasure lower_measure() const { return side_measure(false); }
    FinAddMeasure upper_measure() const { return side_measure(true); }

    std::vector<double> gap_by_level() const {
        std::vector<double> out;
        out.reserve(sums_by_level.size());
        for (const auto& s : sums_by_level) out.push_back(s.gap());
        return out;
    }

private:
    FinAddMeasure side_measure(bool upper) const {
        if (upper && exact_upper) return *exact_upper;
        if (!upper && exact_lower) return *exact_lower;
        auto f = front;
        if (!f) throw std::logic_error("certificate has no sandwich backing");
        return FinAddMeasure::from_fraction_fn(
            [f, upper](const Fraction& u) { return f->value_on(u, upper); },
            upper ? "sandwich-upper" : "sandwich-lower");
    }
};

struct IntegrationFailure {
    std::size_t max_depth = 0;
    double residual_gap = 0.0;
    std::vector<LevelSums> sums_by_level;
    std::string reason;
};

/// integrate() never guesses: either a certificate or an explicit
/// failure carrying the residual gap.
class IntegrateResult {
public:
    IntegrateResult(IntegralCertificate c) : v_(std::move(c)) {}
    IntegrateResult(IntegrationFailure f) : v_(std::move(f)) {}

    bool certified() const { return std::holds_alternative<IntegralCertificate>(v_); }
    const IntegralCertificate& certificate() const { return std::get<IntegralCertificate>(v_); }
    IntegralCertificate& certificate() { return std::get<IntegralCertificate>(v_); }
    const IntegrationFailure& failure() const { return std::get<IntegrationFailure>(v_); }

    const std::vector<LevelSums>& sums_by_level() const {
        return certified() ? certificate().sums_by_level : failure().sums_by_level;
    }

private:
    std::variant<IntegralCertificate, IntegrationFailure> v_;
};

struct BoundResult {
    ValueInterval box;
    bool sampled = false;
};

/// Range of the distribution's level-u values over monads through u:
/// the constructor's boundHint when present, otherwise a sampled hull
/// (flagged, and recorded as a certificate caveat by the integrator).
inline BoundResult bound_on_fraction(const MonadicDistribution& phi, const Fraction& u) {
    if (auto b = phi.bound_hint(u)) return {*b, phi.bounds_sampled()};
    const PartitionScheme& scheme = phi.scheme();
    ValueInterval hull{kInf, -kInf};
    constexpr int kSamples = 9;
    for (int i = 0; i <= kSamples; ++i) {
        Rational p = u.lo + u.width() * i / kSamples;
        TieRule tie = i == 0 ? TieRule::Rightmost : TieRule::Leftmost;
        double v = phi.eval_on(scheme.monad_at(p, tie))(u.level);
        hull.lo = std::min(hull.lo, v);
        hull.hi = std::max(hull.hi, v);
    }
    return {hull, true};
}

namespace detail {

struct LoopOutcome {
    bool certified = false;
    std::size_t depth = 0;
    std::vector<LevelSums> sums;
    std::vector<FrontCell> front;
    std::string fail_reason;
    bool sampled = false;
};

constexpr std::size_t kFastCellBudget = std::size_t(1) << 23;
constexpr std::size_t kExactCellBudget = std::size_t(1) << 21;

/// Level-synchronous refinement with freezing: cells whose bound pair
/// already has zero gap contribute exactly and are never refined again.
/// Generic variant: exact fractions, constructor bounds (or sampling).
inline LoopOutcome darboux_exact_loop(const MonadicDistribution& phi, const PartitionScheme& scheme,
                                      double epsilon, std::size_t max_depth, bool stop_on_gap) {
    struct Cell {
        Fraction u;
        ValueInterval b;
    };
    LoopOutcome out;
    Accumulator settled_lo, settled_up;
    std::vector<FrontCell> settled;
    std::vector<Cell> active;

    auto classify = [&](Cell&& c) {
        if (c.b.hi == c.b.lo) {
            settled_lo.add(c.b.lo);
            settled_up.add(c.b.hi);
            settled.push_back({c.u.level, c.u.index, c.b.lo, c.b.hi});
        } else {
            active.push_back(std::move(c));
        }
    };

    {
        Fraction root = scheme.root();
        BoundResult b = bound_on_fraction(phi, root);
        out.sampled |= b.sampled;
        classify({root, b.box});
    }

    for (std::size_t depth = 0;; ++depth) {
        Accumulator lo = settled_lo, up = settled_up;
        for (const auto& c : active) {
            lo.add(c.b.lo);
            up.add(c.b.hi);
        }
        out.sums.push_back({depth, lo.get(), up.get()});
        double gap = up.get() - lo.get();
        if (stop_on_gap && gap <= 2.0 * epsilon) {
            out.certified = true;
            out.depth = depth;
            break;
        }
        if (depth == max_depth) {
            out.certified = !stop_on_gap;
            out.depth = depth;
            if (stop_on_gap) out.fail_reason = "gap did not close by the depth cap";
            break;
        }
        std::vector<Cell> next;
        next.reserve(active.size() * 2);
        bool over_budget = false;
        for (const auto& c : active) {
            for (Fraction& child : scheme.children_of(c.u)) {
                BoundResult b = bound_on_fraction(phi, child);
                out.sampled |= b.sampled;
                Cell cc{std::move(child), b.box};
                if (cc.b.hi == cc.b.lo) {
                    settled_lo.add(cc.b.lo);
                    settled_up.add(cc.b.hi);
                    settled.push_back({cc.u.level, cc.u.index, cc.b.lo, cc.b.hi});
                } else {
                    next.push_back(std::move(cc));
                }
            }
            if (next.size() > kExactCellBudget) {
                over_budget = true;
                break;
            }
        }
        if (over_budget) {
            out.certified = false;
            out.depth = depth;
            out.fail_reason = "cell budget exceeded at level " + std::to_string(depth + 1);
            break;
        }
        active = std::move(next);
    }

    out.front = std::move(settled);
    out.front.reserve(out.front.size() + active.size());
    for (const auto& c : active) out.front.push_back({c.u.level, c.u.index, c.b.lo, c.b.hi});
    return out;
}

/// Dyadic variant driven entirely by double geometry; used when the
/// distribution offers a fast bound route.
inline LoopOutcome darboux_fast_loop(const MonadicDistribution& phi, const PartitionScheme& scheme,
                                     double epsilon, std::size_t max_depth, bool stop_on_gap) {
    struct Cell {
        std::uint64_t k;
        double lo, up;
    };
    LoopOutcome out;
    const double ad = to_double(scheme.lo());

    auto geom_at = [&](std::size_t level, std::uint64_t k, const ValueInterval& width_iv) {
        double wd = width_iv.mid();
        double x = std::fma(static_cast<double>(k), wd, ad);
        double y = std::fma(static_cast<double>(k + 1), wd, ad);
        CellGeom g;
        g.level = level;
        g.lo_pt = widen({x, x}, 4);
        g.hi_pt = widen({y, y}, 4);
        g.width_iv = width_iv;
        g.box = {g.lo_pt.lo, g.hi_pt.hi};
        return g;
    };

    Accumulator settled_lo, settled_up;
    std::vector<FrontCell> settled;
    std::vector<Cell> active;

    ValueInterval w0 = iv_of(scheme.domain_width());
    {
        ValueInterval b = phi.fast_bound(geom_at(0, 0, w0));
        if (b.hi == b.lo) {
            settled_lo.add(b.lo);
            settled_up.add(b.hi);
            settled.push_back({0, 0, b.lo, b.hi});
        } else {
            active.push_back({0, b.lo, b.hi});
        }
    }

    for (std::size_t depth = 0;; ++depth) {
        Accumulator lo = settled_lo, up = settled_up;
        for (const auto& c : active) {
            lo.add(c.lo);
            up.add(c.up);
        }
        out.sums.push_back({depth, lo.get(), up.get()});
        double gap = up.get() - lo.get();
        if (stop_on_gap && gap <= 2.0 * epsilon) {
            out.certified = true;
            out.depth = depth;
            break;
        }
        if (depth == max_depth) {
            out.certified = !stop_on_gap;
            out.depth = depth;
            if (stop_on_gap) out.fail_reason = "gap did not close by the depth cap";
            break;
        }
        if (active.size() * 2 > kFastCellBudget) {
            out.certified = false;
            out.depth = depth;
            out.fail_reason = "cell budget exceeded at level " + std::to_string(depth + 1);
            break;
        }
        ValueInterval w = iv_of(scheme.level_width(depth + 1));
        std::vector<Cell> next;
        next.reserve(active.size() * 2);
        for (const auto& c : active) {
            for (std::uint64_t k = c.k * 2; k <= c.k * 2 + 1; ++k) {
                ValueInterval b = phi.fast_bound(geom_at(depth + 1, k, w));
                if (b.hi == b.lo) {
                    settled_lo.add(b.lo);
                    settled_up.add(b.hi);
                    settled.push_back({depth + 1, k, b.lo, b.hi});
                } else {
                    next.push_back({k, b.lo, b.hi});
                }
            }
        }
        active = std::move(next);
    }

    out.front = std::move(settled);
    out.front.reserve(out.front.size() + active.size());
    for (const auto& c : active) out.front.push_back({out.depth, c.k, c.lo, c.up});
    return out;
}

/// Deepest chain level that is safe to probe: dyadic schemes are capped
/// only by 64-bit indexing, custom schemes by level materialization.
inline std::size_t probe_horizon(const PartitionScheme& scheme, std::size_t certified_depth) {
    std::size_t cap = scheme.kind() == PartitionScheme::Kind::Dyadic ? 60 : 12;
    return std::min(cap, certified_depth * 2 + 8);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::vector<Monad> probe_monads(const PartitionScheme& scheme,
                                       const MonadicDistribution& phi, std::size_t count,
                                       std::uint64_t seed) {
    std::vector<Monad> out;
    out.push_back(scheme.monad_at(scheme.lo(), TieRule::Rightmost));
    out.push_back(scheme.monad_at(scheme.hi(), TieRule::Leftmost));
    out.push_back(scheme.monad_at((scheme.lo() + scheme.hi()) / 2, TieRule::Leftmost));
    if (phi.delta_point()) {
        out.push_back(scheme.monad_at(*phi.delta_point(), phi.delta_tie()));
        out.push_back(scheme.monad_at(*phi.delta_point(), phi.delta_tie() == TieRule::Leftmost
                                                              ? TieRule::Rightmost
                                                              : TieRule::Leftmost));
    }
    std::size_t anchored = count / 2;
    for (std::size_t i = 0; out.size() < 3 + anchored; ++i) {
        std::uint64_t r = splitmix64(seed ^ (0xA11CE + i)) >> 24;  // 40 random bits
        Rational p = scheme.lo() + scheme.domain_width() * Rational(r, BigInt(1) << 40);
        out.push_back(scheme.monad_at(p, (r & 1) ? TieRule::Leftmost : TieRule::Rightmost));
    }
    for (std::size_t i = 0; out.size() < count + 3; ++i) {
        std::uint64_t s = splitmix64(seed ^ (0xBEEF + i));
        out.push_back(scheme.monad_from_path(
            [s, &scheme](std::size_t level, std::uint64_t parent) {
                auto [b, e] = scheme.child_index_range(level - 1, parent);
                return b + splitmix64(s ^ level * 0x9E37ull ^ parent) % (e - b);
            },
            "probe-path-" + std::to_string(i)));
    }
    return out;
}

/// The sandwich inequalities hold exactly in real arithmetic; probing
/// them re-evaluates both sides in doubles, so the dominating side gets
/// a few ulps of slack to absorb rounding.
inline EventualSeq with_rounding_slack(const EventualSeq& a, const EventualSeq& ref) {
    return EventualSeq(
        [a, ref](std::size_t n) {
            double x = a(n);
            double scale = std::fabs(x) + std::fabs(ref(n));
            return x + 8.0 * std::numeric_limits<double>::epsilon() * scale;
        },
        a.note() + " [ulp slack]");
}

struct VerdictAggregate {
    bool any = false;
    CompareVerdict worst;

    static int rank(const CompareVerdict& v) {
        return v.refuted() ? 0 : v.undetermined() ? 1 : 2;
    }

    void fold(const CompareVerdict& v) {
        if (!any) {
            worst = v;
            any = true;
            return;
        }
        int rv = rank(v), rw = rank(worst);
        if (rv < rw) {
            worst = v;
        } else if (rv == rw && v.certified() && v.index > worst.index) {
            worst = v;  // keep the latest certified start index
        }
    }
};

}  // namespace detail

/// Full lower/upper Darboux table to a fixed depth (no early stop); the
/// workhorse behind the estimate-level comparison principle checks.
inline std::vector<LevelSums> darboux_table(const MonadicDistribution& phi,
                                            const PartitionScheme& scheme, std::size_t depth) {
    if (!phi.scheme().same(scheme)) throw SchemeMismatch("distribution built on another scheme");
    auto outcome = (scheme.kind() == PartitionScheme::Kind::Dyadic && phi.has_fast_bound())
                       ? detail::darboux_fast_loop(phi, scheme, 0.0, depth, false)
                       : detail::darboux_exact_loop(phi, scheme, 0.0, depth, false);
    if (!outcome.fail_reason.empty()) throw Error("darboux_table: " + outcome.fail_reason);
    return outcome.sums;
}

/// The Leibniz integral via sandwich search. Exact differentials (dmu,
/// df) certify immediately with the measure itself on both sides; the
/// delta-pairing certifies with the tie-consistent atom; everything else
/// runs the Darboux refinement until the global gap falls within 2*eps.
inline IntegrateResult integrate(const MonadicDistribution& phi, const PartitionScheme& scheme,
                                 double epsilon, std::size_t max_depth,
                                 CompareMode mode = CompareMode::Eventual,
                                 std::size_t condition_probes = 10) {
    if (!phi.scheme().same(scheme)) throw SchemeMismatch("distribution built on another scheme");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (max_depth > 60) throw std::invalid_argument("max_depth above the 64-bit indexing cap");

    constexpr std::size_t kTableCap = 8;

    auto finish = [&](IntegralCertificate&& cert) -> IntegrateResult {
        // explicit tables, bottom-up so additivity is exact by construction
        cert.table_depth = std::min<std::size_t>(kTableCap, std::max<std::size_t>(cert.certified_depth, 4));
        FinAddMeasure lower = cert.lower_measure(), upper = cert.upper_measure();
        cert.lower_table.assign(cert.table_depth + 1, {});
        cert.upper_table.assign(cert.table_depth + 1, {});
        std::size_t bottom = cert.table_depth;
        cert.lower_table[bottom].resize(scheme.count_at(bottom));
        cert.upper_table[bottom].resize(scheme.count_at(bottom));
        for (std::uint64_t k = 0; k < scheme.count_at(bottom); ++k) {
            Fraction u = scheme.fraction_at(bottom, k);
            cert.lower_table[bottom][k] = lower.value(u);
            cert.upper_table[bottom][k] = upper.value(u);
        }
        for (std::size_t lv = bottom; lv-- > 0;) {
            cert.lower_table[lv].resize(scheme.count_at(lv));
            cert.upper_table[lv].resize(scheme.count_at(lv));
            for (std::uint64_t k = 0; k < scheme.count_at(lv); ++k) {
                auto [b, e] = scheme.child_index_range(lv, k);
                double slo = 0.0, sup = 0.0;
                for (std::uint64_t c = b; c < e; ++c) {
                    slo += cert.lower_table[lv + 1][c];
                    sup += cert.upper_table[lv + 1][c];
                }
                cert.lower_table[lv][k] = slo;
                cert.upper_table[lv][k] = sup;
            }
        }

        // probe the three certificate conditions
        std::size_t horizon = detail::probe_horizon(scheme, cert.certified_depth);
        detail::VerdictAggregate upper_dom, lower_dom;
        for (const Monad& m : detail::probe_monads(scheme, phi, condition_probes, 0x5EED)) {
            EventualSeq sphi = phi.eval_on(m);
            EventualSeq sup = differential(upper, m), slo = differential(lower, m);
            upper_dom.fold(majorizes(detail::with_rounding_slack(sup, sphi), sphi, horizon, mode));
            lower_dom.fold(majorizes(detail::with_rounding_slack(sphi, slo), slo, horizon, mode));
        }
        bool upper_end = cert.upper_total <= cert.value + cert.epsilon * (1 + 1e-12) + 1e-300;
        bool lower_end = cert.lower_total >= cert.value - cert.epsilon * (1 + 1e-12) - 1e-300;
        cert.verdicts.push_back({"d(mu2) majorizes phi", upper_dom.worst});
        cert.verdicts.push_back({"phi majorizes d(mu1)", lower_dom.worst});
        cert.verdicts.push_back({"mu2(X) <= I + eps", upper_end
                                                          ? CompareVerdict::make_certified(0, 0)
                                                          : CompareVerdict::make_refuted(0, 0)});
        cert.verdicts.push_back({"mu1(X) >= I - eps", lower_end
                                                          ? CompareVerdict::make_certified(0, 0)
                                                          : CompareVerdict::make_refuted(0, 0)});
        if (mode == CompareMode::Total &&
            (upper_dom.worst.refuted() || lower_dom.worst.refuted())) {
            return IntegrationFailure{max_depth, cert.upper_total - cert.lower_total,
                                      cert.sums_by_level,
                                      "total-mode domination refuted on a probed monad"};
        }
        return std::move(cert);
    };

    // Exact differentials: I = mu(X), both sandwich measures are mu.
    // df qualifies because endpoint differences telescope: the map
    // U -> f(hi) - f(lo) is finitely additive by construction.
    if (phi.kind() == DistKind::MeasureDiff || phi.kind() == DistKind::Df) {
        FinAddMeasure mu = [&] {
            if (phi.kind() == DistKind::MeasureDiff) return *phi.pairing_measure();
            RealFn f = *phi.fn();
            std::function<std::optional<Rational>(const Fraction&)> exact;
            if (f.has_exact()) {
                exact = [f](const Fraction& u) -> std::optional<Rational> {
                    auto vh = f.exact(u.hi), vl = f.exact(u.lo);
                    if (!vh || !vl) return std::nullopt;
                    return *vh - *vl;
                };
            }
            // double route matches df_dist's evaluation bit for bit, so
            // domination probes see exact termwise equality
            return FinAddMeasure::from_fraction_fn(
                [f](const Fraction& u) {
                    if (f.has_exact()) {
                        auto vh = f.exact(u.hi), vl = f.exact(u.lo);
                        if (vh && vl) return to_double(*vh - *vl);
                    }
                    return f(to_double(u.hi)) - f(to_double(u.lo));
                },
                phi.label() + "-net", exact);
        }();
        IntegralCertificate cert(scheme);
        cert.mode = mode;
        cert.epsilon = epsilon;
        cert.certified_depth = 0;
        auto q = mu.exact(scheme.root());
        cert.value = q ? to_double(*q) : mu.value(scheme.root());
        cert.lower_total = cert.upper_total = cert.value;
        cert.sums_by_level = {{0, cert.value, cert.value}};
        cert.exact_lower = cert.exact_upper = mu;
        return finish(std::move(cert));
    }

    // Atomic sandwich for the delta pairing: mu1 = mu2 = unit atom, so
    // the integral is exactly 1. Total mode has no atomic sandwich (the
    // atom differential exceeds zero at finitely many early levels on
    // off-monads), so it falls through to the generic search.
    if (phi.kind() == DistKind::DeltaTimesDmu && mode != CompareMode::Total) {
        FinAddMeasure atom = FinAddMeasure::atom(*phi.delta_point(), Rational(1), phi.delta_tie(),
                                                 scheme.lo(), scheme.hi());
        IntegralCertificate cert(scheme);
        cert.mode = mode;
        cert.epsilon = epsilon;
        cert.certified_depth = 0;
        cert.value = 1.0;
        cert.lower_total = cert.upper_total = 1.0;
        cert.sums_by_level = {{0, 1.0, 1.0}};
        cert.exact_lower = cert.exact_upper = atom;
        return finish(std::move(cert));
    }

    bool fast = scheme.kind() == PartitionScheme::Kind::Dyadic && phi.has_fast_bound();
    detail::LoopOutcome outcome =
        fast ? detail::darboux_fast_loop(phi, scheme, epsilon, max_depth, true)
             : detail::darboux_exact_loop(phi, scheme, epsilon, max_depth, true);

    if (!outcome.certified) {
        const LevelSums& last = outcome.sums.back();
        return IntegrationFailure{max_depth, last.gap(), outcome.sums,
                                  outcome.fail_reason.empty() ? "gap did not close"
                                                              : outcome.fail_reason};
    }

    IntegralCertificate cert(scheme);
    cert.mode = mode;
    cert.epsilon = epsilon;
    cert.certified_depth = outcome.depth;
    const LevelSums& last = outcome.sums.back();
    cert.lower_total = last.lower;
    cert.upper_total = last.upper;
    cert.value = last.lower + (last.upper - last.lower) / 2;
    cert.sums_by_level = std::move(outcome.sums);
    FinAddMeasure base = phi.pairing_measure() ? *phi.pairing_measure() : FinAddMeasure::length();
    cert.front = std::make_shared<SandwichFront>(scheme, base, std::move(outcome.front));
    if (outcome.sampled)
        cert.caveats.push_back(
            "per-fraction bounds were sampled (no range enclosure available); "
            "sandwich domination is evidence, not proof");
    if (!phi.pairing_measure())
        cert.caveats.push_back("sandwich extension below the front uses the length base measure");
    return finish(std::move(cert));
}

struct VerifyReport {
    bool pass = true;
    std::size_t probes = 0;
    std::size_t additivity_checked = 0;
    double worst_additivity_gap = 0.0;
    std::vector<std::string> violations;
};

/// Re-audits a certificate: additivity of both explicit tables, the
/// endpoint inequalities, and sandwich domination on random monads.
inline VerifyReport verify_certificate(const IntegralCertificate& cert,
                                       const MonadicDistribution& phi, std::size_t probes) {
    VerifyReport rep;
    rep.probes = probes;
    const PartitionScheme& scheme = cert.scheme;

    for (std::size_t lv = 0; lv < cert.table_depth; ++lv) {
        for (std::uint64_t k = 0; k < cert.lower_table[lv].size(); ++k) {
            auto [b, e] = scheme.child_index_range(lv, k);
            for (int side = 0; side < 2; ++side) {
                const auto& table = side ? cert.upper_table : cert.lower_table;
                double parent = table[lv][k];
                double sum = 0.0;
                for (std::uint64_t c = b; c < e; ++c) sum += table[lv + 1][c];
                ++rep.additivity_checked;
                double gap = std::fabs(parent - sum);
                rep.worst_additivity_gap = std::max(rep.worst_additivity_gap, gap);
                if (gap > 1e-9 * std::max(1.0, std::fabs(parent))) {
                    rep.pass = false;
                    rep.violations.push_back(std::string(side ? "upper" : "lower") +
                                             " table additivity broken at level " +
                                             std::to_string(lv) + ", index " + std::to_string(k));
                }
            }
        }
    }

    double slack = 1e-12 * std::max(1.0, std::fabs(cert.value));
    if (!(cert.upper_total <= cert.value + cert.epsilon + slack)) {
        rep.pass = false;
        rep.violations.push_back("upper total exceeds I + eps");
    }
    if (!(cert.lower_total >= cert.value - cert.epsilon - slack)) {
        rep.pass = false;
        rep.violations.push_back("lower total undercuts I - eps");
    }
    if (!(cert.lower_total <= cert.upper_total)) {
        rep.pass = false;
        rep.violations.push_back("lower total exceeds upper total");
    }

    if (probes > 0) {
        FinAddMeasure lower = cert.lower_measure(), upper = cert.upper_measure();
        std::size_t horizon = detail::probe_horizon(scheme, cert.certified_depth);
        std::size_t i = 0;
        for (const Monad& m : detail::probe_monads(scheme, phi, probes, 0xC0FFEE)) {
            EventualSeq sphi = phi.eval_on(m);
            EventualSeq sup = differential(upper, m), slo = differential(lower, m);
            CompareVerdict vu =
                majorizes(detail::with_rounding_slack(sup, sphi), sphi, horizon, cert.mode);
            CompareVerdict vl =
                majorizes(detail::with_rounding_slack(sphi, slo), slo, horizon, cert.mode);
            if (!vu.certified()) {
                rep.pass = false;
                rep.violations.push_back("upper domination " + vu.describe() + " on probe " +
                                         std::to_string(i) + " (" + m.note() + ")");
            }
            if (!vl.certified()) {
                rep.pass = false;
                rep.violations.push_back("lower domination " + vl.describe() + " on probe " +
                                         std::to_string(i) + " (" + m.note() + ")");
            }
            ++i;
        }
    }
    return rep;
}

/// Constructive form of the comparison lemma's contrapositive: from
/// mu1(X) < mu2(X), descend the refinement tree keeping the strict
/// inequality; additivity guarantees some child always works.
inline std::vector<Fraction> comparison_witness(const FinAddMeasure& mu1, const FinAddMeasure& mu2,
                                               const PartitionScheme& scheme, std::size_t depth) {
    auto less_on = [&](const Fraction& u) {
        auto a = mu1.exact(u), b = mu2.exact(u);
        if (a && b) return *a < *b;
        return mu1.value(u) < mu2.value(u);
    };
    Fraction cur = scheme.root();
    if (!less_on(cur))
        throw HypothesisNotMet("mu1(X) < mu2(X) is required, got mu1=" +
                               std::to_string(mu1.value(cur)) +
                               ", mu2=" + std::to_string(mu2.value(cur)));
    std::vector<Fraction> chain{cur};
    for (std::size_t lv = 0; lv < depth; ++lv) {
        std::optional<Fraction> best;
        double best_margin = 0.0;
        for (Fraction& c : scheme.children_of(cur)) {
            double margin = mu2.value(c) - mu1.value(c);
            if (less_on(c) && (!best || margin > best_margin)) {
                best_margin = margin;
                best = std::move(c);
            }
        }
        if (!best)
            throw Error("no child kept the strict inequality at level " + std::to_string(lv + 1) +
                        "; the measures are not additive");
        cur = *best;
        chain.push_back(cur);
    }
    return chain;
}

struct NewtonLeibnizReport {
    IntegrateResult derivative_integral;  // sandwich integral of f'(x) dx
    double telescoped_total = 0.0;        // one level's df sum == f(b) - f(a)
    std::optional<Rational> telescoped_exact;
    double difference = 0.0;
    double epsilon = 0.0;
    bool pass = false;
    /// max over the level of |df(U)/width(U) - f'(mid U)|; shrinks with
    /// the level for differentiable f.
    std::vector<double> ratio_diag;
    std::string summary;
};

/// Compares the sandwich integral of f' dx against the telescoped df
/// total (which equals f(b) - f(a) at every level).
inline NewtonLeibnizReport newton_leibniz_report(const RealFn& f, const RealFn& fprime,
                                                 const PartitionScheme& scheme, double epsilon,
                                                 std::size_t max_depth) {
    NewtonLeibnizReport rep{
        integrate(form_f_dmu(fprime, FinAddMeasure::length(), scheme), scheme, epsilon, max_depth)};
    rep.epsilon = epsilon;

    std::size_t sum_level = std::min<std::size_t>(12, max_depth);
    if (f.has_exact()) {
        Rational acc = 0;
        bool ok = true;
        for (std::uint64_t k = 0; ok && k < scheme.count_at(sum_level); ++k) {
            Fraction u = scheme.fraction_at(sum_level, k);
            auto vh = f.exact(u.hi), vl = f.exact(u.lo);
            if (!vh || !vl)
                ok = false;
            else
                acc += *vh - *vl;
        }
        if (ok) {
            rep.telescoped_exact = acc;
            rep.telescoped_total = to_double(acc);
        }
    }
    if (!rep.telescoped_exact) {
        detail::Accumulator acc;
        for (std::uint64_t k = 0; k < scheme.count_at(sum_level); ++k) {
            Fraction u = scheme.fraction_at(sum_level, k);
            acc.add(f(to_double(u.hi)) - f(to_double(u.lo)));
        }
        rep.telescoped_total = acc.get();
    }

    for (std::size_t lv = 0; lv <= std::min<std::size_t>(12, max_depth); ++lv) {
        double worst = 0.0;
        for (std::uint64_t k = 0; k < scheme.count_at(lv); ++k) {
            Fraction u = scheme.fraction_at(lv, k);
            double df = f(to_double(u.hi)) - f(to_double(u.lo));
            double w = to_double(u.width());
            worst = std::max(worst, std::fabs(df / w - fprime(u.midpoint_double())));
        }
        rep.ratio_diag.push_back(worst);
    }

    if (rep.derivative_integral.certified()) {
        rep.difference =
            std::fabs(rep.derivative_integral.certificate().value - rep.telescoped_total);
        rep.pass = rep.difference <= epsilon;
        rep.summary = "integral of f'(x)dx = " +
                      std::to_string(rep.derivative_integral.certificate().value) +
                      ", telescoped df total = f(b) - f(a) = " + std::to_string(rep.telescoped_total) +
                      ", |difference| = " + std::to_string(rep.difference) +
                      (rep.pass ? " (pass)" : " (fail)");
    } else {
        rep.pass = false;
        rep.summary = "integral of f'(x)dx did not certify: " +
                      rep.derivative_integral.failure().reason +
                      " (residual gap " + std::to_string(rep.derivative_integral.failure().residual_gap) +
                      "); telescoped df total = " + std::to_string(rep.telescoped_total);
    }
    return rep;
}

/// Adaptive Simpson quadrature: the independent reference oracle used by
/// tests and reports, never inside certificates.
inline double reference_quadrature(const std::function<double(double)>& f, const Rational& a,
                                   const Rational& b, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    double ad = to_double(a), bd = to_double(b);
    struct Impl {
        const std::function<double(double)>& f;
        double tol_used = 0.0;
        bool failed = false;
        double rec(double lo, double hi, double flo, double fmid, double fhi, double whole,
                   double tol, int depth) {
            double mid = 0.5 * (lo + hi);
            double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
            double flm = f(lm), frm = f(rm);
            double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
            double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
            double delta = left + right - whole;
            if (depth > 48) {
                failed = true;
                return left + right;
            }
            if (std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
            return rec(lo, mid, flo, flm, fmid, left, tol / 2.0, depth + 1) +
                   rec(mid, hi, fmid, frm, fhi, right, tol / 2.0, depth + 1);
        }
    } impl{f};
    double flo = f(ad), fhi = f(bd), fmid = f(0.5 * (ad + bd));
    double whole = (bd - ad) / 6.0 * (flo + 4.0 * fmid + fhi);
    double out = impl.rec(ad, bd, flo, fmid, fhi, whole, tol, 0);
    if (impl.failed) throw ToleranceNotReached("adaptive refinement hit the depth cap");
    return out;
}

}  // namespace leibniz
