#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace leibniz {

/// A lazily evaluated infinite sequence of extended reals. Two sequences
/// are considered the same object of study when they agree from some
/// index on; all comparison verdicts below are finite-horizon statements
/// about inspected prefixes.
///
/// Values are memoized compute-once: evaluating the same index twice
/// yields bitwise-identical doubles, and shared instances are safe to
/// read from multiple threads.
class EventualSeq {
public:
    explicit EventualSeq(std::function<double(std::size_t)> gen, std::string note = "")
        : state_(std::make_shared<State>(std::move(gen), std::move(note))) {}

    static EventualSeq constant(double c) {
        return EventualSeq([c](std::size_t) { return c; }, "constant");
    }

    /// Finite prefix followed by a constant tail; handy in tests.
    static EventualSeq from_prefix(std::vector<double> prefix, double tail, std::string note = "") {
        return EventualSeq(
            [p = std::move(prefix), tail](std::size_t n) { return n < p.size() ? p[n] : tail; },
            std::move(note));
    }

    double operator()(std::size_t n) const {
        State& s = *state_;
        std::lock_guard<std::mutex> lock(s.mutex);
        if (n >= s.known.size()) {
            s.known.resize(n + 1, false);
            s.values.resize(n + 1, 0.0);
        }
        if (!s.known[n]) {
            s.values[n] = s.gen(n);
            s.known[n] = true;
        }
        return s.values[n];
    }

    const std::string& note() const { return state_->note; }

private:
    struct State {
        State(std::function<double(std::size_t)> g, std::string n) : gen(std::move(g)), note(std::move(n)) {}
        std::function<double(std::size_t)> gen;
        std::string note;
        mutable std::mutex mutex;
        mutable std::vector<double> values;
        mutable std::vector<bool> known;
    };
    std::shared_ptr<State> state_;
};

enum class SeqOp { Add, Sub, Mul, Div, AbsFirst };

/// Division never goes silent: a zero denominator yields a signed
/// infinity (sign taken from the numerator, +inf for 0/0).
inline double extended_div(double x, double y) {
    if (y == 0.0) return x < 0.0 ? -std::numeric_limits<double>::infinity()
                                 : std::numeric_limits<double>::infinity();
    return x / y;
}

inline EventualSeq combine(const EventualSeq& a, const EventualSeq& b, SeqOp op) {
    const char* tag = op == SeqOp::Add   ? "add"
                      : op == SeqOp::Sub ? "sub"
                      : op == SeqOp::Mul ? "mul"
                      : op == SeqOp::Div ? "div [zero denominators give a signed infinity]"
                                         : "abs-of-first";
    return EventualSeq(
        [a, b, op](std::size_t n) {
            double x = a(n);
            switch (op) {
                case SeqOp::Add: return x + b(n);
                case SeqOp::Sub: return x - b(n);
                case SeqOp::Mul: return x * b(n);
                case SeqOp::Div: return extended_div(x, b(n));
                case SeqOp::AbsFirst: return std::fabs(x);
            }
            return 0.0;  // unreachable
        },
        "combine:" + std::string(tag));
}

enum class CompareMode { Total, Eventual, Ultra };

inline const char* to_string(CompareMode m) {
    switch (m) {
        case CompareMode::Total: return "total";
        case CompareMode::Eventual: return "eventual";
        case CompareMode::Ultra: return "ultra";
    }
    return "?";
}

/// Outcome of a finite-horizon comparison. Certified carries the start
/// index of the clean suffix, Refuted a concrete counterexample index.
/// The verdict never claims anything past `horizon`.
struct CompareVerdict {
    enum class Kind { Certified, Refuted, Undetermined };

    Kind kind = Kind::Undetermined;
    std::size_t index = 0;  // start index (Certified) or witness index (Refuted)
    std::size_t horizon = 0;

    bool certified() const { return kind == Kind::Certified; }
    bool refuted() const { return kind == Kind::Refuted; }
    bool undetermined() const { return kind == Kind::Undetermined; }

    static CompareVerdict make_certified(std::size_t start, std::size_t horizon) {
        return {Kind::Certified, start, horizon};
    }
    static CompareVerdict make_refuted(std::size_t witness, std::size_t horizon) {
        return {Kind::Refuted, witness, horizon};
    }
    static CompareVerdict make_undetermined(std::size_t horizon) {
        return {Kind::Undetermined, 0, horizon};
    }

    std::string describe() const {
        switch (kind) {
            case Kind::Certified:
                return "Certified(n0=" + std::to_string(index) + ", horizon=" + std::to_string(horizon) + ")";
            case Kind::Refuted:
                return "Refuted(witness=" + std::to_string(index) + ", horizon=" + std::to_string(horizon) + ")";
            default:
                return "Undetermined(horizon=" + std::to_string(horizon) + ")";
        }
    }
};

namespace detail {
inline void require_horizon(std::size_t horizon) {
    if (horizon < 1) throw std::invalid_argument("comparison horizon must be >= 1");
}

/// Shared suffix rule for the eventual-style verdicts: a clean suffix
/// certifies only when it covers at least the upper half of the
/// inspected range; mixed evidence near the horizon stays Undetermined.
inline CompareVerdict suffix_verdict(std::size_t last_violation, bool any_violation,
                                     bool violated_at_horizon, std::size_t horizon) {
    if (!any_violation) return CompareVerdict::make_certified(0, horizon);
    if (violated_at_horizon) return CompareVerdict::make_refuted(horizon, horizon);
    std::size_t start = last_violation + 1;
    if (start <= horizon / 2) return CompareVerdict::make_certified(start, horizon);
    return CompareVerdict::make_undetermined(horizon);
}
}  // namespace detail

/// a(n) >= b(n) at every inspected index, no exception.
inline CompareVerdict totally_majorizes(const EventualSeq& a, const EventualSeq& b, std::size_t horizon) {
    detail::require_horizon(horizon);
    for (std::size_t n = 0; n <= horizon; ++n)
        if (!(a(n) >= b(n))) return CompareVerdict::make_refuted(n, horizon);
    return CompareVerdict::make_certified(0, horizon);
}

/// a(n) >= b(n) for all but finitely many inspected indices.
inline CompareVerdict eventually_majorizes(const EventualSeq& a, const EventualSeq& b, std::size_t horizon) {
    detail::require_horizon(horizon);
    bool any = false;
    std::size_t last = 0;
    for (std::size_t n = 0; n <= horizon; ++n) {
        if (!(a(n) >= b(n))) {
            any = true;
            last = n;
        }
    }
    return detail::suffix_verdict(last, any, any && last == horizon, horizon);
}

/// Decides the fragment invariant under every free ultrafilter: the
/// agreement set {n : a(n) >= b(n)} certifies when cofinite-patterned
/// (all indices from some n0 on), refutes when finite-patterned (empty
/// from some n0 on), and is Undetermined otherwise since the answer
/// would depend on the choice of ultrafilter.
inline CompareVerdict ultra_compare(const EventualSeq& a, const EventualSeq& b, std::size_t horizon) {
    detail::require_horizon(horizon);
    bool any_violation = false, any_agree = false;
    std::size_t last_violation = 0, last_agree = 0;
    for (std::size_t n = 0; n <= horizon; ++n) {
        if (a(n) >= b(n)) {
            any_agree = true;
            last_agree = n;
        } else {
            any_violation = true;
            last_violation = n;
        }
    }
    if (!any_violation) return CompareVerdict::make_certified(0, horizon);
    if (!any_agree) return CompareVerdict::make_refuted(0, horizon);
    if (last_violation + 1 <= horizon / 2)
        return CompareVerdict::make_certified(last_violation + 1, horizon);
    if (last_agree + 1 <= horizon / 2)
        return CompareVerdict::make_refuted(last_agree + 1, horizon);
    return CompareVerdict::make_undetermined(horizon);
}

inline CompareVerdict majorizes(const EventualSeq& a, const EventualSeq& b, std::size_t horizon,
                                CompareMode mode) {
    switch (mode) {
        case CompareMode::Total: return totally_majorizes(a, b, horizon);
        case CompareMode::Eventual: return eventually_majorizes(a, b, horizon);
        case CompareMode::Ultra: return ultra_compare(a, b, horizon);
    }
    return CompareVerdict::make_undetermined(horizon);
}

/// |a(n)| <= tol_schedule(n) on a certified suffix. The schedule is
/// expected non-increasing with limit 0 (callers pass e.g. 1/n).
inline CompareVerdict is_infinitesimal(const EventualSeq& a,
                                       const std::function<double(std::size_t)>& tol_schedule,
                                       std::size_t horizon) {
    detail::require_horizon(horizon);
    bool any = false;
    std::size_t last = 0;
    for (std::size_t n = 0; n <= horizon; ++n) {
        if (!(std::fabs(a(n)) <= tol_schedule(n))) {
            any = true;
            last = n;
        }
    }
    return detail::suffix_verdict(last, any, any && last == horizon, horizon);
}

}  // namespace leibniz
