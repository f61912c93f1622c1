#include <catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <random>
#include <thread>
#include <vector>

#include "leibniz/eventual_seq.hpp"

using namespace leibniz;

namespace {

EventualSeq geometric_halving() {
    return EventualSeq([](std::size_t n) { return std::ldexp(1.0, -static_cast<int>(n)); });
}

}  // namespace

TEST_CASE("combine: termwise arithmetic") {
    EventualSeq ones = EventualSeq::constant(1.0);
    EventualSeq twos = EventualSeq::constant(2.0);

    EventualSeq sum = combine(ones, twos, SeqOp::Add);
    for (std::size_t n = 0; n < 20; ++n) CHECK(sum(n) == 3.0);

    EventualSeq diff = combine(geometric_halving(), geometric_halving(), SeqOp::Sub);
    for (std::size_t n = 0; n < 20; ++n) CHECK(diff(n) == 0.0);

    // division by a leading zero produces a signed infinity, then settles
    EventualSeq denom = EventualSeq::from_prefix({0.0}, 1.0);
    EventualSeq quot = combine(ones, denom, SeqOp::Div);
    CHECK(quot(0) == std::numeric_limits<double>::infinity());
    CHECK(quot(1) == 1.0);
    CHECK(quot(7) == 1.0);

    EventualSeq neg = EventualSeq::constant(-3.0);
    EventualSeq absd = combine(neg, ones, SeqOp::AbsFirst);
    CHECK(absd(4) == 3.0);
}

TEST_CASE("combine then un-combine reproduces the input bitwise") {
    // dyadic-valued sequences add and subtract exactly
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> num(-2000, 2000);
    for (int rep = 0; rep < 50; ++rep) {
        int scale_a = num(rng), scale_b = num(rng);
        EventualSeq a([scale_a](std::size_t n) { return scale_a * std::ldexp(1.0, -int(n % 12)); });
        EventualSeq b([scale_b](std::size_t n) { return scale_b * std::ldexp(1.0, -int(n % 9)); });
        EventualSeq roundtrip = combine(combine(a, b, SeqOp::Add), b, SeqOp::Sub);
        for (std::size_t n = 0; n < 30; ++n) CHECK(roundtrip(n) == a(n));
    }
}

TEST_CASE("memoization is compute-once and bitwise stable") {
    std::atomic<int> calls{0};
    EventualSeq s([&calls](std::size_t n) {
        ++calls;
        return std::sin(static_cast<double>(n)) / 3.0;
    });
    double first = s(5);
    double second = s(5);
    CHECK(first == second);
    CHECK(calls.load() == 1);

    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t)
        threads.emplace_back([&s] {
            for (std::size_t n = 0; n < 64; ++n) (void)s(n);
        });
    for (auto& t : threads) t.join();
    CHECK(calls.load() == 64);  // one evaluation per index, 5 already cached
}

TEST_CASE("totally_majorizes") {
    EventualSeq twos = EventualSeq::constant(2.0);
    EventualSeq ones = EventualSeq::constant(1.0);
    CompareVerdict v = totally_majorizes(twos, ones, 100);
    CHECK(v.certified());
    CHECK(v.index == 0);

    EventualSeq spike = EventualSeq::from_prefix({2.0}, 0.0);
    v = totally_majorizes(ones, spike, 100);
    CHECK(v.refuted());
    CHECK(v.index == 0);

    v = totally_majorizes(ones, ones, 10);
    CHECK(v.certified());
}

TEST_CASE("eventually_majorizes") {
    EventualSeq ones = EventualSeq::constant(1.0);
    EventualSeq spike = EventualSeq::from_prefix({2.0}, 0.0);
    CompareVerdict v = eventually_majorizes(ones, spike, 50);
    CHECK(v.certified());
    CHECK(v.index == 1);

    EventualSeq inv_n = EventualSeq([](std::size_t n) { return 1.0 / (n + 1.0); });
    v = eventually_majorizes(inv_n, EventualSeq::constant(0.0), 50);
    CHECK(v.certified());
    CHECK(v.index == 0);

    EventualSeq alternating([](std::size_t n) { return n % 2 ? -1.0 : 1.0; });
    v = eventually_majorizes(alternating, EventualSeq::constant(0.0), 50);
    CHECK(v.undetermined());

    // violation at the horizon itself refutes
    v = eventually_majorizes(alternating, EventualSeq::constant(0.0), 51);
    CHECK(v.refuted());
    CHECK(v.index == 51);
}

TEST_CASE("ultra_compare decides the finite/cofinite fragment") {
    EventualSeq ones = EventualSeq::constant(1.0);
    EventualSeq spike = EventualSeq::from_prefix({0.0, 5.0}, 0.0);
    CompareVerdict v = ultra_compare(ones, spike, 64);
    CHECK(v.certified());
    CHECK(v.index == 2);

    EventualSeq even_ones([](std::size_t n) { return n % 2 ? 0.0 : 1.0; });
    v = ultra_compare(even_ones, EventualSeq::constant(0.5), 64);
    CHECK(v.undetermined());

    v = ultra_compare(EventualSeq::constant(0.0), ones, 64);
    CHECK(v.refuted());
}

TEST_CASE("is_infinitesimal") {
    auto tol = [](std::size_t n) { return n == 0 ? 1e9 : 1.0 / static_cast<double>(n); };

    CompareVerdict v = is_infinitesimal(geometric_halving(), tol, 40);
    CHECK(v.certified());
    CHECK(v.index <= 4);

    v = is_infinitesimal(EventualSeq::constant(1.0), tol, 40);
    CHECK((v.refuted() || v.undetermined()));

    v = is_infinitesimal(EventualSeq::constant(0.0), tol, 40);
    CHECK(v.certified());
    CHECK(v.index == 0);
}

TEST_CASE("verdict mode coherence: total => eventual => ultra") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> cut(0, 80);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    for (int rep = 0; rep < 300; ++rep) {
        // plant a violation pattern that dies out at a random index
        int k = cut(rng);
        double base = val(rng);
        EventualSeq a([base, k](std::size_t n) { return n < std::size_t(k) ? base - 1.0 : base + 0.5; });
        EventualSeq b = EventualSeq::constant(base);
        std::size_t horizon = 256;
        CompareVerdict vt = totally_majorizes(a, b, horizon);
        CompareVerdict ve = eventually_majorizes(a, b, horizon);
        CompareVerdict vu = ultra_compare(a, b, horizon);
        if (vt.certified()) CHECK(ve.certified());
        if (ve.certified()) CHECK(vu.certified());
    }
}

TEST_CASE("totally_majorizes is transitive at a fixed horizon") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> val(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        double x = val(rng), y = val(rng), z = val(rng);
        double lo = std::min({x, y, z}), hi = std::max({x, y, z});
        double mid = x + y + z - lo - hi;
        EventualSeq a = EventualSeq::constant(hi);
        EventualSeq b = EventualSeq::constant(mid);
        EventualSeq c = EventualSeq::constant(lo);
        REQUIRE(totally_majorizes(a, b, 64).certified());
        REQUIRE(totally_majorizes(b, c, 64).certified());
        CHECK(totally_majorizes(a, c, 64).certified());
    }
}

TEST_CASE("verdicts are monotone in the horizon") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> cut(0, 20);
    for (int rep = 0; rep < 100; ++rep) {
        int k = cut(rng);
        EventualSeq a([k](std::size_t n) { return n < std::size_t(k) ? -1.0 : 1.0; });
        EventualSeq zero = EventualSeq::constant(0.0);
        CompareVerdict small = eventually_majorizes(a, zero, 64);
        CompareVerdict large = eventually_majorizes(a, zero, 256);
        if (small.certified()) {
            CHECK(large.certified());
            CHECK(large.index <= small.index);
        }
        // a refuted total verdict never recovers
        CompareVerdict ts = totally_majorizes(a, zero, 64);
        if (ts.refuted()) CHECK(totally_majorizes(a, zero, 256).refuted());
    }
}
