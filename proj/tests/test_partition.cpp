#include <catch_amalgamated.hpp>

#include "leibniz/partition.hpp"

using namespace leibniz;

TEST_CASE("dyadic scheme: halving, indexing, widths") {
    PartitionScheme s = PartitionScheme::dyadic(Rational(0), Rational(1));

    auto level1 = s.level(1);
    REQUIRE(level1.size() == 2);
    CHECK(level1[0].lo == 0);
    CHECK(level1[0].hi == Rational(1, 2));
    CHECK(level1[1].lo == Rational(1, 2));
    CHECK(level1[1].hi == 1);

    Fraction f = s.fraction_at(3, 5);
    CHECK(f.lo == Rational(5, 8));
    CHECK(f.hi == Rational(6, 8));

    PartitionScheme sym = PartitionScheme::dyadic(Rational(-1), Rational(1));
    for (const Fraction& u : sym.level(2)) CHECK(u.width() == Rational(1, 2));

    CHECK_THROWS_AS(PartitionScheme::dyadic(Rational(1), Rational(1)), DegenerateDomain);
}

TEST_CASE("level counts and exact width sums") {
    PartitionScheme s = PartitionScheme::dyadic(Rational(1, 3), Rational(2));
    for (std::size_t lv = 0; lv <= 12; ++lv) {
        CHECK(s.count_at(lv) == (std::uint64_t(1) << lv));
        Rational sum = 0;
        for (std::uint64_t k = 0; k < s.count_at(lv); ++k) sum += s.fraction_at(lv, k).width();
        CHECK(sum == s.domain_width());
    }
}

TEST_CASE("parent and children") {
    PartitionScheme s = PartitionScheme::dyadic(Rational(0), Rational(1));

    Fraction u = s.fraction_at(3, 2);  // [1/4, 3/8]
    REQUIRE(u.lo == Rational(1, 4));
    REQUIRE(u.hi == Rational(3, 8));
    Fraction p = s.parent_of(u);
    CHECK(p.lo == Rational(1, 4));
    CHECK(p.hi == Rational(1, 2));

    CHECK(s.parent_of(s.fraction_at(1, 0)) == s.root());
    CHECK_THROWS_AS(s.parent_of(s.root()), RootHasNoParent);

    for (std::size_t lv = 1; lv <= 8; ++lv) {
        for (std::uint64_t k = 0; k < s.count_at(lv); k += 7) {
            Fraction c = s.fraction_at(lv, k);
            Fraction par = s.parent_of(c);
            CHECK(par.lo <= c.lo);
            CHECK(c.hi <= par.hi);
        }
    }

    // children tile their parent exactly
    for (std::uint64_t k = 0; k < s.count_at(4); ++k) {
        Fraction par = s.fraction_at(4, k);
        auto kids = s.children_of(par);
        REQUIRE(kids.size() == 2);
        CHECK(kids.front().lo == par.lo);
        CHECK(kids.back().hi == par.hi);
        CHECK(kids[0].hi == kids[1].lo);
    }
}

TEST_CASE("monad_at: chains contain the point; ties at shared endpoints") {
    PartitionScheme s = PartitionScheme::dyadic(Rational(0), Rational(1));

    Monad half = s.monad_at(Rational(1, 2), TieRule::Leftmost);
    CHECK(half.chain(0) == s.root());
    CHECK(half.chain(1).hi == Rational(1, 2));       // [0,1/2]
    CHECK(half.chain(2).lo == Rational(1, 4));       // [1/4,1/2]
    CHECK(half.chain(3).lo == Rational(3, 8));       // [3/8,1/2]

    Monad half_r = s.monad_at(Rational(1, 2), TieRule::Rightmost);
    CHECK(half_r.chain(1).lo == Rational(1, 2));

    Monad edge = s.monad_at(Rational(0));
    for (std::size_t lv = 0; lv <= 10; ++lv) {
        CHECK(edge.chain(lv).lo == 0);
        CHECK(edge.chain(lv).hi == Rational(1, BigInt(1) << lv));
    }

    // 1/3 is never a dyadic endpoint: the chain is tie-independent
    Monad third_l = s.monad_at(Rational(1, 3), TieRule::Leftmost);
    Monad third_r = s.monad_at(Rational(1, 3), TieRule::Rightmost);
    for (std::size_t lv = 0; lv <= 20; ++lv) {
        CHECK(third_l.chain(lv) == third_r.chain(lv));
        CHECK(third_l.chain(lv).contains(Rational(1, 3)));
    }

    CHECK_THROWS_AS(s.monad_at(Rational(2)), PointOutsideDomain);
}

TEST_CASE("monad_limit") {
    PartitionScheme s = PartitionScheme::dyadic(Rational(0), Rational(1));

    double third = monad_limit(s.monad_at(Rational(1, 3)), 1e-6);
    CHECK(std::fabs(third - 1.0 / 3.0) <= 1e-6);

    CHECK(std::fabs(monad_limit(s.monad_at(Rational(0)), 1e-9)) <= 1e-9);

    // constant-width custom scheme never shrinks
    PartitionScheme stuck = PartitionScheme::custom(
        Rational(0), Rational(1),
        [](std::size_t) {
            return std::vector<Fraction>{Fraction{Rational(0), Rational(1, 2), 0, 0},
                                         Fraction{Rational(1, 2), Rational(1), 0, 1}};
        },
        "constant-width");
    CHECK_THROWS_AS(monad_limit(stuck.monad_at(Rational(1, 4)), 1e-3, 40), NotShrinking);
}

TEST_CASE("infinitesimal_check") {
    PartitionScheme s = PartitionScheme::dyadic(Rational(0), Rational(1));
    CompareVerdict deep = s.infinitesimal_check(20, 1e-5);
    CHECK(deep.certified());
    CompareVerdict shallow = s.infinitesimal_check(3, 1e-5);
    CHECK(shallow.undetermined());

    // refines only the left half: the right half stays width 1/2
    PartitionScheme lopsided = PartitionScheme::custom(
        Rational(0), Rational(1),
        [](std::size_t lv) {
            std::vector<Fraction> out;
            Rational w = Rational(1, 2) / Rational(BigInt(1) << lv);
            Rational lo = 0;
            for (std::uint64_t k = 0; k < (std::uint64_t(1) << lv); ++k) {
                out.push_back(Fraction{lo, lo + w, lv, k});
                lo += w;
            }
            out.push_back(Fraction{Rational(1, 2), Rational(1), lv, std::uint64_t(1) << lv});
            return out;
        },
        "left-only");
    CHECK(lopsided.infinitesimal_check(10, 1e-3).undetermined());
}

TEST_CASE("custom scheme validation") {
    // gap between fractions
    PartitionScheme gap = PartitionScheme::custom(
        Rational(0), Rational(1),
        [](std::size_t) {
            return std::vector<Fraction>{Fraction{Rational(0), Rational(1, 3), 0, 0},
                                         Fraction{Rational(1, 2), Rational(1), 0, 1}};
        },
        "gapped");
    CHECK_THROWS_AS(gap.level(1), SchemeViolation);

    // child escapes its parent
    PartitionScheme skew = PartitionScheme::custom(
        Rational(0), Rational(1),
        [](std::size_t lv) {
            if (lv == 1)
                return std::vector<Fraction>{Fraction{Rational(0), Rational(1, 2), 0, 0},
                                             Fraction{Rational(1, 2), Rational(1), 0, 1}};
            return std::vector<Fraction>{Fraction{Rational(0), Rational(1, 3), 0, 0},
                                         Fraction{Rational(1, 3), Rational(2, 3), 0, 1},
                                         Fraction{Rational(2, 3), Rational(1), 0, 2}};
        },
        "non-nested");
    CHECK_THROWS_AS(skew.level(2), SchemeViolation);
}

TEST_CASE("ternary custom scheme works end to end") {
    PartitionScheme t = PartitionScheme::custom(
        Rational(0), Rational(1),
        [](std::size_t lv) {
            std::vector<Fraction> out;
            BigInt count = 1;
            for (std::size_t i = 0; i < lv; ++i) count *= 3;
            Rational w = Rational(1) / Rational(count);
            Rational lo = 0;
            for (BigInt k = 0; k < count; ++k) {
                out.push_back(Fraction{lo, lo + w, lv, k.convert_to<std::uint64_t>()});
                lo += w;
            }
            return out;
        },
        "ternary");
    CHECK(t.count_at(3) == 27);
    Fraction u = t.fraction_at(2, 4);
    CHECK(u.lo == Rational(4, 9));
    CHECK(t.parent_of(u).lo == Rational(1, 3));
    Monad m = t.monad_at(Rational(1, 2));
    for (std::size_t lv = 0; lv <= 6; ++lv) CHECK(m.chain(lv).contains(Rational(1, 2)));
    CHECK(t.infinitesimal_check(8, 1e-3).certified());
}
