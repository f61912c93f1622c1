#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "leibniz/expr.hpp"
#include "leibniz/measure.hpp"

using namespace leibniz;

namespace {
PartitionScheme unit_dyadic() { return PartitionScheme::dyadic(Rational(0), Rational(1)); }
}  // namespace

TEST_CASE("length and stieltjes values") {
    PartitionScheme s = unit_dyadic();
    FinAddMeasure len = FinAddMeasure::length();
    CHECK(len.value(s.root()) == 1.0);
    CHECK(*len.exact(s.fraction_at(4, 3)) == Rational(1, 16));

    FinAddMeasure g2 = FinAddMeasure::stieltjes(parse_fn("x^2"), Rational(0), Rational(1));
    Fraction u{Rational(1, 4), Rational(1, 2), 2, 1};
    CHECK(*g2.exact(u) == Rational(3, 16));
    CHECK(g2.value(s.root()) == 1.0);

    CHECK_THROWS_AS(FinAddMeasure::stieltjes(parse_fn("0 - x"), Rational(0), Rational(1)),
                    NonMonotoneStieltjes);
}

TEST_CASE("atom ownership is tie-consistent") {
    PartitionScheme s = unit_dyadic();
    FinAddMeasure atom_l =
        FinAddMeasure::atom(Rational(1, 2), Rational(1), TieRule::Leftmost, Rational(0), Rational(1));
    CHECK(atom_l.value(s.fraction_at(1, 1)) == 0.0);  // [1/2,1] does not own under leftmost
    CHECK(atom_l.value(s.fraction_at(1, 0)) == 1.0);

    FinAddMeasure atom_r =
        FinAddMeasure::atom(Rational(1, 2), Rational(1), TieRule::Rightmost, Rational(0), Rational(1));
    CHECK(atom_r.value(s.fraction_at(1, 1)) == 1.0);
    CHECK(atom_r.value(s.fraction_at(1, 0)) == 0.0);

    // domain edges have a single candidate regardless of the rule
    FinAddMeasure edge =
        FinAddMeasure::atom(Rational(0), Rational(1), TieRule::Leftmost, Rational(0), Rational(1));
    CHECK(edge.value(s.fraction_at(3, 0)) == 1.0);

    // ownership matches the monad chain at every level and both rules
    for (TieRule tie : {TieRule::Leftmost, TieRule::Rightmost}) {
        FinAddMeasure atom =
            FinAddMeasure::atom(Rational(3, 8), Rational(1), tie, Rational(0), Rational(1));
        Monad m = s.monad_at(Rational(3, 8), tie);
        for (std::size_t lv = 0; lv <= 12; ++lv) CHECK(atom.value(m.chain(lv)) == 1.0);
    }
}

TEST_CASE("differential along monads") {
    PartitionScheme s = unit_dyadic();
    FinAddMeasure len = FinAddMeasure::length();

    EventualSeq d = differential(len, s.monad_at(Rational(1, 3)));
    for (std::size_t n = 0; n <= 20; ++n) CHECK(d(n) == std::ldexp(1.0, -static_cast<int>(n)));

    FinAddMeasure atom =
        FinAddMeasure::atom(Rational(1, 3), Rational(1), TieRule::Leftmost, Rational(0), Rational(1));
    EventualSeq on_atom = differential(atom, s.monad_at(Rational(1, 3)));
    for (std::size_t n = 0; n <= 16; ++n) CHECK(on_atom(n) == 1.0);

    EventualSeq off_atom = differential(atom, s.monad_at(Rational(2, 3)));
    CHECK(off_atom(0) == 1.0);  // root still contains the atom
    for (std::size_t n = 1; n <= 16; ++n) CHECK(off_atom(n) == 0.0);

    // non-negative measures have non-increasing differentials
    FinAddMeasure g2 = FinAddMeasure::stieltjes(parse_fn("x^2"), Rational(0), Rational(1));
    for (const Rational& p : {Rational(0), Rational(1, 3), Rational(7, 9), Rational(1)}) {
        EventualSeq dg = differential(g2, s.monad_at(p));
        for (std::size_t n = 1; n <= 16; ++n) {
            CHECK(dg(n) >= 0.0);
            CHECK(dg(n) <= dg(n - 1));
        }
    }

    FinAddMeasure table = FinAddMeasure::from_leaf_values(s, 3, std::vector<double>(8, 0.125), "t");
    PartitionScheme other = unit_dyadic();
    CHECK_THROWS_AS(differential(table, other.monad_at(Rational(1, 2))), SchemeMismatch);
}

TEST_CASE("restrict") {
    PartitionScheme s = unit_dyadic();
    FinAddMeasure len = FinAddMeasure::length();

    FinAddMeasure half = restrict(len, OpenSet::of({{Rational(0), Rational(1, 2)}}));
    Fraction t{Rational(1, 4), Rational(3, 4), 0, 0};
    CHECK(*half.exact(t) == Rational(1, 4));

    FinAddMeasure full = restrict(len, OpenSet::of({{Rational(-10), Rational(10)}}));
    for (std::size_t lv = 0; lv <= 6; ++lv)
        for (std::uint64_t k = 0; k < s.count_at(lv); ++k) {
            Fraction u = s.fraction_at(lv, k);
            CHECK(full.value(u) == len.value(u));
        }

    FinAddMeasure none = restrict(len, OpenSet::of({}));
    CHECK(none.value(s.root()) == 0.0);

    FinAddMeasure atom =
        FinAddMeasure::atom(Rational(1, 2), Rational(1), TieRule::Leftmost, Rational(0), Rational(1));
    CHECK_THROWS_AS(restrict(atom, OpenSet::of({{Rational(0), Rational(1, 2)}})),
                    UnsupportedMeasureKind);
    FinAddMeasure atom_in = restrict(atom, OpenSet::of({{Rational(0), Rational(3, 4)}}));
    CHECK(atom_in.value(s.fraction_at(1, 0)) == 1.0);
    FinAddMeasure atom_out = restrict(atom, OpenSet::of({{Rational(3, 4), Rational(1)}}));
    CHECK(atom_out.value(s.root()) == 0.0);

    // additive over disjoint open sets
    OpenSet o1 = OpenSet::of({{Rational(0), Rational(1, 4)}});
    OpenSet o2 = OpenSet::of({{Rational(1, 2), Rational(7, 8)}});
    OpenSet both = OpenSet::of({{Rational(0), Rational(1, 4)}, {Rational(1, 2), Rational(7, 8)}});
    FinAddMeasure r1 = restrict(len, o1), r2 = restrict(len, o2), rb = restrict(len, both);
    for (std::uint64_t k = 0; k < s.count_at(5); ++k) {
        Fraction u = s.fraction_at(5, k);
        CHECK(*rb.exact(u) == *r1.exact(u) + *r2.exact(u));
    }
}

TEST_CASE("check_additivity") {
    PartitionScheme s = unit_dyadic();

    AdditivityReport len_rep = check_additivity(FinAddMeasure::length(), s, 10);
    CHECK(len_rep.pass);
    CHECK(len_rep.exact);
    CHECK(len_rep.worst == 0.0);

    AdditivityReport g_rep =
        check_additivity(FinAddMeasure::stieltjes(parse_fn("x^2"), Rational(0), Rational(1)), s, 8);
    CHECK(g_rep.pass);
    CHECK(g_rep.exact);

    // a planted +1 on one child breaks exactly its parent's equation
    Fraction bad = s.fraction_at(4, 5);
    FinAddMeasure corrupted = FinAddMeasure::from_fraction_fn(
        [bad](const Fraction& u) { return to_double(u.width()) + (u == bad ? 1.0 : 0.0); },
        "corrupted-length");
    AdditivityReport c_rep = check_additivity(corrupted, s, 6);
    CHECK_FALSE(c_rep.pass);
    REQUIRE(c_rep.worst_at.has_value());
    CHECK(c_rep.worst_at->level == 3);
    CHECK(c_rep.worst_at->index == 2);  // parent of (4,5)
    CHECK(c_rep.worst == Catch::Approx(1.0));
}

TEST_CASE("level sums are invariant across levels") {
    PartitionScheme s = PartitionScheme::dyadic(Rational(-2), Rational(3, 2));
    FinAddMeasure g = FinAddMeasure::stieltjes(parse_fn("x^3 + 8*x"), Rational(-2), Rational(3, 2));
    FinAddMeasure len = FinAddMeasure::length();
    for (const FinAddMeasure& mu : {len, g}) {
        auto total = *mu.exact(s.root());
        for (std::size_t lv = 1; lv <= 8; ++lv) {
            Rational sum = 0;
            for (std::uint64_t k = 0; k < s.count_at(lv); ++k)
                sum += *mu.exact(s.fraction_at(lv, k));
            CHECK(sum == total);
        }
    }
}

TEST_CASE("scaled, summed and table measures stay additive") {
    PartitionScheme s = unit_dyadic();
    FinAddMeasure len = FinAddMeasure::length();
    FinAddMeasure atom =
        FinAddMeasure::atom(Rational(1, 3), Rational(2), TieRule::Leftmost, Rational(0), Rational(1));
    FinAddMeasure combo = FinAddMeasure::sum(FinAddMeasure::scaled(Rational(3, 2), len), atom);
    AdditivityReport rep = check_additivity(combo, s, 8);
    CHECK(rep.pass);
    CHECK(rep.exact);
    CHECK(combo.value(s.root()) == Catch::Approx(3.5));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> v(0.0, 2.0);
    std::vector<double> leaves(64);
    for (double& x : leaves) x = v(rng);
    FinAddMeasure table = FinAddMeasure::from_leaf_values(s, 6, leaves, "random-table");
    AdditivityReport trep = check_additivity(table, s, 8);  // includes levels below the leaves
    CHECK(trep.pass);
}
