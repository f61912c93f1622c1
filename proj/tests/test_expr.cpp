#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "leibniz/expr.hpp"

using namespace leibniz;

TEST_CASE("grammar and precedence") {
    ExprPtr a = parse_expression("sin(x)^2 + 1");
    REQUIRE(a->kind == ExprNode::Kind::Binary);
    CHECK(a->bop == ExprNode::BinOp::Add);
    REQUIRE(a->a->kind == ExprNode::Kind::Pow);
    CHECK(a->a->exponent == 2);
    CHECK(a->a->a->kind == ExprNode::Kind::Unary);
    CHECK(a->a->a->uop == ExprNode::UnaryOp::Sin);

    ExprPtr b = parse_expression("2*x - x");
    REQUIRE(b->bop == ExprNode::BinOp::Sub);
    CHECK(b->a->bop == ExprNode::BinOp::Mul);

    // left associativity and unary minus binding
    ExprPtr c = parse_expression("1 - 2 - 3");
    CHECK(c->bop == ExprNode::BinOp::Sub);
    CHECK(c->b->number == 3);
    ExprPtr d = parse_expression("-x^2");
    CHECK(d->kind == ExprNode::Kind::Unary);
    CHECK(d->a->kind == ExprNode::Kind::Pow);

    // decimals become exact rationals
    ExprPtr e = parse_expression("0.125");
    CHECK(e->number == Rational(1, 8));
}

TEST_CASE("parse errors carry position and expectations") {
    try {
        parse_expression("log(");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position == 4);
        CHECK_FALSE(e.expected.empty());
    }
    CHECK_THROWS_AS(parse_expression("2 +"), ParseError);
    CHECK_THROWS_AS(parse_expression("foo(x)"), ParseError);
    CHECK_THROWS_AS(parse_expression("x^y"), ParseError);
    CHECK_THROWS_AS(parse_expression("(1 + 2"), ParseError);
    CHECK_THROWS_AS(parse_expression("1 2"), ParseError);
}

TEST_CASE("parse -> print -> parse is a fixed point") {
    const char* corpus[] = {
        "x", "pi", "e", "42", "0.5", "1/3",
        "x + 1", "x - 1", "2*x", "x/2", "x^2", "x^(1/2)", "x^(-3)",
        "-x", "-x^2", "-(x + 1)", "abs(x - 0.5)",
        "sin(x)", "cos(2*x)", "exp(-x)", "log(x + 1)", "sqrt(x^2 + 1)",
        "sin(x)^2 + cos(x)^2", "1 - 2 - 3", "1 - (2 - 3)", "x*(x + 1)*(x + 2)",
        "2*x - x", "x*x - x", "(x + 1)^3 / (x + 2)", "pi*x/2",
        "0.25*x^4 - 0.5*x^2 + 0.125", "exp(x)*sin(pi*x)", "x/2/3", "x/(2/3)",
        "sqrt(abs(x))", "log(exp(x))", "-(-x)", "3 - -2... wait"};
    for (std::size_t i = 0; i + 1 < std::size(corpus); ++i) {
        const char* src = corpus[i];
        ExprPtr one = parse_expression(src);
        std::string printed = to_string(one);
        ExprPtr two = parse_expression(printed);
        INFO(src << "  ->  " << printed);
        CHECK(expr_equal(one, two));
        CHECK(to_string(two) == printed);
    }
}

TEST_CASE("eval_double and eval_rational") {
    ExprPtr poly = parse_expression("x^3 - 0.5*x + 0.25");
    CHECK(eval_double(*poly, 2.0) == 7.25);
    CHECK(*eval_rational(*poly, Rational(1, 3)) == Rational(1, 27) - Rational(1, 6) + Rational(1, 4));

    // transcendental nodes have no exact route
    CHECK_FALSE(eval_rational(*parse_expression("sin(x)"), Rational(0)).has_value());
    CHECK_FALSE(eval_rational(*parse_expression("pi"), Rational(0)).has_value());

    CHECK_THROWS_AS(eval_double(*parse_expression("log(x)"), 0.0), DomainError);
    CHECK_THROWS_AS(eval_double(*parse_expression("sqrt(x)"), -1.0), DomainError);
    CHECK_THROWS_AS(eval_double(*parse_expression("x^(1/2)"), -4.0), DomainError);

    CHECK(eval_double(*parse_expression("sin(pi/2)"), 0.0) == Catch::Approx(1.0));
}

TEST_CASE("eval_interval enclosures") {
    // monotone power on a positive box
    ValueInterval r = eval_interval(parse_expression("x^2"), {0.5, 1.0});
    CHECK(r.lo <= 0.25);
    CHECK(1.0 <= r.hi);
    CHECK(r.lo >= 0.25 - 1e-12);
    CHECK(r.hi <= 1.0 + 1e-12);

    // interval dependency over-approximates but stays sound
    ValueInterval dep = eval_interval(parse_expression("x*x - x"), {0.0, 1.0});
    CHECK(dep.lo <= -1.0 + 1e-12);
    CHECK(dep.hi >= 1.0 - 1e-12);
    CHECK(dep.contains(-0.25));
    CHECK(dep.contains(0.0));

    ValueInterval c = eval_interval(parse_expression("3"), {-5.0, 5.0});
    CHECK(c.lo == 3.0);
    CHECK(c.hi == 3.0);

    CHECK_THROWS_AS(eval_interval(parse_expression("log(x)"), {-1.0, 1.0}), DomainError);

    // trig ranges clamp to [-1, 1] and catch interior extrema
    ValueInterval t = eval_interval(parse_expression("sin(x)"), {1.0, 2.5});
    CHECK(t.hi == 1.0);  // pi/2 inside
    CHECK(t.lo <= std::sin(2.5));
}

TEST_CASE("enclosure soundness on random triples") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> pick(0.05, 0.95);
    const char* exprs[] = {"x^3 - x + 0.25", "sin(3*x)*x", "exp(x) - x^2",
                           "sqrt(x + 0.5)", "log(x + 1)*cos(x)", "abs(x - 0.5) + x/3",
                           "(x + 0.25)^(1/2)", "1/(x + 2)"};
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        const char* src = exprs[i % std::size(exprs)];
        ExprPtr ast = parse_expression(src);
        double a = pick(rng), b = pick(rng);
        if (a > b) std::swap(a, b);
        double t = pick(rng);
        double x = a + t * (b - a);
        ValueInterval enc = eval_interval(ast, {a, b});
        double v = eval_double(*ast, x);
        CHECK(enc.lo <= v);
        CHECK(v <= enc.hi);
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("fn_from_expr bundles the three routes") {
    RealFn f = parse_fn("x^2 + 0.5");
    CHECK(f.label == "x^2 + 0.5");
    CHECK(f(2.0) == 4.5);
    CHECK(*f.exact(Rational(1, 2)) == Rational(3, 4));
    CHECK(f.range({0.0, 1.0}).contains(0.75));
}
