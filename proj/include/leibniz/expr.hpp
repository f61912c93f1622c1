#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "leibniz/errors.hpp"
#include "leibniz/eventual_seq.hpp"
#include "leibniz/interval.hpp"
#include "leibniz/rational.hpp"
#include "leibniz/real_fn.hpp"

namespace leibniz {

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

/// Expression AST for user-supplied functions of one variable.
/// Grammar (EBNF):
///   expr     := term (('+' | '-') term)*
///   term     := factor (('*' | '/') factor)*
///   factor   := '-' factor | base ('^' exponent)?
///   base     := number | 'x' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
///   exponent := unsigned-integer | '(' rational ')'
///   func     := sin | cos | exp | log | sqrt | abs
/// Standard precedence, left associativity; numbers (including decimals)
/// become exact rationals.
struct ExprNode {
    enum class Kind { Number, Pi, E, Var, Unary, Binary, Pow };
    enum class UnaryOp { Neg, Abs, Sin, Cos, Exp, Log, Sqrt };
    enum class BinOp { Add, Sub, Mul, Div };

    Kind kind = Kind::Number;
    Rational number;
    UnaryOp uop = UnaryOp::Neg;
    BinOp bop = BinOp::Add;
    Rational exponent;
    ExprPtr a, b;
};

namespace exprdetail {

inline ExprPtr make_number(Rational q) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Number;
    n->number = std::move(q);
    return n;
}
inline ExprPtr make_leaf(ExprNode::Kind k) {
    auto n = std::make_shared<ExprNode>();
    n->kind = k;
    return n;
}
inline ExprPtr make_unary(ExprNode::UnaryOp op, ExprPtr arg) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Unary;
    n->uop = op;
    n->a = std::move(arg);
    return n;
}
inline ExprPtr make_binary(ExprNode::BinOp op, ExprPtr lhs, ExprPtr rhs) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Binary;
    n->bop = op;
    n->a = std::move(lhs);
    n->b = std::move(rhs);
    return n;
}
inline ExprPtr make_pow(ExprPtr base, Rational expo) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Pow;
    n->a = std::move(base);
    n->exponent = std::move(expo);
    return n;
}

struct Parser {
    std::string_view text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    [[noreturn]] void fail(std::vector<std::string> expected) {
        skip_ws();
        std::string found = pos < text.size() ? "'" + std::string(1, text[pos]) + "'" : "end of input";
        throw ParseError(pos, std::move(expected), found);
    }

    Rational number_token() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.'))
            ++pos;
        auto q = parse_rational(text.substr(start, pos - start));
        if (pos == start || !q) {
            pos = start;
            fail({"number"});
        }
        return *q;
    }

    std::string ident_token() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() && std::isalpha(static_cast<unsigned char>(text[pos]))) ++pos;
        return std::string(text.substr(start, pos - start));
    }

    ExprPtr parse_expr() {
        ExprPtr lhs = parse_term();
        for (;;) {
            if (eat('+'))
                lhs = make_binary(ExprNode::BinOp::Add, lhs, parse_term());
            else if (eat('-'))
                lhs = make_binary(ExprNode::BinOp::Sub, lhs, parse_term());
            else
                return lhs;
        }
    }

    ExprPtr parse_term() {
        ExprPtr lhs = parse_factor();
        for (;;) {
            if (eat('*'))
                lhs = make_binary(ExprNode::BinOp::Mul, lhs, parse_factor());
            else if (eat('/'))
                lhs = make_binary(ExprNode::BinOp::Div, lhs, parse_factor());
            else
                return lhs;
        }
    }

    ExprPtr parse_factor() {
        if (eat('-')) return make_unary(ExprNode::UnaryOp::Neg, parse_factor());
        ExprPtr base = parse_base();
        if (eat('^')) return make_pow(std::move(base), parse_exponent());
        return base;
    }

    Rational parse_exponent() {
        if (eat('(')) {
            bool neg = eat('-');
            Rational num = number_token();
            if (eat('/')) {
                Rational den = number_token();
                if (den == 0) fail({"non-zero denominator"});
                num /= den;
            }
            if (!eat(')')) fail({"')'"});
            return neg ? -num : num;
        }
        char c = peek();
        if (std::isdigit(static_cast<unsigned char>(c))) return number_token();
        fail({"unsigned integer", "'(' rational ')'"});
    }

    ExprPtr parse_base() {
        char c = peek();
        if (c == '(') {
            eat('(');
            ExprPtr inner = parse_expr();
            if (!eat(')')) fail({"')'"});
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return make_number(number_token());
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos;
            std::string id = ident_token();
            if (id == "x") return make_leaf(ExprNode::Kind::Var);
            if (id == "pi") return make_leaf(ExprNode::Kind::Pi);
            if (id == "e") return make_leaf(ExprNode::Kind::E);
            ExprNode::UnaryOp op;
            if (id == "sin")
                op = ExprNode::UnaryOp::Sin;
            else if (id == "cos")
                op = ExprNode::UnaryOp::Cos;
            else if (id == "exp")
                op = ExprNode::UnaryOp::Exp;
            else if (id == "log")
                op = ExprNode::UnaryOp::Log;
            else if (id == "sqrt")
                op = ExprNode::UnaryOp::Sqrt;
            else if (id == "abs")
                op = ExprNode::UnaryOp::Abs;
            else {
                pos = start;
                fail({"x", "pi", "e", "function name"});
            }
            if (!eat('(')) fail({"'('"});
            ExprPtr arg = parse_expr();
            if (!eat(')')) fail({"')'"});
            return make_unary(op, std::move(arg));
        }
        fail({"number", "'x'", "constant", "function", "'('"});
    }
};

inline const char* unary_name(ExprNode::UnaryOp op) {
    switch (op) {
        case ExprNode::UnaryOp::Neg: return "-";
        case ExprNode::UnaryOp::Abs: return "abs";
        case ExprNode::UnaryOp::Sin: return "sin";
        case ExprNode::UnaryOp::Cos: return "cos";
        case ExprNode::UnaryOp::Exp: return "exp";
        case ExprNode::UnaryOp::Log: return "log";
        default: return "sqrt";
    }
}

/// Number tokens are decimals, so parsed constants always have 10^k
/// denominators and print back as decimals exactly. Constants that only
/// arise programmatically (negative, or denominators like 3) fall back
/// to a division rendering; they re-parse to the same value.
inline std::string number_text(const Rational& q) {
    if (is_integer(q)) return numerator(q).str();
    BigInt d = denominator(q);
    BigInt d2 = d;
    int twos = 0, fives = 0;
    while (d2 % 2 == 0) {
        d2 /= 2;
        ++twos;
    }
    while (d2 % 5 == 0) {
        d2 /= 5;
        ++fives;
    }
    if (d2 == 1) {
        int k = std::max(twos, fives);
        BigInt scale = 1;
        for (int i = 0; i < k; ++i) scale *= 10;
        BigInt digits = numerator(q) * (scale / d);
        std::string frac = digits.str();
        if (frac.size() <= static_cast<std::size_t>(k))
            frac.insert(0, static_cast<std::size_t>(k) + 1 - frac.size(), '0');
        frac.insert(frac.size() - static_cast<std::size_t>(k), ".");
        return frac;
    }
    return numerator(q).str() + " / " + denominator(q).str();
}

inline bool decimal_printable(const Rational& q) {
    BigInt d = denominator(q);
    while (d % 2 == 0) d /= 2;
    while (d % 5 == 0) d /= 5;
    return d == 1;
}

// precedence: add/sub 1, mul/div 2, unary minus 3, pow 4, atoms 5
inline int precedence(const ExprNode& n) {
    switch (n.kind) {
        case ExprNode::Kind::Binary:
            return (n.bop == ExprNode::BinOp::Add || n.bop == ExprNode::BinOp::Sub) ? 1 : 2;
        case ExprNode::Kind::Unary: return n.uop == ExprNode::UnaryOp::Neg ? 3 : 5;
        case ExprNode::Kind::Pow: return 4;
        case ExprNode::Kind::Number:
            if (n.number < 0) return 1;  // always parenthesized inside operators
            return decimal_printable(n.number) ? 5 : 2;
        default: return 5;
    }
}

inline void print(const ExprNode& n, std::string& out, int context) {
    bool parens = precedence(n) < context;
    if (parens) out += '(';
    switch (n.kind) {
        case ExprNode::Kind::Number:
            if (n.number < 0) out += '-' + number_text(-n.number);
            else out += number_text(n.number);
            break;
        case ExprNode::Kind::Pi: out += "pi"; break;
        case ExprNode::Kind::E: out += "e"; break;
        case ExprNode::Kind::Var: out += "x"; break;
        case ExprNode::Kind::Unary:
            if (n.uop == ExprNode::UnaryOp::Neg) {
                out += '-';
                print(*n.a, out, 4);
            } else {
                out += unary_name(n.uop);
                out += '(';
                print(*n.a, out, 0);
                out += ')';
            }
            break;
        case ExprNode::Kind::Pow:
            print(*n.a, out, 5);
            out += '^';
            if (is_integer(n.exponent) && n.exponent >= 0) {
                out += numerator(n.exponent).str();
            } else {
                out += '(';
                if (n.exponent < 0) out += '-';
                Rational abse = n.exponent < 0 ? -n.exponent : n.exponent;
                out += numerator(abse).str();
                if (!is_integer(abse)) out += '/' + denominator(abse).str();
                out += ')';
            }
            break;
        case ExprNode::Kind::Binary: {
            int own = precedence(n);
            print(*n.a, out, own);
            out += n.bop == ExprNode::BinOp::Add   ? " + "
                   : n.bop == ExprNode::BinOp::Sub ? " - "
                   : n.bop == ExprNode::BinOp::Mul ? " * "
                                                   : " / ";
            print(*n.b, out, own + 1);  // left associativity
            break;
        }
    }
    if (parens) out += ')';
}

}  // namespace exprdetail

inline ExprPtr parse_expression(std::string_view text) {
    exprdetail::Parser p{text};
    ExprPtr ast = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) p.fail({"operator", "end of input"});
    return ast;
}

inline std::string to_string(const ExprPtr& ast) {
    std::string out;
    exprdetail::print(*ast, out, 0);
    return out;
}

inline bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case ExprNode::Kind::Number: return a->number == b->number;
        case ExprNode::Kind::Unary: return a->uop == b->uop && expr_equal(a->a, b->a);
        case ExprNode::Kind::Binary:
            return a->bop == b->bop && expr_equal(a->a, b->a) && expr_equal(a->b, b->b);
        case ExprNode::Kind::Pow: return a->exponent == b->exponent && expr_equal(a->a, b->a);
        default: return true;
    }
}

inline double eval_double(const ExprNode& n, double x) {
    switch (n.kind) {
        case ExprNode::Kind::Number: return to_double(n.number);
        case ExprNode::Kind::Pi: return 3.141592653589793;
        case ExprNode::Kind::E: return 2.718281828459045;
        case ExprNode::Kind::Var: return x;
        case ExprNode::Kind::Unary: {
            double v = eval_double(*n.a, x);
            switch (n.uop) {
                case ExprNode::UnaryOp::Neg: return -v;
                case ExprNode::UnaryOp::Abs: return std::fabs(v);
                case ExprNode::UnaryOp::Sin: return std::sin(v);
                case ExprNode::UnaryOp::Cos: return std::cos(v);
                case ExprNode::UnaryOp::Exp: return std::exp(v);
                case ExprNode::UnaryOp::Log:
                    if (v <= 0.0) throw DomainError("log", "argument <= 0");
                    return std::log(v);
                default:
                    if (v < 0.0) throw DomainError("sqrt", "argument < 0");
                    return std::sqrt(v);
            }
        }
        case ExprNode::Kind::Pow: {
            double v = eval_double(*n.a, x);
            if (!is_integer(n.exponent) && v < 0.0)
                throw DomainError("pow", "fractional power of a negative value");
            if (is_integer(n.exponent) && n.exponent < 0 && v == 0.0)
                throw DomainError("pow", "zero base with negative exponent");
            return std::pow(v, to_double(n.exponent));
        }
        case ExprNode::Kind::Binary: {
            double l = eval_double(*n.a, x), r = eval_double(*n.b, x);
            switch (n.bop) {
                case ExprNode::BinOp::Add: return l + r;
                case ExprNode::BinOp::Sub: return l - r;
                case ExprNode::BinOp::Mul: return l * r;
                default: return extended_div(l, r);
            }
        }
    }
    return 0.0;  // unreachable
}

/// Exact evaluation; nullopt as soon as a transcendental node (or a
/// genuinely fractional power) is involved.
inline std::optional<Rational> eval_rational(const ExprNode& n, const Rational& x) {
    switch (n.kind) {
        case ExprNode::Kind::Number: return n.number;
        case ExprNode::Kind::Var: return x;
        case ExprNode::Kind::Pi:
        case ExprNode::Kind::E: return std::nullopt;
        case ExprNode::Kind::Unary: {
            auto v = eval_rational(*n.a, x);
            if (!v) return std::nullopt;
            switch (n.uop) {
                case ExprNode::UnaryOp::Neg: return -*v;
                case ExprNode::UnaryOp::Abs: return *v < 0 ? -*v : *v;
                default: return std::nullopt;
            }
        }
        case ExprNode::Kind::Pow: {
            if (!is_integer(n.exponent)) return std::nullopt;
            long e = numerator(n.exponent).convert_to<long>();
            if (e < -64 || e > 64) return std::nullopt;
            auto v = eval_rational(*n.a, x);
            if (!v) return std::nullopt;
            if (e < 0 && *v == 0) return std::nullopt;
            Rational acc = 1;
            for (long i = 0; i < std::labs(e); ++i) acc *= *v;
            return e < 0 ? 1 / acc : acc;
        }
        case ExprNode::Kind::Binary: {
            auto l = eval_rational(*n.a, x), r = eval_rational(*n.b, x);
            if (!l || !r) return std::nullopt;
            switch (n.bop) {
                case ExprNode::BinOp::Add: return *l + *r;
                case ExprNode::BinOp::Sub: return *l - *r;
                case ExprNode::BinOp::Mul: return *l * *r;
                default:
                    if (*r == 0) return std::nullopt;
                    return *l / *r;
            }
        }
    }
    return std::nullopt;
}

/// Outward-rounded enclosure of the expression over a box. Enclosures
/// may over-approximate (interval dependency), never under-approximate.
inline ValueInterval eval_interval(const ExprNode& n, const ValueInterval& box) {
    switch (n.kind) {
        case ExprNode::Kind::Number: return iv_of(n.number);
        case ExprNode::Kind::Pi: return widen(iv_point(3.141592653589793), 1);
        case ExprNode::Kind::E: return widen(iv_point(2.718281828459045), 1);
        case ExprNode::Kind::Var: return box;
        case ExprNode::Kind::Unary: {
            ValueInterval v = eval_interval(*n.a, box);
            switch (n.uop) {
                case ExprNode::UnaryOp::Neg: return iv_neg(v);
                case ExprNode::UnaryOp::Abs: return iv_abs(v);
                case ExprNode::UnaryOp::Sin: return iv_sin(v);
                case ExprNode::UnaryOp::Cos: return iv_cos(v);
                case ExprNode::UnaryOp::Exp: return iv_exp(v);
                case ExprNode::UnaryOp::Log: return iv_log(v);
                default: return iv_sqrt(v);
            }
        }
        case ExprNode::Kind::Pow: return iv_pow(eval_interval(*n.a, box), n.exponent);
        case ExprNode::Kind::Binary: {
            ValueInterval l = eval_interval(*n.a, box), r = eval_interval(*n.b, box);
            switch (n.bop) {
                case ExprNode::BinOp::Add: return iv_add(l, r);
                case ExprNode::BinOp::Sub: return iv_sub(l, r);
                case ExprNode::BinOp::Mul: return iv_mul(l, r);
                default: return iv_div(l, r);
            }
        }
    }
    return {-kInf, kInf};  // unreachable
}

inline ValueInterval eval_interval(const ExprPtr& ast, const ValueInterval& box) {
    return eval_interval(*ast, box);
}

inline RealFn fn_from_expr(const ExprPtr& ast) {
    return RealFn{
        [ast](double x) { return eval_double(*ast, x); },
        [ast](const Rational& x) { return eval_rational(*ast, x); },
        [ast](const ValueInterval& box) { return eval_interval(*ast, box); },
        to_string(ast)};
}

inline RealFn parse_fn(std::string_view text) { return fn_from_expr(parse_expression(text)); }

}  // namespace leibniz
