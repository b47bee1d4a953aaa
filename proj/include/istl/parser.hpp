#ifndef ISTL_PARSER_HPP
#define ISTL_PARSER_HPP

#include <cctype>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "istl/errors.hpp"
#include "istl/expr.hpp"
#include "istl/formula.hpp"

// Specification DSL:
//
//   spec      := "vars" ident ("," ident)* ";" formula
//   formula   := disj
//   disj      := conj ( "|" conj )*
//   conj      := temporal ( "&" temporal )*
//   temporal  := "G" bound temporal | "F" bound temporal
//              | atom "U" bound temporal | atom
//   atom      := "!" atom | "(" formula ")" | pred
//   pred      := expr (">=" | "<=") expr
//   bound     := "[" integer "," integer "]"
//
// Expressions use infix + - * with the usual precedence, unary minus,
// parentheses, numbers, interval literals [lo,hi], variables and the
// functions min, max, abs, sqr, sqrt. '#' starts a comment to end of line.

namespace istl {

struct specification {
    std::vector<std::string> vars;
    formula phi;
};

namespace detail {

enum class token_kind { ident, number, symbol, end };

struct token {
    token_kind kind;
    std::string text;
    double number = 0.0;
    std::size_t offset = 0;
    std::size_t line = 1;
    std::size_t column = 1;
};

inline std::vector<token> tokenize(std::string_view src) {
    std::vector<token> out;
    std::size_t i = 0;
    std::size_t line = 1;
    std::size_t line_start = 0;
    const auto here = [&](token_kind k, std::string text, std::size_t at) {
        return token{k, std::move(text), 0.0, at, line, at - line_start + 1};
    };
    while (i < src.size()) {
        const char c = src[i];
        if (c == '\n') {
            ++i;
            ++line;
            line_start = i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '#') {
            while (i < src.size() && src[i] != '\n') ++i;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = i;
            while (i < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) {
                ++i;
            }
            out.push_back(here(token_kind::ident, std::string(src.substr(start, i - start)), start));
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const std::size_t start = i;
            double v = 0.0;
            auto [end, ec] = std::from_chars(src.data() + i, src.data() + src.size(), v);
            if (ec != std::errc() || end == src.data() + i) {
                throw parse_error("malformed number", line, start - line_start + 1);
            }
            i = static_cast<std::size_t>(end - src.data());
            token t = here(token_kind::number, std::string(src.substr(start, i - start)), start);
            t.number = v;
            out.push_back(std::move(t));
            continue;
        }
        if ((c == '>' || c == '<') && i + 1 < src.size() && src[i + 1] == '=') {
            out.push_back(here(token_kind::symbol, std::string(src.substr(i, 2)), i));
            i += 2;
            continue;
        }
        static constexpr std::string_view singles = ",;()[]+-*!&|";
        if (singles.find(c) != std::string_view::npos) {
            out.push_back(here(token_kind::symbol, std::string(1, c), i));
            ++i;
            continue;
        }
        throw parse_error(std::string("unexpected character '") + c + "'", line, i - line_start + 1);
    }
    token end = here(token_kind::end, "", src.size());
    out.push_back(std::move(end));
    return out;
}

inline bool is_reserved(const std::string& s) {
    return s == "G" || s == "F" || s == "U" || s == "vars" || s == "min" || s == "max" ||
           s == "abs" || s == "sqr" || s == "sqrt";
}

class parser {
public:
    parser(std::vector<token> tokens, std::vector<std::string> vars)
        : toks_(std::move(tokens)), vars_(std::move(vars)) {}

    std::vector<std::string> parse_header() {
        expect_ident("vars");
        std::vector<std::string> names;
        for (;;) {
            const token& t = peek();
            if (t.kind != token_kind::ident) fail("expected variable name");
            if (is_reserved(t.text)) fail("'" + t.text + "' is reserved and cannot name a variable");
            names.push_back(t.text);
            ++pos_;
            if (accept(",")) continue;
            expect(";");
            break;
        }
        vars_ = names;
        return names;
    }

    formula parse_all() {
        formula f = parse_disj();
        if (peek().kind != token_kind::end) fail("unexpected '" + peek().text + "' after formula");
        return f;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        const token& t = peek();
        throw parse_error(msg, t.line, t.column);
    }
    const token& peek(std::size_t k = 0) const {
        return toks_[std::min(pos_ + k, toks_.size() - 1)];
    }
    bool is_symbol(const char* s, std::size_t k = 0) const {
        return peek(k).kind == token_kind::symbol && peek(k).text == s;
    }
    bool is_ident(const char* s, std::size_t k = 0) const {
        return peek(k).kind == token_kind::ident && peek(k).text == s;
    }
    bool accept(const char* s) {
        if (is_symbol(s)) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(const char* s) {
        if (!accept(s)) fail(std::string("expected '") + s + "'");
    }
    void expect_ident(const char* s) {
        if (!is_ident(s)) fail(std::string("expected '") + s + "'");
        ++pos_;
    }

    formula parse_disj() {
        std::vector<formula> parts{parse_conj()};
        while (accept("|")) parts.push_back(parse_conj());
        return parts.size() == 1 ? parts.front() : formula::disjunction(std::move(parts));
    }

    formula parse_conj() {
        std::vector<formula> parts{parse_temporal()};
        while (accept("&")) parts.push_back(parse_temporal());
        return parts.size() == 1 ? parts.front() : formula::conjunction(std::move(parts));
    }

    std::pair<std::size_t, std::size_t> parse_bound() {
        expect("[");
        const auto integer = [&]() -> std::size_t {
            const token& t = peek();
            if (t.kind != token_kind::number || t.text.find_first_not_of("0123456789") != std::string::npos) {
                if (is_symbol("-")) throw malformed_bound("negative temporal bound");
                fail("expected a nonnegative integer step bound");
            }
            ++pos_;
            return static_cast<std::size_t>(std::stoull(t.text));
        };
        const std::size_t t1 = integer();
        expect(",");
        const std::size_t t2 = integer();
        expect("]");
        if (t1 > t2) {
            throw malformed_bound("temporal bound [" + std::to_string(t1) + "," +
                                  std::to_string(t2) + "] has t1 > t2");
        }
        return {t1, t2};
    }

    formula parse_temporal() {
        if ((is_ident("G") || is_ident("F")) && is_symbol("[", 1)) {
            const bool always = peek().text == "G";
            ++pos_;
            auto [t1, t2] = parse_bound();
            formula body = parse_temporal();
            return always ? formula::always(std::move(body), t1, t2)
                          : formula::eventually(std::move(body), t1, t2);
        }
        formula lhs = parse_atom();
        if (is_ident("U")) {
            ++pos_;
            auto [t1, t2] = parse_bound();
            formula rhs = parse_temporal();
            return formula::until(std::move(lhs), std::move(rhs), t1, t2);
        }
        return lhs;
    }

    formula parse_atom() {
        if (accept("!")) return formula::negation(parse_atom());
        if (is_symbol("(")) {
            // "(" opens either a sub-formula or a parenthesised expression
            // on the left of a comparison; try the formula reading first.
            const std::size_t save = pos_;
            try {
                ++pos_;
                formula f = parse_disj();
                expect(")");
                return f;
            } catch (const parse_error& formula_err) {
                const std::size_t formula_reach = pos_;
                pos_ = save;
                try {
                    return parse_pred();
                } catch (const parse_error&) {
                    if (pos_ >= formula_reach) throw;
                    throw formula_err;
                }
            }
        }
        return parse_pred();
    }

    formula parse_pred() {
        expr lhs = parse_sum();
        if (accept(">=")) {
            expr rhs = parse_sum();
            return formula::pred(is_zero(rhs) ? lhs : lhs - rhs);
        }
        if (accept("<=")) {
            expr rhs = parse_sum();
            return formula::pred(is_zero(lhs) ? rhs : rhs - lhs);
        }
        fail("expected '>=' or '<='");
    }

    static bool is_zero(const expr& e) {
        return e.kind() == expr_kind::constant && e.value() == interval(0.0);
    }

    expr parse_sum() {
        expr acc = parse_product();
        for (;;) {
            if (accept("+")) {
                acc = acc + parse_product();
            } else if (accept("-")) {
                acc = acc - parse_product();
            } else {
                return acc;
            }
        }
    }

    expr parse_product() {
        expr acc = parse_unary();
        while (accept("*")) acc = acc * parse_unary();
        return acc;
    }

    expr parse_unary() {
        if (accept("-")) {
            if (peek().kind == token_kind::number) {
                const double v = peek().number;
                ++pos_;
                return expr::constant(-v);
            }
            return -parse_unary();
        }
        return parse_primary();
    }

    double signed_number() {
        const bool negative = accept("-");
        if (peek().kind != token_kind::number) fail("expected a number");
        const double v = peek().number;
        ++pos_;
        return negative ? -v : v;
    }

    expr parse_primary() {
        const token& t = peek();
        if (t.kind == token_kind::number) {
            ++pos_;
            return expr::constant(t.number);
        }
        if (accept("[")) {
            const double lo = signed_number();
            expect(",");
            const double hi = signed_number();
            if (lo > hi) fail("interval literal has lower endpoint above upper endpoint");
            expect("]");
            return expr::constant(interval(lo, hi));
        }
        if (accept("(")) {
            expr e = parse_sum();
            expect(")");
            return e;
        }
        if (t.kind == token_kind::ident) {
            const std::string name = t.text;
            if (is_symbol("(", 1) &&
                (name == "min" || name == "max" || name == "abs" || name == "sqr" || name == "sqrt")) {
                pos_ += 2;
                std::vector<expr> args{parse_sum()};
                while (accept(",")) args.push_back(parse_sum());
                expect(")");
                if (name == "min") return expr::min_of(std::move(args));
                if (name == "max") return expr::max_of(std::move(args));
                if (args.size() != 1) fail(name + " takes exactly one argument");
                if (name == "abs") return expr::abs_of(args[0]);
                if (name == "sqr") return expr::square_of(args[0]);
                return expr::sqrt_of(args[0]);
            }
            if (is_reserved(name)) fail("unexpected keyword '" + name + "'");
            if (std::find(vars_.begin(), vars_.end(), name) == vars_.end()) {
                throw unknown_variable("unknown variable '" + name + "' at " +
                                       std::to_string(t.line) + ":" + std::to_string(t.column));
            }
            ++pos_;
            return expr::var(name);
        }
        fail(t.kind == token_kind::end ? "unexpected end of input" : "unexpected '" + t.text + "'");
    }

    std::vector<token> toks_;
    std::vector<std::string> vars_;
    std::size_t pos_ = 0;
};

} // namespace detail

// Parses a formula body over the declared variables.
inline formula parse_formula(std::string_view text, const std::vector<std::string>& vars) {
    detail::parser p(detail::tokenize(text), vars);
    return p.parse_all();
}

inline formula parse(std::string_view text, const std::vector<std::string>& vars) {
    return parse_formula(text, vars);
}

// Parses a complete specification: "vars" header followed by the formula.
inline specification parse_specification(std::string_view text) {
    detail::parser p(detail::tokenize(text), {});
    auto vars = p.parse_header();
    formula f = p.parse_all();
    return {std::move(vars), std::move(f)};
}

inline specification load_specification(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    std::stringstream text;
    text << in.rdbuf();
    return parse_specification(text.str());
}

inline std::string to_string(const specification& s) {
    std::string out = "vars ";
    for (std::size_t i = 0; i < s.vars.size(); ++i) {
        if (i) out += ", ";
        out += s.vars[i];
    }
    return out + ";\n" + to_string(s.phi) + "\n";
}

} // namespace istl

#endif
