#ifndef ISTL_EXPR_HPP
#define ISTL_EXPR_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "istl/errors.hpp"
#include "istl/interval.hpp"

namespace istl {

enum class expr_kind { var, constant, add, sub, neg, mul, min, max, abs, square, sqrt, dot };

class expr;

namespace detail {

struct expr_node {
    expr_kind kind;
    std::string name;                 // var
    interval value;                   // constant
    std::vector<expr> args;           // operators
    interval_vector coeffs;           // dot
    std::vector<std::string> vars;    // dot
    interval offset;                  // dot
};

} // namespace detail

// Immutable expression tree over named signal variables. Constants are
// intervals; a degenerate constant is an exact number. Copies share structure.
class expr {
public:
    expr() : expr(constant(0.0)) {}

    static expr var(std::string name) {
        auto n = make(expr_kind::var);
        n->name = std::move(name);
        return expr(std::move(n));
    }
    static expr constant(double v) { return constant(interval(v)); }
    static expr constant(interval v) {
        auto n = make(expr_kind::constant);
        n->value = v;
        return expr(std::move(n));
    }
    static expr min_of(std::vector<expr> args) { return nary(expr_kind::min, std::move(args)); }
    static expr max_of(std::vector<expr> args) { return nary(expr_kind::max, std::move(args)); }
    static expr abs_of(expr a) { return unary(expr_kind::abs, std::move(a)); }
    static expr square_of(expr a) { return unary(expr_kind::square, std::move(a)); }
    static expr sqrt_of(expr a) { return unary(expr_kind::sqrt, std::move(a)); }

    // Affine interval predicate body: sum_j coeffs[j] * vars[j] + offset.
    static expr dot(interval_vector coeffs, std::vector<std::string> vars, interval offset) {
        if (coeffs.size() != vars.size()) {
            throw construction_error("dot: coefficient count does not match variable count");
        }
        auto n = make(expr_kind::dot);
        n->coeffs = std::move(coeffs);
        n->vars = std::move(vars);
        n->offset = offset;
        return expr(std::move(n));
    }

    friend expr operator+(expr a, expr b) { return binary(expr_kind::add, std::move(a), std::move(b)); }
    friend expr operator-(expr a, expr b) { return binary(expr_kind::sub, std::move(a), std::move(b)); }
    friend expr operator*(expr a, expr b) { return binary(expr_kind::mul, std::move(a), std::move(b)); }
    friend expr operator-(expr a) { return unary(expr_kind::neg, std::move(a)); }

    [[nodiscard]] expr_kind kind() const noexcept { return node_->kind; }
    [[nodiscard]] const std::string& name() const noexcept { return node_->name; }
    [[nodiscard]] const interval& value() const noexcept { return node_->value; }
    [[nodiscard]] const std::vector<expr>& args() const noexcept { return node_->args; }
    [[nodiscard]] const interval_vector& coeffs() const noexcept { return node_->coeffs; }
    [[nodiscard]] const std::vector<std::string>& dot_vars() const noexcept { return node_->vars; }
    [[nodiscard]] const interval& offset() const noexcept { return node_->offset; }

    // Identity of the shared node; equal ids imply structurally equal trees.
    [[nodiscard]] const void* id() const noexcept { return node_.get(); }

    friend bool operator==(const expr& a, const expr& b);

private:
    explicit expr(std::shared_ptr<detail::expr_node> n) : node_(std::move(n)) {}

    static std::shared_ptr<detail::expr_node> make(expr_kind k) {
        auto n = std::make_shared<detail::expr_node>();
        n->kind = k;
        return n;
    }
    static expr unary(expr_kind k, expr a) {
        auto n = make(k);
        n->args.push_back(std::move(a));
        return expr(std::move(n));
    }
    static expr binary(expr_kind k, expr a, expr b) {
        auto n = make(k);
        n->args.push_back(std::move(a));
        n->args.push_back(std::move(b));
        return expr(std::move(n));
    }
    static expr nary(expr_kind k, std::vector<expr> args) {
        if (args.empty()) {
            throw empty_argument("min/max expression needs at least one argument");
        }
        auto n = make(k);
        n->args = std::move(args);
        return expr(std::move(n));
    }

    std::shared_ptr<const detail::expr_node> node_;
};

inline bool operator==(const expr& a, const expr& b) {
    if (a.id() == b.id()) {
        return true;
    }
    if (a.kind() != b.kind()) {
        return false;
    }
    switch (a.kind()) {
    case expr_kind::var:
        return a.name() == b.name();
    case expr_kind::constant:
        return a.value() == b.value();
    case expr_kind::dot:
        return a.coeffs() == b.coeffs() && a.dot_vars() == b.dot_vars() && a.offset() == b.offset();
    default:
        return a.args() == b.args();
    }
}

// Maps variable names to positions in a signal vector.
class var_binding {
public:
    var_binding() = default;

    explicit var_binding(const std::vector<std::string>& names) {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (!index_.emplace(names[i], i).second) {
                throw construction_error("duplicate variable '" + names[i] + "' in binding");
            }
        }
        names_ = names;
    }

    [[nodiscard]] std::optional<std::size_t> find(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    [[nodiscard]] std::size_t at(const std::string& name) const {
        auto i = find(name);
        if (!i) {
            throw unbound_variable("variable '" + name + "' is not bound");
        }
        return *i;
    }

    [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }
    [[nodiscard]] std::size_t size() const noexcept { return names_.size(); }

private:
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::string> names_;
};

// Expression with variables resolved to indices, flattened for fast repeated
// evaluation. Point and interval evaluation share one implementation.
class compiled_expr {
public:
    compiled_expr() = default;

    compiled_expr(const expr& e, const var_binding& binding) { root_ = add(e, binding); }

    // Throws nondegenerate_constant when the expression carries interval
    // uncertainty; sample_realization() first to get a point predicate.
    [[nodiscard]] double eval_point(std::span<const double> x) const {
        if (has_uncertain_constant_) {
            throw nondegenerate_constant(
                "point evaluation of an expression with interval constants is ill-posed");
        }
        return eval<double>(root_, x);
    }

    [[nodiscard]] interval eval_interval(std::span<const interval> x) const {
        return eval<interval>(root_, x);
    }

    [[nodiscard]] bool has_uncertain_constant() const noexcept { return has_uncertain_constant_; }

private:
    struct node {
        expr_kind kind;
        std::size_t first = 0;  // var index, or first child / dot term position
        std::size_t count = 0;  // child / dot term count
        interval value;
    };

    std::size_t add(const expr& e, const var_binding& b) {
        node n{e.kind(), 0, 0, interval{}};
        switch (e.kind()) {
        case expr_kind::var:
            n.first = b.at(e.name());
            break;
        case expr_kind::constant:
            n.value = e.value();
            has_uncertain_constant_ |= !e.value().degenerate();
            break;
        case expr_kind::dot:
            n.first = terms_.size();
            n.count = e.coeffs().size();
            n.value = e.offset();
            has_uncertain_constant_ |= !e.offset().degenerate();
            for (std::size_t j = 0; j < e.coeffs().size(); ++j) {
                terms_.push_back({e.coeffs()[j], b.at(e.dot_vars()[j])});
                has_uncertain_constant_ |= !e.coeffs()[j].degenerate();
            }
            break;
        default: {
            std::vector<std::size_t> kids;
            kids.reserve(e.args().size());
            for (const auto& a : e.args()) {
                kids.push_back(add(a, b));
            }
            n.first = children_.size();
            n.count = kids.size();
            children_.insert(children_.end(), kids.begin(), kids.end());
        }
        }
        nodes_.push_back(n);
        return nodes_.size() - 1;
    }

    static double lift(const interval& c, double /*tag*/) { return c.lo(); }
    static interval lift(const interval& c, const interval& /*tag*/) { return c; }

    static double do_sqrt(double v) {
        if (v < -sqrt_clamp_tolerance) {
            throw domain_error("sqrt of negative value " + std::to_string(v));
        }
        return std::sqrt(std::max(v, 0.0));
    }
    static interval do_sqrt(const interval& v) { return istl::sqrt(v); }
    static double do_abs(double v) { return std::fabs(v); }
    static interval do_abs(const interval& v) { return istl::abs(v); }
    static double do_square(double v) { return v * v; }
    static interval do_square(const interval& v) { return istl::square(v); }
    static double do_min(double a, double b) { return std::min(a, b); }
    static interval do_min(const interval& a, const interval& b) { return min_inc(a, b); }
    static double do_max(double a, double b) { return std::max(a, b); }
    static interval do_max(const interval& a, const interval& b) { return max_inc(a, b); }

    template <class V>
    V eval(std::size_t i, std::span<const V> x) const {
        const node& n = nodes_[i];
        const auto child = [&](std::size_t k) { return eval<V>(children_[n.first + k], x); };
        switch (n.kind) {
        case expr_kind::var:
            return x[n.first];
        case expr_kind::constant:
            return lift(n.value, V{});
        case expr_kind::add:
            return child(0) + child(1);
        case expr_kind::sub:
            return child(0) - child(1);
        case expr_kind::neg:
            return -child(0);
        case expr_kind::mul:
            return child(0) * child(1);
        case expr_kind::min: {
            V acc = child(0);
            for (std::size_t k = 1; k < n.count; ++k) {
                acc = do_min(acc, child(k));
            }
            return acc;
        }
        case expr_kind::max: {
            V acc = child(0);
            for (std::size_t k = 1; k < n.count; ++k) {
                acc = do_max(acc, child(k));
            }
            return acc;
        }
        case expr_kind::abs:
            return do_abs(child(0));
        case expr_kind::square:
            return do_square(child(0));
        case expr_kind::sqrt:
            return do_sqrt(child(0));
        case expr_kind::dot: {
            V acc = lift(n.value, V{});
            for (std::size_t k = 0; k < n.count; ++k) {
                const auto& t = terms_[n.first + k];
                acc = acc + lift(t.coeff, V{}) * x[t.var];
            }
            return acc;
        }
        }
        return V{};
    }

    struct dot_term {
        interval coeff;
        std::size_t var;
    };

    std::vector<node> nodes_;
    std::vector<std::size_t> children_;
    std::vector<dot_term> terms_;
    std::size_t root_ = 0;
    bool has_uncertain_constant_ = false;
};

inline double eval_point(const expr& e, std::span<const double> x, const var_binding& binding) {
    return compiled_expr(e, binding).eval_point(x);
}

inline interval eval_interval(const expr& e, std::span<const interval> x,
                              const var_binding& binding) {
    return compiled_expr(e, binding).eval_interval(x);
}

namespace detail {

template <class Rng>
interval draw_point(const interval& c, Rng& rng) {
    if (c.degenerate()) {
        return c;
    }
    std::uniform_real_distribution<double> dist(c.lo(), c.hi());
    return interval(std::clamp(dist(rng), c.lo(), c.hi()));
}

template <class Rng>
expr realize(const expr& e, Rng& rng, std::map<const void*, expr>& memo) {
    if (auto it = memo.find(e.id()); it != memo.end()) {
        return it->second;
    }
    expr out = e;
    switch (e.kind()) {
    case expr_kind::var:
        break;
    case expr_kind::constant:
        if (!e.value().degenerate()) {
            out = expr::constant(draw_point(e.value(), rng));
        }
        break;
    case expr_kind::dot: {
        interval_vector cs;
        for (const auto& c : e.coeffs()) {
            cs.push_back(draw_point(c, rng));
        }
        const interval off = draw_point(e.offset(), rng);
        out = expr::dot(std::move(cs), e.dot_vars(), off);
        break;
    }
    default: {
        std::vector<expr> args;
        bool changed = false;
        for (const auto& a : e.args()) {
            args.push_back(realize(a, rng, memo));
            changed |= args.back().id() != a.id();
        }
        if (!changed) {
            break;
        }
        switch (e.kind()) {
        case expr_kind::add: out = args[0] + args[1]; break;
        case expr_kind::sub: out = args[0] - args[1]; break;
        case expr_kind::mul: out = args[0] * args[1]; break;
        case expr_kind::neg: out = -args[0]; break;
        case expr_kind::min: out = expr::min_of(std::move(args)); break;
        case expr_kind::max: out = expr::max_of(std::move(args)); break;
        case expr_kind::abs: out = expr::abs_of(args[0]); break;
        case expr_kind::square: out = expr::square_of(args[0]); break;
        case expr_kind::sqrt: out = expr::sqrt_of(args[0]); break;
        default: break;
        }
    }
    }
    memo.emplace(e.id(), out);
    return out;
}

} // namespace detail

// Replaces every nondegenerate constant with a uniform draw from its interval,
// giving one concrete predicate from the family the interval expression covers.
// A subtree shared by several parents gets a single draw.
template <class Rng>
expr sample_realization(const expr& e, Rng& rng) {
    std::map<const void*, expr> memo;
    return detail::realize(e, rng, memo);
}

namespace detail {

enum class polarity { constant, increasing, decreasing, unknown };

inline polarity flip(polarity p) {
    switch (p) {
    case polarity::increasing: return polarity::decreasing;
    case polarity::decreasing: return polarity::increasing;
    default: return p;
    }
}

inline polarity join(polarity a, polarity b) {
    if (a == polarity::constant) return b;
    if (b == polarity::constant) return a;
    return a == b ? a : polarity::unknown;
}

inline polarity polarity_of(const expr& e) {
    switch (e.kind()) {
    case expr_kind::var:
        return polarity::increasing;
    case expr_kind::constant:
        return e.value().degenerate() ? polarity::constant : polarity::unknown;
    case expr_kind::add:
        return join(polarity_of(e.args()[0]), polarity_of(e.args()[1]));
    case expr_kind::sub:
        return join(polarity_of(e.args()[0]), flip(polarity_of(e.args()[1])));
    case expr_kind::neg:
        return flip(polarity_of(e.args()[0]));
    case expr_kind::mul: {
        const auto scaled = [](const expr& c, const expr& other) {
            const double v = c.value().lo();
            const polarity p = polarity_of(other);
            if (v == 0.0) return polarity::constant;
            return v > 0.0 ? p : flip(p);
        };
        const expr& a = e.args()[0];
        const expr& b = e.args()[1];
        const bool ca = a.kind() == expr_kind::constant && a.value().degenerate();
        const bool cb = b.kind() == expr_kind::constant && b.value().degenerate();
        if (ca) return scaled(a, b);
        if (cb) return scaled(b, a);
        const polarity pa = polarity_of(a);
        const polarity pb = polarity_of(b);
        return (pa == polarity::constant && pb == polarity::constant) ? polarity::constant
                                                                      : polarity::unknown;
    }
    case expr_kind::min:
    case expr_kind::max: {
        polarity p = polarity::constant;
        for (const auto& a : e.args()) {
            p = join(p, polarity_of(a));
        }
        return p;
    }
    case expr_kind::sqrt:
        return polarity_of(e.args()[0]);
    case expr_kind::abs:
    case expr_kind::square:
        return polarity_of(e.args()[0]) == polarity::constant ? polarity::constant
                                                              : polarity::unknown;
    case expr_kind::dot: {
        if (!e.offset().degenerate()) return polarity::unknown;
        polarity p = polarity::constant;
        for (const auto& c : e.coeffs()) {
            if (!c.degenerate()) return polarity::unknown;
            if (c.lo() > 0.0) p = join(p, polarity::increasing);
            if (c.lo() < 0.0) p = join(p, polarity::decreasing);
        }
        return p;
    }
    }
    return polarity::unknown;
}

} // namespace detail

// Conservative syntactic check. True guarantees e is nondecreasing in every
// variable and free of interval uncertainty; false means "not established".
inline bool is_monotone_nondecreasing(const expr& e) {
    const auto p = detail::polarity_of(e);
    return p == detail::polarity::increasing || p == detail::polarity::constant;
}

// sum_j coeffs[j] * vars[j] + offset with distinct variables.
struct affine_form {
    interval_vector coeffs;
    std::vector<std::string> vars;
    interval offset;

    [[nodiscard]] expr to_expr() const { return expr::dot(coeffs, vars, offset); }
};

namespace detail {

// Accumulates e * scale into form. Fails on any non-affine construct or a
// repeated variable: the tree's natural inclusion function then still equals
// the dot form's, which a merged coefficient would not preserve.
inline bool collect_affine(const expr& e, const interval& scale, affine_form& form,
                           std::vector<std::string>& seen) {
    const auto add_term = [&](const std::string& v, const interval& c) {
        if (std::find(seen.begin(), seen.end(), v) != seen.end()) {
            return false;
        }
        seen.push_back(v);
        form.vars.push_back(v);
        form.coeffs.push_back(c);
        return true;
    };
    switch (e.kind()) {
    case expr_kind::var:
        return add_term(e.name(), scale);
    case expr_kind::constant:
        form.offset = form.offset + scale * e.value();
        return true;
    case expr_kind::add:
        // An uncertain factor distributed over a sum would widen the result
        // (subdistributivity), so that shape is rejected.
        if (!scale.degenerate()) return false;
        return collect_affine(e.args()[0], scale, form, seen) &&
               collect_affine(e.args()[1], scale, form, seen);
    case expr_kind::sub:
        if (!scale.degenerate()) return false;
        return collect_affine(e.args()[0], scale, form, seen) &&
               collect_affine(e.args()[1], -scale, form, seen);
    case expr_kind::neg:
        return collect_affine(e.args()[0], -scale, form, seen);
    case expr_kind::mul: {
        const expr& a = e.args()[0];
        const expr& b = e.args()[1];
        if (a.kind() == expr_kind::constant) {
            return collect_affine(b, scale * a.value(), form, seen);
        }
        if (b.kind() == expr_kind::constant) {
            return collect_affine(a, scale * b.value(), form, seen);
        }
        return false;
    }
    case expr_kind::dot:
        if (!scale.degenerate() && (e.coeffs().size() > 1 || e.offset() != interval(0.0))) return false;
        for (std::size_t j = 0; j < e.coeffs().size(); ++j) {
            if (!add_term(e.dot_vars()[j], scale * e.coeffs()[j])) {
                return false;
            }
        }
        form.offset = form.offset + scale * e.offset();
        return true;
    default:
        return false;
    }
}

} // namespace detail

// Affine view of e, or nullopt when e is not affine with each variable used
// once. The dot form's natural inclusion equals e's: exact factors distribute
// freely and uncertain factors only ever meet a single term, where interval
// multiplication is associative.
inline std::optional<affine_form> to_affine(const expr& e) {
    affine_form form{{}, {}, interval(0.0)};
    std::vector<std::string> seen;
    if (!detail::collect_affine(e, interval(1.0), form, seen)) {
        return std::nullopt;
    }
    return form;
}

// Variables referenced by e, in first-occurrence order.
inline void collect_variables(const expr& e, std::vector<std::string>& out) {
    const auto note = [&](const std::string& v) {
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    };
    switch (e.kind()) {
    case expr_kind::var: note(e.name()); break;
    case expr_kind::constant: break;
    case expr_kind::dot:
        for (const auto& v : e.dot_vars()) note(v);
        break;
    default:
        for (const auto& a : e.args()) collect_variables(a, out);
    }
}

// Shortest decimal text that reads back to exactly v.
inline std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

namespace detail {

inline int precedence(const expr& e) {
    switch (e.kind()) {
    case expr_kind::add:
    case expr_kind::sub:
    case expr_kind::dot:
        return 1;
    case expr_kind::mul:
        return 2;
    case expr_kind::neg:
        return 3;
    case expr_kind::constant:
        // negative literals read back as a unary minus position
        return (e.value().degenerate() && std::signbit(e.value().lo())) ? 3 : 4;
    default:
        return 4;
    }
}

inline std::string constant_text(const interval& v) {
    if (v.degenerate()) {
        return format_number(v.lo());
    }
    return "[" + format_number(v.lo()) + "," + format_number(v.hi()) + "]";
}

inline std::string print(const expr& e);

inline std::string wrap(const expr& e, int min_prec) {
    std::string s = print(e);
    return precedence(e) < min_prec ? "(" + s + ")" : s;
}

inline std::string print(const expr& e) {
    const auto list = [&](const char* fn) {
        std::string s = fn;
        s += '(';
        for (std::size_t i = 0; i < e.args().size(); ++i) {
            if (i) s += ", ";
            s += print(e.args()[i]);
        }
        return s + ")";
    };
    switch (e.kind()) {
    case expr_kind::var: return e.name();
    case expr_kind::constant: return constant_text(e.value());
    case expr_kind::add: return wrap(e.args()[0], 1) + " + " + wrap(e.args()[1], 2);
    case expr_kind::sub: return wrap(e.args()[0], 1) + " - " + wrap(e.args()[1], 2);
    case expr_kind::mul: return wrap(e.args()[0], 2) + " * " + wrap(e.args()[1], 3);
    case expr_kind::neg: {
        // "-(...)" keeps a negated literal from folding into a negative constant
        const expr& a = e.args()[0];
        return a.kind() == expr_kind::constant || precedence(a) < 4 ? "-(" + print(a) + ")"
                                                                     : "-" + print(a);
    }
    case expr_kind::min: return list("min");
    case expr_kind::max: return list("max");
    case expr_kind::abs: return list("abs");
    case expr_kind::square: return list("sqr");
    case expr_kind::sqrt: return list("sqrt");
    case expr_kind::dot: {
        std::string s;
        for (std::size_t j = 0; j < e.coeffs().size(); ++j) {
            if (j) s += " + ";
            const std::string c = constant_text(e.coeffs()[j]);
            s += (e.coeffs()[j].degenerate() && std::signbit(e.coeffs()[j].lo()) ? "(" + c + ")" : c) +
                 " * " + e.dot_vars()[j];
        }
        const std::string off = constant_text(e.offset());
        if (s.empty()) return off;
        return s + " + " + (e.offset().degenerate() && std::signbit(e.offset().lo()) ? "(" + off + ")" : off);
    }
    }
    return {};
}

} // namespace detail

// Text form accepted by the specification parser.
inline std::string to_string(const expr& e) { return detail::print(e); }

} // namespace istl

#endif
