#ifndef ISTL_FORMULA_HPP
#define ISTL_FORMULA_HPP

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "istl/errors.hpp"
#include "istl/expr.hpp"

namespace istl {

enum class formula_kind { pred, negation, conjunction, disjunction, until, always, eventually };

class formula;

namespace detail {

struct formula_node {
    formula_kind kind;
    expr body;                         // pred: atom "body >= 0"
    std::optional<std::string> name;   // pred label, not part of structural equality
    std::vector<formula> args;
    std::size_t t1 = 0;
    std::size_t t2 = 0;
};

} // namespace detail

// Immutable STL / I-STL formula. Temporal bounds are integer step counts.
class formula {
public:
    static formula pred(expr body, std::optional<std::string> name = std::nullopt) {
        auto n = make(formula_kind::pred);
        n->body = std::move(body);
        n->name = std::move(name);
        return formula(std::move(n));
    }
    static formula negation(formula f) {
        auto n = make(formula_kind::negation);
        n->args.push_back(std::move(f));
        return formula(std::move(n));
    }
    static formula conjunction(std::vector<formula> args) {
        return nary(formula_kind::conjunction, std::move(args));
    }
    static formula disjunction(std::vector<formula> args) {
        return nary(formula_kind::disjunction, std::move(args));
    }
    static formula always(formula f, std::size_t t1, std::size_t t2) {
        return temporal(formula_kind::always, {std::move(f)}, t1, t2);
    }
    static formula eventually(formula f, std::size_t t1, std::size_t t2) {
        return temporal(formula_kind::eventually, {std::move(f)}, t1, t2);
    }
    static formula until(formula lhs, formula rhs, std::size_t t1, std::size_t t2) {
        return temporal(formula_kind::until, {std::move(lhs), std::move(rhs)}, t1, t2);
    }

    [[nodiscard]] formula_kind kind() const noexcept { return node_->kind; }
    [[nodiscard]] const expr& body() const noexcept { return node_->body; }
    [[nodiscard]] const std::optional<std::string>& name() const noexcept { return node_->name; }
    [[nodiscard]] const std::vector<formula>& args() const noexcept { return node_->args; }
    [[nodiscard]] std::size_t t1() const noexcept { return node_->t1; }
    [[nodiscard]] std::size_t t2() const noexcept { return node_->t2; }
    [[nodiscard]] const void* id() const noexcept { return node_.get(); }

    friend bool operator==(const formula& a, const formula& b) {
        if (a.id() == b.id()) return true;
        if (a.kind() != b.kind() || a.t1() != b.t1() || a.t2() != b.t2()) return false;
        if (a.kind() == formula_kind::pred) return a.body() == b.body();
        return a.args() == b.args();
    }

private:
    explicit formula(std::shared_ptr<detail::formula_node> n) : node_(std::move(n)) {}

    static std::shared_ptr<detail::formula_node> make(formula_kind k) {
        auto n = std::make_shared<detail::formula_node>();
        n->kind = k;
        return n;
    }
    static formula nary(formula_kind k, std::vector<formula> args) {
        if (args.size() < 2) {
            throw construction_error("conjunction/disjunction needs at least two operands");
        }
        auto n = make(k);
        n->args = std::move(args);
        return formula(std::move(n));
    }
    static formula temporal(formula_kind k, std::vector<formula> args, std::size_t t1,
                            std::size_t t2) {
        if (t1 > t2) {
            throw malformed_bound("temporal bound [" + std::to_string(t1) + "," +
                                  std::to_string(t2) + "] has t1 > t2");
        }
        auto n = make(k);
        n->args = std::move(args);
        n->t1 = t1;
        n->t2 = t2;
        return formula(std::move(n));
    }

    std::shared_ptr<const detail::formula_node> node_;
};

// Number of future steps needed to evaluate f at one time step.
inline std::size_t horizon(const formula& f) {
    switch (f.kind()) {
    case formula_kind::pred:
        return 0;
    case formula_kind::negation:
        return horizon(f.args()[0]);
    case formula_kind::conjunction:
    case formula_kind::disjunction: {
        std::size_t h = 0;
        for (const auto& a : f.args()) h = std::max(h, horizon(a));
        return h;
    }
    case formula_kind::always:
    case formula_kind::eventually:
        return f.t2() + horizon(f.args()[0]);
    case formula_kind::until:
        return f.t2() + std::max(horizon(f.args()[0]), horizon(f.args()[1]));
    }
    return 0;
}

namespace detail {

inline formula pnf(const formula& f, bool negate) {
    const auto map_args = [&](bool neg) {
        std::vector<formula> out;
        out.reserve(f.args().size());
        for (const auto& a : f.args()) out.push_back(pnf(a, neg));
        return out;
    };
    switch (f.kind()) {
    case formula_kind::pred:
        if (!negate) return f;
        return formula::pred(-f.body(), f.name() ? std::optional("!" + *f.name()) : std::nullopt);
    case formula_kind::negation:
        return pnf(f.args()[0], !negate);
    case formula_kind::conjunction:
        return negate ? formula::disjunction(map_args(true)) : formula::conjunction(map_args(false));
    case formula_kind::disjunction:
        return negate ? formula::conjunction(map_args(true)) : formula::disjunction(map_args(false));
    case formula_kind::always:
        return negate ? formula::eventually(pnf(f.args()[0], true), f.t1(), f.t2())
                      : formula::always(pnf(f.args()[0], false), f.t1(), f.t2());
    case formula_kind::eventually:
        return negate ? formula::always(pnf(f.args()[0], true), f.t1(), f.t2())
                      : formula::eventually(pnf(f.args()[0], false), f.t1(), f.t2());
    case formula_kind::until:
        if (negate) {
            throw unsupported_negation(
                "negation over until has no positive normal form without a release operator");
        }
        return formula::until(pnf(f.args()[0], false), pnf(f.args()[1], false), f.t1(), f.t2());
    }
    return f;
}

} // namespace detail

// Pushes negations into the predicates: the result contains no negation nodes
// and has the same (interval) robustness as f at every time step.
inline formula to_pnf(const formula& f) { return detail::pnf(f, false); }

inline bool is_pnf(const formula& f) {
    if (f.kind() == formula_kind::negation) return false;
    return std::all_of(f.args().begin(), f.args().end(), [](const formula& a) { return is_pnf(a); });
}

inline bool has_negation(const formula& f) { return !is_pnf(f); }

// Predicates in depth-first order (duplicates preserved).
inline void collect_predicates(const formula& f, std::vector<formula>& out) {
    if (f.kind() == formula_kind::pred) {
        out.push_back(f);
        return;
    }
    for (const auto& a : f.args()) collect_predicates(a, out);
}

inline std::vector<std::string> variables_of(const formula& f) {
    std::vector<formula> preds;
    collect_predicates(f, preds);
    std::vector<std::string> vars;
    for (const auto& p : preds) collect_variables(p.body(), vars);
    return vars;
}

namespace detail {

template <class Fn>
formula map_predicates(const formula& f, Fn&& fn, std::map<const void*, formula>& memo) {
    if (auto it = memo.find(f.id()); it != memo.end()) return it->second;
    formula out = f;
    if (f.kind() == formula_kind::pred) {
        out = formula::pred(fn(f.body()), f.name());
    } else {
        std::vector<formula> args;
        for (const auto& a : f.args()) args.push_back(map_predicates(a, fn, memo));
        switch (f.kind()) {
        case formula_kind::negation: out = formula::negation(args[0]); break;
        case formula_kind::conjunction: out = formula::conjunction(std::move(args)); break;
        case formula_kind::disjunction: out = formula::disjunction(std::move(args)); break;
        case formula_kind::always: out = formula::always(args[0], f.t1(), f.t2()); break;
        case formula_kind::eventually: out = formula::eventually(args[0], f.t1(), f.t2()); break;
        case formula_kind::until: out = formula::until(args[0], args[1], f.t1(), f.t2()); break;
        default: break;
        }
    }
    memo.emplace(f.id(), out);
    return out;
}

} // namespace detail

// Applies fn to every predicate body, preserving sharing.
template <class Fn>
formula map_predicates(const formula& f, Fn&& fn) {
    std::map<const void*, formula> memo;
    return detail::map_predicates(f, fn, memo);
}

// Concrete STL formula drawn from the family an I-STL formula covers.
// Constants shared between predicates receive one draw.
template <class Rng>
formula sample_realization(const formula& f, Rng& rng) {
    std::map<const void*, expr> expr_memo;
    return map_predicates(f, [&](const expr& e) { return detail::realize(e, rng, expr_memo); });
}

namespace detail {

inline int formula_precedence(const formula& f) {
    switch (f.kind()) {
    case formula_kind::disjunction: return 1;
    case formula_kind::conjunction: return 2;
    case formula_kind::until: return 3;
    case formula_kind::always:
    case formula_kind::eventually: return 4;
    default: return 5;
    }
}

inline std::string print_formula(const formula& f);

inline std::string wrap_formula(const formula& f, int min_prec) {
    const std::string s = print_formula(f);
    return formula_precedence(f) < min_prec ? "(" + s + ")" : s;
}

inline std::string bound_text(const formula& f) {
    return "[" + std::to_string(f.t1()) + "," + std::to_string(f.t2()) + "]";
}

inline std::string print_formula(const formula& f) {
    const auto join = [&](const char* sep, int min_prec) {
        std::string s;
        for (std::size_t i = 0; i < f.args().size(); ++i) {
            if (i) s += sep;
            s += wrap_formula(f.args()[i], min_prec);
        }
        return s;
    };
    switch (f.kind()) {
    case formula_kind::pred: return "(" + to_string(f.body()) + " >= 0)";
    case formula_kind::negation: return "!" + wrap_formula(f.args()[0], 5);
    case formula_kind::conjunction: return join(" & ", 3);
    case formula_kind::disjunction: return join(" | ", 2);
    case formula_kind::always: return "G" + bound_text(f) + " " + wrap_formula(f.args()[0], 3);
    case formula_kind::eventually: return "F" + bound_text(f) + " " + wrap_formula(f.args()[0], 3);
    case formula_kind::until:
        return wrap_formula(f.args()[0], 5) + " U" + bound_text(f) + " " +
               wrap_formula(f.args()[1], 3);
    }
    return {};
}

} // namespace detail

// Text form accepted by parse_formula().
inline std::string to_string(const formula& f) { return detail::print_formula(f); }

} // namespace istl

#endif
