#ifndef ISTL_MILP_HPP
#define ISTL_MILP_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "istl/errors.hpp"
#include "istl/expr.hpp"

namespace istl {

inline constexpr double inf = std::numeric_limits<double>::infinity();

enum class var_type { continuous, binary };
enum class row_sense { le, ge, eq };

struct milp_variable {
    std::string name;
    double lo = 0.0;
    double hi = inf;
    var_type type = var_type::continuous;
};

struct milp_term {
    std::size_t var;
    double coef;
};

struct milp_constraint {
    std::string name;
    std::vector<milp_term> terms;
    row_sense sense = row_sense::le;
    double rhs = 0.0;
};

// Minimize c'x + c0 subject to linear rows and variable bounds.
class milp_model {
public:
    std::size_t add_variable(std::string name, double lo, double hi, var_type type = var_type::continuous) {
        if (type == var_type::binary) {
            lo = std::max(lo, 0.0);
            hi = std::min(hi, 1.0);
        }
        if (!(lo <= hi)) throw construction_error("variable " + name + " has empty bounds");
        vars_.push_back({std::move(name), lo, hi, type});
        objective_.push_back(0.0);
        return vars_.size() - 1;
    }

    std::size_t add_binary(std::string name) { return add_variable(std::move(name), 0.0, 1.0, var_type::binary); }

    std::size_t add_constraint(std::string name, std::vector<milp_term> terms, row_sense sense, double rhs) {
        for (const auto& t : terms) {
            if (t.var >= vars_.size()) throw construction_error("constraint " + name + " uses an undeclared variable");
        }
        rows_.push_back({std::move(name), std::move(terms), sense, rhs});
        return rows_.size() - 1;
    }

    void set_objective(std::size_t var, double coef) { objective_.at(var) = coef; }
    void set_objective_constant(double c) { objective_constant_ = c; }

    void fix(std::size_t var, double value) {
        vars_.at(var).lo = value;
        vars_.at(var).hi = value;
    }
    void set_bounds(std::size_t var, double lo, double hi) {
        vars_.at(var).lo = lo;
        vars_.at(var).hi = hi;
    }

    [[nodiscard]] const std::vector<milp_variable>& variables() const noexcept { return vars_; }
    [[nodiscard]] const std::vector<milp_constraint>& constraints() const noexcept { return rows_; }
    [[nodiscard]] const std::vector<double>& objective() const noexcept { return objective_; }
    [[nodiscard]] double objective_constant() const noexcept { return objective_constant_; }

    [[nodiscard]] std::size_t num_binaries() const {
        std::size_t n = 0;
        for (const auto& v : vars_) n += v.type == var_type::binary;
        return n;
    }

    [[nodiscard]] double evaluate_objective(const std::vector<double>& x) const {
        double s = objective_constant_;
        for (std::size_t j = 0; j < x.size(); ++j) s += objective_[j] * x[j];
        return s;
    }

    [[nodiscard]] static double activity(const milp_constraint& row, const std::vector<double>& x) {
        double s = 0.0;
        for (const auto& t : row.terms) s += t.coef * x[t.var];
        return s;
    }

    // Largest bound or row violation of x.
    [[nodiscard]] double max_violation(const std::vector<double>& x) const {
        double v = 0.0;
        for (std::size_t j = 0; j < vars_.size(); ++j) {
            v = std::max({v, vars_[j].lo - x[j], x[j] - vars_[j].hi});
        }
        for (const auto& r : rows_) {
            const double a = activity(r, x);
            if (r.sense != row_sense::ge) v = std::max(v, a - r.rhs);
            if (r.sense != row_sense::le) v = std::max(v, r.rhs - a);
        }
        return v;
    }

private:
    std::vector<milp_variable> vars_;
    std::vector<milp_constraint> rows_;
    std::vector<double> objective_;
    double objective_constant_ = 0.0;
};

namespace detail {

inline std::string lp_number(double v) {
    if (v == inf) return "inf";
    if (v == -inf) return "-inf";
    return format_number(v);
}

inline void lp_append_terms(std::string& out, const std::vector<milp_term>& terms,
                            const std::vector<milp_variable>& vars) {
    bool first = true;
    std::size_t width = 0;
    for (const auto& t : terms) {
        if (t.coef == 0.0) continue;
        std::string piece;
        const double mag = std::fabs(t.coef);
        piece += t.coef < 0.0 ? "- " : (first ? "" : "+ ");
        if (mag != 1.0) piece += format_number(mag) + " ";
        piece += vars[t.var].name;
        if (width + piece.size() > 72) {
            out += "\n   ";
            width = 0;
        }
        out += " " + piece;
        width += piece.size() + 1;
        first = false;
    }
    if (first) out += " 0 " + (vars.empty() ? std::string("x") : vars.front().name);
}

} // namespace detail

// CPLEX LP text. Variables keep declaration order.
inline std::string emit_lp(const milp_model& m) {
    const auto& vars = m.variables();
    std::string out = "\\ istl model: " + std::to_string(vars.size()) + " variables, " +
                      std::to_string(m.constraints().size()) + " constraints, " +
                      std::to_string(m.num_binaries()) + " binaries\n";
    out += "Minimize\n obj:";
    std::vector<milp_term> obj;
    for (std::size_t j = 0; j < vars.size(); ++j) {
        if (m.objective()[j] != 0.0) obj.push_back({j, m.objective()[j]});
    }
    detail::lp_append_terms(out, obj, vars);
    if (m.objective_constant() != 0.0) {
        out += (m.objective_constant() < 0 ? " - " : " + ") + format_number(std::fabs(m.objective_constant()));
    }
    out += "\nSubject To\n";
    for (std::size_t i = 0; i < m.constraints().size(); ++i) {
        const auto& r = m.constraints()[i];
        out += " " + (r.name.empty() ? "c" + std::to_string(i) : r.name) + ":";
        detail::lp_append_terms(out, r.terms, vars);
        out += r.sense == row_sense::le ? " <= " : r.sense == row_sense::ge ? " >= " : " = ";
        out += format_number(r.rhs) + "\n";
    }
    out += "Bounds\n";
    for (const auto& v : vars) {
        if (v.type == var_type::binary && v.lo != v.hi) continue;
        if (v.lo == v.hi) {
            out += " " + v.name + " = " + format_number(v.lo) + "\n";
        } else if (v.lo == -inf && v.hi == inf) {
            out += " " + v.name + " free\n";
        } else {
            out += " " + detail::lp_number(v.lo) + " <= " + v.name + " <= " + detail::lp_number(v.hi) + "\n";
        }
    }
    bool any = false;
    for (const auto& v : vars) {
        if (v.type != var_type::binary) continue;
        if (!any) out += "Binaries\n";
        any = true;
        out += " " + v.name + "\n";
    }
    out += "End\n";
    return out;
}

} // namespace istl

#endif
