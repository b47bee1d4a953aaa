#ifndef ISTL_ENCODE_HPP
#define ISTL_ENCODE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "istl/branch_and_bound.hpp"
#include "istl/embedding.hpp"
#include "istl/errors.hpp"
#include "istl/expr.hpp"
#include "istl/formula.hpp"
#include "istl/milp.hpp"
#include "istl/semantics.hpp"
#include "istl/trace.hpp"

namespace istl {

// How the componentwise min over corner products enters the model.
//   hypograph: m <= every surviving corner; exact because m only ever needs
//              to be pushed up.
//   selection: one binary per surviving corner picks the active one.
enum class corner_encoding { hypograph, selection };

enum class encode_mode {
    synthesize,  // robustness lower bound >= 0 over the window, minimize |u(t)|
    evaluate,    // inputs fixed, maximize the robustness lower bound at t
};

struct synthesis_config {
    std::size_t N = 16;
    std::size_t b = 1;
    std::optional<double> big_m;  // derived from reachability when empty
    corner_encoding corners = corner_encoding::hypograph;
    // Single nominal trajectory with exact predicates instead of the
    // lower/upper embedding.
    bool nominal = false;
    until_convention until = until_convention::paper;
    // Synthesis asks for a lower bound of at least this much, so LP round-off
    // cannot push the re-checked bound below zero.
    double margin = 1e-7;
};

struct synthesis_problem {
    const linear_system* sys = nullptr;
    formula spec;
    synthesis_config config;
    std::size_t t = 0;
    interval_trace history;  // outputs at 0..t
    embedding_state state;   // embedding state at t
    encode_mode mode = encode_mode::synthesize;
    std::vector<std::vector<double>> fixed_inputs;  // evaluate mode: u(t), u(t+1), ...
};

struct encoding {
    milp_model model;
    std::size_t t = 0;
    std::size_t window_lo = 0;
    std::size_t window_hi = 0;
    std::size_t steps = 0;                   // predicted inputs u(t .. t+steps-1)
    std::vector<std::vector<std::size_t>> u;  // u[k][i] -> variable of u_i(t+k)
    std::optional<std::size_t> rho;
    double big_m = 0.0;
    // Evaluate mode: a feasible assignment built by evaluating the model's
    // own min/max structure, for seeding the solver. Empty if none.
    std::vector<double> start;
    bool trivially_infeasible = false;

    struct linear {
        std::vector<milp_term> terms;
        double constant = 0.0;

        [[nodiscard]] double value(const std::vector<double>& x) const {
            return constant + milp_model::activity({"", terms, row_sense::le, 0.0}, x);
        }
    };
    // Big-M rows kept for the post-solve audit. The true margin of a leaf is
    // sum over terms of the min over corners; a selection row guards
    // corner - min over corners.
    struct leaf {
        std::size_t z;
        std::vector<std::vector<linear>> terms;
        double constant;
        bool has_rho;
        double big_m = 0.0;
    };
    struct selection {
        std::size_t s;
        std::size_t corner;
        std::vector<linear> corners;
    };
    std::vector<leaf> leaves;
    std::vector<selection> selections;
};

struct big_m_audit {
    bool ok = true;
    std::size_t binding = 0;
    double tightest = inf;  // smallest distance from a big-M row's relaxed value to -M
};

namespace detail {

struct literal {
    bool is_const;
    bool value;
    std::size_t var;

    static literal constant(bool v) { return {true, v, 0}; }
    static literal of(std::size_t j) { return {false, false, j}; }
};

class encoder {
public:
    explicit encoder(const synthesis_problem& p) : p_(p), sys_(checked_system(p)), spec_(normalized(p.spec)) {
        h_ = horizon(spec_);
        setup_window();
        collect_leaves(spec_);
        check_history();
    }

    encoding run() {
        out_.t = p_.t;
        reach_box();
        out_.big_m = choose_big_m();
        M_ = out_.big_m;
        declare_inputs();
        declare_states();
        // Leaves are declared in time order so that branching on the lowest
        // fractional index settles earlier steps first.
        // Keyed by position in canon_, not by address, so the model is the
        // same from run to run.
        std::set<std::pair<std::size_t, std::size_t>> needed;
        for (std::size_t tau = out_.window_lo; tau <= out_.window_hi; ++tau) need(spec_, tau, needed);
        if (p_.mode == encode_mode::evaluate) {
            // The robustness is always one of the leaf margins, so their range
            // bounds it. A tight range keeps every leaf's big-M small.
            double lo = inf, hi = -inf;
            for (const auto& [s, k] : needed) {
                const interval v = margin_range(preds_.at(canon_[k].second), s);
                lo = std::min(lo, v.lo());
                hi = std::max(hi, v.hi());
            }
            if (needed.empty()) lo = -M_, hi = M_;
            out_.rho = out_.model.add_variable("rho", std::max(lo, -M_), std::min(hi, M_));
            out_.model.set_objective(*out_.rho, -1.0);
        }
        for (const auto& [s, k] : needed) {
            const void* id = canon_[k].second;
            memo_.emplace(std::make_pair(id, s), leaf(preds_.at(id), s));
        }
        for (std::size_t tau = out_.window_lo; tau <= out_.window_hi; ++tau) {
            const literal root = node(spec_, tau);
            if (root.is_const) {
                if (!root.value) {
                    out_.trivially_infeasible = true;
                    out_.model.add_constraint("root_" + std::to_string(tau), {}, row_sense::ge, 1.0);
                }
            } else {
                out_.model.fix(root.var, 1.0);
            }
            if (p_.mode == encode_mode::evaluate) evaluation_start(root);
        }
        if (p_.mode == encode_mode::synthesize) add_input_objective();
        return std::move(out_);
    }

private:
    static const linear_system& checked_system(const synthesis_problem& p) {
        if (p.sys == nullptr) throw construction_error("synthesis problem has no system");
        return *p.sys;
    }

    static formula normalized(const formula& f) {
        try {
            return to_pnf(f);
        } catch (const unsupported_negation& e) {
            throw not_pnf(std::string("specification has no positive normal form: ") + e.what());
        }
    }

    struct pred_info {
        std::vector<interval> coeffs;
        std::vector<std::size_t> state;  // state index per term
        interval offset;
        std::size_t id;
    };

    void setup_window() {
        const auto& c = p_.config;
        if (p_.mode == encode_mode::synthesize) {
            if (c.N < c.b) throw horizon_mismatch("N must be at least b");
            out_.window_lo = p_.t > h_ ? p_.t - h_ : 0;
            out_.window_hi = p_.t + c.N - c.b;
            out_.steps = c.N - c.b + h_;
        } else {
            out_.window_lo = p_.t;
            out_.window_hi = p_.t;
            out_.steps = h_;
            if (p_.fixed_inputs.size() != h_) {
                throw horizon_mismatch("evaluation needs " + std::to_string(h_) + " inputs, got " +
                                       std::to_string(p_.fixed_inputs.size()));
            }
        }
    }

    void check_history() {
        if (p_.history.length() != p_.t + 1) {
            throw horizon_mismatch("history must hold outputs at 0.." + std::to_string(p_.t) + ", got " +
                                   std::to_string(p_.history.length()) + " samples");
        }
        if (p_.history.vars() != sys_.output_vars()) {
            throw horizon_mismatch("history variables differ from the system outputs");
        }
        if (p_.state.lo.size() != sys_.states() || p_.state.hi.size() != sys_.states()) {
            throw horizon_mismatch("embedding state dimension mismatch");
        }
    }

    // Structurally equal predicates share one leaf per time step.
    const void* canonical(const formula& f) {
        for (const auto& [body, id] : canon_) {
            if (body == f.body()) return id;
        }
        canon_.emplace_back(f.body(), f.id());
        return f.id();
    }

    void collect_leaves(const formula& f) {
        if (f.kind() == formula_kind::pred) {
            if (canonical(f) != f.id() || preds_.count(f.id())) return;
            const auto form = to_affine(f.body());
            if (!form) throw non_affine_predicate("predicate is not affine: " + to_string(f.body()));
            pred_info info{form->coeffs, {}, form->offset, preds_.size()};
            const auto outputs = sys_.outputs();
            for (const auto& v : form->vars) {
                auto it = std::find_if(outputs.begin(), outputs.end(), [&](const auto& o) { return o.first == v; });
                if (it == outputs.end()) throw unknown_variable("predicate uses '" + v + "', not a system output");
                info.state.push_back(it->second);
            }
            if (p_.config.nominal) {
                for (const auto& a : info.coeffs) {
                    if (!a.degenerate()) throw nondegenerate_constant("nominal encoding needs exact predicates");
                }
                if (!info.offset.degenerate()) throw nondegenerate_constant("nominal encoding needs exact predicates");
            }
            preds_.emplace(f.id(), std::move(info));
            return;
        }
        for (const auto& a : f.args()) collect_leaves(a);
    }

    // State box reachable under any admissible input (or the fixed inputs
    // when evaluating), per predicted step.
    void reach_box() {
        const std::size_t n = sys_.states();
        reach_lo_.assign(out_.steps + 1, {});
        reach_hi_.assign(out_.steps + 1, {});
        reach_lo_[0] = p_.state.lo;
        reach_hi_[0] = p_.state.hi;
        for (std::size_t k = 0; k < out_.steps; ++k) {
            auto& lo = reach_lo_[k + 1];
            auto& hi = reach_hi_[k + 1];
            lo.assign(n, 0.0);
            hi.assign(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                double l = sys_.w_lo()[i];
                double h = sys_.w_hi()[i];
                for (std::size_t j = 0; j < n; ++j) {
                    l += sys_.A()[i][j] * reach_lo_[k][j];
                    h += sys_.A()[i][j] * reach_hi_[k][j];
                }
                for (std::size_t q = 0; q < sys_.inputs(); ++q) {
                    const bool fixed = p_.mode == encode_mode::evaluate;
                    const double a = sys_.B()[i][q] * (fixed ? p_.fixed_inputs[k].at(q) : sys_.u_lo()[q]);
                    const double c = sys_.B()[i][q] * (fixed ? p_.fixed_inputs[k].at(q) : sys_.u_hi()[q]);
                    l += std::min(a, c);
                    h += std::max(a, c);
                }
                lo[i] = l;
                hi[i] = h;
            }
        }
    }

    [[nodiscard]] interval reach(std::size_t s, std::size_t state) const {
        const std::size_t k = s - p_.t;
        return interval(reach_lo_[k][state], reach_hi_[k][state]);
    }

    double choose_big_m() {
        if (p_.config.big_m) {
            const double m = *p_.config.big_m;
            if (!(m > 0.0) || !std::isfinite(m)) throw bad_big_m("big-M must be a positive finite number");
            return m;
        }
        double worst = 0.0;
        const std::size_t last = out_.window_hi + h_;
        for (const auto& [id, info] : preds_) {
            for (std::size_t s = 0; s <= last; ++s) {
                interval total = info.offset;
                for (std::size_t j = 0; j < info.coeffs.size(); ++j) {
                    const interval y = s <= p_.t ? output_at(s, info.state[j]) : reach(s, info.state[j]);
                    const interval term = info.coeffs[j] * y;
                    worst = std::max({worst, std::fabs(term.lo()), std::fabs(term.hi())});
                    total = total + term;
                }
                worst = std::max({worst, std::fabs(total.lo()), std::fabs(total.hi())});
            }
        }
        const double m = 2.0 * worst + 1.0;
        if (!std::isfinite(m)) throw bad_big_m("reachable predicate values are unbounded");
        return m;
    }

    [[nodiscard]] interval margin_range(const pred_info& info, std::size_t s) const {
        interval total = info.offset;
        for (std::size_t j = 0; j < info.coeffs.size(); ++j) {
            total = total + info.coeffs[j] * (s <= p_.t ? output_at(s, info.state[j]) : reach(s, info.state[j]));
        }
        return total;
    }

    [[nodiscard]] interval output_at(std::size_t s, std::size_t state) const {
        const auto& outs = sys_.outputs();
        for (std::size_t i = 0; i < outs.size(); ++i) {
            if (outs[i].second == state) return p_.history.at(s, i);
        }
        throw horizon_mismatch("history lacks state " + std::to_string(state));
    }

    void declare_inputs() {
        auto& m = out_.model;
        out_.u.resize(out_.steps);
        for (std::size_t k = 0; k < out_.steps; ++k) {
            for (std::size_t q = 0; q < sys_.inputs(); ++q) {
                const std::string name = "u" + std::to_string(q) + "_" + std::to_string(p_.t + k);
                std::size_t j;
                if (p_.mode == encode_mode::evaluate) {
                    const double v = p_.fixed_inputs[k].at(q);
                    sys_.check_input(p_.fixed_inputs[k]);
                    j = m.add_variable(name, v, v);
                } else {
                    j = m.add_variable(name, sys_.u_lo()[q], sys_.u_hi()[q]);
                }
                out_.u[k].push_back(j);
            }
        }
    }

    // xl/xh (or x in nominal mode) for s in (t, t + steps]; the state at t
    // enters the first step as a constant.
    void declare_states() {
        auto& m = out_.model;
        const std::size_t n = sys_.states();
        const int copies = p_.config.nominal ? 1 : 2;
        states_.assign(copies, std::vector<std::vector<std::size_t>>(out_.steps + 1));
        for (std::size_t k = 1; k <= out_.steps; ++k) {
            const std::size_t s = p_.t + k;
            for (int c = 0; c < copies; ++c) {
                const std::string prefix = p_.config.nominal ? "x" : (c == 0 ? "xl" : "xh");
                for (std::size_t i = 0; i < n; ++i) {
                    states_[c][k].push_back(m.add_variable(prefix + std::to_string(i) + "_" + std::to_string(s),
                                                           reach_lo_[k][i] - 1.0, reach_hi_[k][i] + 1.0));
                }
            }
        }
        for (std::size_t k = 0; k < out_.steps; ++k) {
            const std::size_t s = p_.t + k;
            for (int c = 0; c < copies; ++c) {
                const std::vector<double>& x0 = c == 0 ? p_.state.lo : p_.state.hi;
                const std::vector<double>& w =
                    p_.config.nominal ? std::vector<double>(n, 0.0) : (c == 0 ? sys_.w_lo() : sys_.w_hi());
                for (std::size_t i = 0; i < n; ++i) {
                    std::vector<milp_term> terms{{states_[c][k + 1][i], 1.0}};
                    double rhs = w[i];
                    for (std::size_t j = 0; j < n; ++j) {
                        const double a = sys_.A()[i][j];
                        if (a == 0.0) continue;
                        if (k == 0) {
                            rhs += a * x0[j];
                        } else {
                            terms.push_back({states_[c][k][j], -a});
                        }
                    }
                    for (std::size_t q = 0; q < sys_.inputs(); ++q) {
                        if (sys_.B()[i][q] != 0.0) terms.push_back({out_.u[k][q], -sys_.B()[i][q]});
                    }
                    const std::string prefix = p_.config.nominal ? "dyn" : (c == 0 ? "dynl" : "dynh");
                    m.add_constraint(prefix + std::to_string(i) + "_" + std::to_string(s + 1), std::move(terms),
                                     row_sense::eq, rhs);
                }
            }
        }
    }

    // Corners of a * y over a in coefficient, y in [y_lo, y_hi], after
    // discarding the ones that can never be the minimum.
    std::vector<encoding::linear> corners(const interval& a, std::size_t s, std::size_t state) {
        std::vector<encoding::linear> out;
        const auto var_or_const = [&](bool upper, double coef) {
            encoding::linear l;
            if (s <= p_.t) {
                const interval y = output_at(s, state);
                l.constant = coef * (upper ? y.hi() : y.lo());
            } else {
                const std::size_t k = s - p_.t;
                const std::size_t copy = p_.config.nominal ? 0 : (upper ? 1 : 0);
                l.terms.push_back({states_[copy][k][state], coef});
            }
            return l;
        };
        if (a.degenerate()) {
            out.push_back(var_or_const(a.lo() < 0.0, a.lo()));
            return out;
        }
        const interval y = s <= p_.t ? output_at(s, state) : reach(s, state);
        if (a.lo() >= 0.0) {
            // min is at y_lo; which coefficient wins depends on y_lo's sign
            if (y.lo() >= 0.0) {
                out.push_back(var_or_const(false, a.lo()));
            } else if (y.hi() <= 0.0) {
                out.push_back(var_or_const(false, a.hi()));
            } else {
                out.push_back(var_or_const(false, a.lo()));
                out.push_back(var_or_const(false, a.hi()));
            }
        } else if (a.hi() <= 0.0) {
            if (y.lo() >= 0.0) {
                out.push_back(var_or_const(true, a.lo()));
            } else if (y.hi() <= 0.0) {
                out.push_back(var_or_const(true, a.hi()));
            } else {
                out.push_back(var_or_const(true, a.lo()));
                out.push_back(var_or_const(true, a.hi()));
            }
        } else {
            out.push_back(var_or_const(true, a.lo()));
            out.push_back(var_or_const(false, a.hi()));
        }
        // constant corners collapse to their minimum
        if (std::all_of(out.begin(), out.end(), [](const auto& l) { return l.terms.empty(); })) {
            double v = inf;
            for (const auto& l : out) v = std::min(v, l.constant);
            return {encoding::linear{{}, v}};
        }
        return out;
    }

    void need(const formula& f, std::size_t s, std::set<std::pair<std::size_t, std::size_t>>& out) {
        if (!visited_.insert({f.id(), s}).second) return;
        switch (f.kind()) {
        case formula_kind::pred: {
            const void* id = canonical(f);
            std::size_t k = 0;
            while (canon_[k].second != id) ++k;
            out.insert({s, k});
            return;
        }
        case formula_kind::always:
        case formula_kind::eventually:
            for (std::size_t u = s + f.t1(); u <= s + f.t2(); ++u) need(f.args()[0], u, out);
            return;
        case formula_kind::until:
            for (std::size_t u = s; u <= s + f.t2(); ++u) {
                need(f.args()[0], u, out);
                need(f.args()[1], u, out);
            }
            return;
        default:
            for (const auto& a : f.args()) need(a, s, out);
        }
    }

    literal leaf(const pred_info& info, std::size_t s) {
        auto& m = out_.model;
        const std::string tag = std::to_string(info.id) + "_" + std::to_string(s);

        encoding::leaf audit{0, {}, info.offset.lo(), p_.mode == encode_mode::evaluate};
        std::vector<milp_term> row;
        double constant = info.offset.lo();
        for (std::size_t j = 0; j < info.coeffs.size(); ++j) {
            auto cs = corners(info.coeffs[j], s, info.state[j]);
            audit.terms.push_back(cs);
            if (cs.size() == 1) {
                constant += cs[0].constant;
                row.insert(row.end(), cs[0].terms.begin(), cs[0].terms.end());
                continue;
            }
            const std::string mtag = tag + "_" + std::to_string(j);
            // min over corners lies between the smallest corner lower bound
            // and the smallest corner upper bound
            double m_lo = inf, m_hi = inf;
            for (const auto& c : cs) {
                m_lo = std::min(m_lo, bound_of(c, false));
                m_hi = std::min(m_hi, bound_of(c, true));
            }
            const std::size_t mv = m.add_variable("m" + mtag, m_lo, m_hi);
            hypographs_.emplace_back(mv, cs);
            row.push_back({mv, 1.0});
            std::vector<std::size_t> sel;
            for (std::size_t k = 0; k < cs.size(); ++k) {
                // m <= corner
                std::vector<milp_term> le{{mv, 1.0}};
                for (const auto& t : cs[k].terms) le.push_back({t.var, -t.coef});
                m.add_constraint("hyp" + mtag + "_" + std::to_string(k), std::move(le), row_sense::le,
                                 cs[k].constant);
                if (p_.config.corners == corner_encoding::selection) {
                    const std::size_t sv = m.add_binary("s" + mtag + "_" + std::to_string(k));
                    sel.push_back(sv);
                    // m >= corner - M (1 - s)
                    std::vector<milp_term> ge{{mv, 1.0}, {sv, -M_}};
                    for (const auto& t : cs[k].terms) ge.push_back({t.var, -t.coef});
                    m.add_constraint("sel" + mtag + "_" + std::to_string(k), std::move(ge), row_sense::ge,
                                     cs[k].constant - M_);
                    out_.selections.push_back({sv, k, cs});
                }
            }
            if (!sel.empty()) {
                std::vector<milp_term> one;
                for (std::size_t sv : sel) one.push_back({sv, 1.0});
                m.add_constraint("pick" + mtag, std::move(one), row_sense::eq, 1.0);
            }
        }
        if (row.empty() && p_.mode == encode_mode::synthesize) return literal::constant(constant >= 0.0);

        // margin + M (1 - z) >= rho
        const double need = p_.mode == encode_mode::synthesize ? p_.config.margin : 0.0;
        const double M = leaf_big_m(row, constant, need);
        const std::size_t z = m.add_binary("z" + tag);
        row.push_back({z, -M});
        if (out_.rho) row.push_back({*out_.rho, -1.0});
        m.add_constraint("pred" + tag, std::move(row), row_sense::ge, need - M - constant);
        audit.z = z;
        audit.big_m = M;
        leaf_of_.emplace(z, out_.leaves.size());
        out_.leaves.push_back(std::move(audit));
        return literal::of(z);
    }

    [[nodiscard]] double bound_of(const encoding::linear& l, bool upper) const {
        const auto& vars = out_.model.variables();
        double v = l.constant;
        for (const auto& t : l.terms) v += t.coef * ((t.coef > 0.0) == upper ? vars[t.var].hi : vars[t.var].lo);
        return v;
    }

    // Smallest constant that deactivates a leaf row: the row's lowest value
    // over the variable bounds, plus one unit of slack. A user-supplied M is
    // used as given.
    double leaf_big_m(const std::vector<milp_term>& row, double constant, double need) const {
        if (p_.config.big_m) return M_;
        const auto& vars = out_.model.variables();
        double lowest = constant;
        for (const auto& t : row) lowest += t.coef * (t.coef > 0.0 ? vars[t.var].lo : vars[t.var].hi);
        const double rho_hi = out_.rho ? vars[*out_.rho].hi : 0.0;
        return std::max(0.0, need + rho_hi - lowest) + 1.0;
    }

    // With the inputs fixed every state is determined, so each leaf margin is
    // a number and the best robustness is the min/max of margins through the
    // and/or gates. Thresholding at that value gives a feasible assignment.
    void evaluation_start(const literal& root) {
        const auto& vars = out_.model.variables();
        std::vector<double> x(vars.size());
        for (std::size_t j = 0; j < vars.size(); ++j) x[j] = std::isfinite(vars[j].lo) ? vars[j].lo : 0.0;
        const std::size_t n = sys_.states();
        for (std::size_t c = 0; c < states_.size(); ++c) {
            const bool upper = c == 1;
            const std::vector<double>& w =
                p_.config.nominal ? std::vector<double>(n, 0.0) : (upper ? sys_.w_hi() : sys_.w_lo());
            std::vector<double> cur = upper ? p_.state.hi : p_.state.lo;
            for (std::size_t k = 0; k < out_.steps; ++k) {
                std::vector<double> next = w;
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < n; ++j) next[i] += sys_.A()[i][j] * cur[j];
                    for (std::size_t q = 0; q < sys_.inputs(); ++q) next[i] += sys_.B()[i][q] * x[out_.u[k][q]];
                }
                for (std::size_t i = 0; i < n; ++i) x[states_[c][k + 1][i]] = next[i];
                cur = std::move(next);
            }
        }
        for (const auto& [mv, cs] : hypographs_) {
            double v = inf;
            for (const auto& c : cs) v = std::min(v, c.value(x));
            x[mv] = v;
        }
        // Selection groups are stored consecutively, corner 0 first; pick the
        // first corner attaining the min.
        bool picked = false;
        for (const auto& sel : out_.selections) {
            if (sel.corner == 0) picked = false;
            double best = inf;
            for (const auto& c : sel.corners) best = std::min(best, c.value(x));
            x[sel.s] = !picked && sel.corners[sel.corner].value(x) == best ? 1.0 : 0.0;
            picked = picked || x[sel.s] == 1.0;
        }
        std::map<std::size_t, double> value;
        const std::function<double(std::size_t)> eval = [&](std::size_t v) -> double {
            if (auto it = value.find(v); it != value.end()) return it->second;
            double r;
            if (auto l = leaf_of_.find(v); l != leaf_of_.end()) {
                const auto& leaf = out_.leaves[l->second];
                r = leaf.constant;
                for (const auto& cs : leaf.terms) {
                    double t = inf;
                    for (const auto& c : cs) t = std::min(t, c.value(x));
                    r += t;
                }
            } else {
                const auto& [conj, kids] = gates_.at(v);
                r = conj ? inf : -inf;
                for (std::size_t k : kids) r = conj ? std::min(r, eval(k)) : std::max(r, eval(k));
            }
            return value[v] = r;
        };
        if (root.is_const) return;
        const double best = eval(root.var);
        x[*out_.rho] = best;
        for (const auto& [v, r] : value) x[v] = r >= best ? 1.0 : 0.0;
        out_.start = std::move(x);
    }

    literal combine(bool conj, const std::vector<literal>& kids, const std::string& name) {
        std::vector<std::size_t> vars;
        for (const auto& k : kids) {
            if (k.is_const) {
                if (conj && !k.value) return literal::constant(false);
                if (!conj && k.value) return literal::constant(true);
            } else if (std::find(vars.begin(), vars.end(), k.var) == vars.end()) {
                vars.push_back(k.var);
            }
        }
        if (vars.empty()) return literal::constant(conj);
        if (vars.size() == 1) return literal::of(vars[0]);
        auto& m = out_.model;
        const std::size_t z = m.add_variable(name, 0.0, 1.0);
        gates_.emplace(z, std::make_pair(conj, vars));
        if (conj) {
            for (std::size_t k = 0; k < vars.size(); ++k) {
                m.add_constraint("and" + name.substr(1) + "_" + std::to_string(k), {{z, 1.0}, {vars[k], -1.0}},
                                 row_sense::le, 0.0);
            }
        } else {
            std::vector<milp_term> row{{z, 1.0}};
            for (std::size_t v : vars) row.push_back({v, -1.0});
            m.add_constraint("or" + name.substr(1), std::move(row), row_sense::le, 0.0);
        }
        return literal::of(z);
    }

    literal node(const formula& f, std::size_t s) {
        const void* id = f.kind() == formula_kind::pred ? canonical(f) : f.id();
        const auto key = std::make_pair(id, s);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        const std::string name = "n" + std::to_string(node_ids_.emplace(id, node_ids_.size()).first->second) +
                                 "_" + std::to_string(s);
        literal out = literal::constant(false);
        switch (f.kind()) {
        case formula_kind::pred:
            out = leaf(preds_.at(id), s);
            break;
        case formula_kind::negation:
            throw not_pnf("negation above a predicate");
        case formula_kind::conjunction:
        case formula_kind::disjunction: {
            std::vector<literal> kids;
            for (const auto& a : f.args()) kids.push_back(node(a, s));
            out = combine(f.kind() == formula_kind::conjunction, kids, name);
            break;
        }
        case formula_kind::always:
        case formula_kind::eventually: {
            std::vector<literal> kids;
            for (std::size_t u = s + f.t1(); u <= s + f.t2(); ++u) kids.push_back(node(f.args()[0], u));
            out = combine(f.kind() == formula_kind::always, kids, name);
            break;
        }
        case formula_kind::until: {
            const bool paper = p_.config.until == until_convention::paper;
            const formula& outer = paper ? f.args()[0] : f.args()[1];
            const formula& inner = paper ? f.args()[1] : f.args()[0];
            const std::size_t inner_start = paper ? s + f.t1() : s;
            std::vector<literal> alts;
            for (std::size_t u = s + f.t1(); u <= s + f.t2(); ++u) {
                std::vector<literal> parts{node(outer, u)};
                for (std::size_t v = inner_start; v <= u; ++v) parts.push_back(node(inner, v));
                alts.push_back(combine(true, parts, name + "_" + std::to_string(u)));
            }
            out = combine(false, alts, name);
            break;
        }
        }
        memo_.emplace(key, out);
        return out;
    }

    void add_input_objective() {
        auto& m = out_.model;
        if (out_.steps == 0) return;
        for (std::size_t q = 0; q < sys_.inputs(); ++q) {
            const double bound = std::max(std::fabs(sys_.u_lo()[q]), std::fabs(sys_.u_hi()[q]));
            const std::size_t a = m.add_variable("abs_u" + std::to_string(q), 0.0, bound);
            const std::size_t u = out_.u[0][q];
            m.add_constraint("abs_pos" + std::to_string(q), {{a, 1.0}, {u, -1.0}}, row_sense::ge, 0.0);
            m.add_constraint("abs_neg" + std::to_string(q), {{a, 1.0}, {u, 1.0}}, row_sense::ge, 0.0);
            m.set_objective(a, 1.0);
        }
    }

    const synthesis_problem& p_;
    const linear_system& sys_;
    formula spec_;
    std::size_t h_ = 0;
    double M_ = 0.0;
    encoding out_;
    std::map<const void*, pred_info> preds_;
    std::vector<std::pair<expr, const void*>> canon_;
    std::set<std::pair<const void*, std::size_t>> visited_;
    std::map<const void*, std::size_t> node_ids_;
    std::map<std::pair<const void*, std::size_t>, literal> memo_;
    std::vector<std::vector<double>> reach_lo_, reach_hi_;
    std::vector<std::vector<std::vector<std::size_t>>> states_;
    std::vector<std::pair<std::size_t, std::vector<encoding::linear>>> hypographs_;
    std::map<std::size_t, std::size_t> leaf_of_;
    std::map<std::size_t, std::pair<bool, std::vector<std::size_t>>> gates_;
};

} // namespace detail

inline encoding encode(const synthesis_problem& p) { return detail::encoder(p).run(); }

// Checks that no big-M row is pinned at its relaxed limit in x.
inline big_m_audit audit_big_m(const encoding& enc, const std::vector<double>& x, double tol = 1e-6) {
    big_m_audit out;
    const double M = enc.big_m;
    const auto min_of = [&](const std::vector<encoding::linear>& cs) {
        double v = inf;
        for (const auto& c : cs) v = std::min(v, c.value(x));
        return v;
    };
    for (const auto& l : enc.leaves) {
        if (x[l.z] > 0.5) continue;
        double margin = l.constant;
        for (const auto& cs : l.terms) margin += min_of(cs);
        if (l.has_rho && enc.rho) margin -= x[*enc.rho];
        const double gap = margin + l.big_m;
        out.tightest = std::min(out.tightest, gap);
        if (gap <= tol) ++out.binding;
    }
    for (const auto& s : enc.selections) {
        if (x[s.s] > 0.5) continue;
        const double gap = M - (s.corners[s.corner].value(x) - min_of(s.corners));
        out.tightest = std::min(out.tightest, gap);
        if (gap <= tol) ++out.binding;
    }
    out.ok = out.binding == 0;
    return out;
}

} // namespace istl

#endif
