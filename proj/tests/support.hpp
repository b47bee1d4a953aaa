// Random formulas, traces and small MILPs shared by the unit tests and the
// acceptance runner.
#ifndef ISTL_TESTS_SUPPORT_HPP
#define ISTL_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "istl/istl.hpp"

namespace istl::testkit {

using rng_t = std::mt19937_64;

inline double uniform(rng_t& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline std::size_t pick(rng_t& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}
inline bool coin(rng_t& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

inline interval random_interval(rng_t& rng, double lo, double hi, double max_width) {
    const double a = uniform(rng, lo, hi);
    if (coin(rng, 0.3)) return interval(a);
    return interval(a, a + uniform(rng, 0.0, max_width));
}

inline expr constant(rng_t& rng, double lo, double hi, bool exact) {
    return exact ? expr::constant(uniform(rng, lo, hi)) : expr::constant(random_interval(rng, lo, hi, 0.3));
}

// Predicate bodies over x and y. Mixes affine forms with the nonlinear
// primitives, all with interval constants unless exact is set.
inline expr random_predicate(rng_t& rng, bool exact = false) {
    const expr x = expr::var("x");
    const expr y = expr::var("y");
    const auto c = [&](double lo, double hi) { return constant(rng, lo, hi, exact); };
    switch (pick(rng, 0, 7)) {
    case 0: return c(0.5, 1.5) * x - c(-1.0, 1.0);
    case 1: return c(-1.0, 1.0) * x + c(-1.0, 1.0) * y + c(-0.5, 0.5);
    case 2: return c(0.5, 2.0) - expr::sqrt_of(expr::square_of(x) + expr::square_of(y));
    case 3: return expr::abs_of(x - c(-1.0, 1.0)) - c(0.0, 1.0);
    case 4: return expr::min_of({x, y}) - c(-1.0, 1.0);
    case 5: return c(-1.0, 1.0) - expr::max_of({x, -y});
    case 6: return x * y - c(-0.5, 0.5);
    default: return -x + c(-1.0, 1.0);
    }
}

// Nondecreasing in every variable, exact constants.
inline expr random_monotone_predicate(rng_t& rng) {
    const expr x = expr::var("x");
    const expr y = expr::var("y");
    const auto c = [&](double lo, double hi) { return expr::constant(uniform(rng, lo, hi)); };
    switch (pick(rng, 0, 4)) {
    case 0: return c(0.2, 2.0) * x - c(-1.0, 1.0);
    case 1: return c(0.2, 2.0) * x + c(0.2, 2.0) * y - c(-1.0, 1.0);
    case 2: return expr::min_of({x, y}) - c(-1.0, 1.0);
    case 3: return expr::max_of({x, c(0.1, 1.0) * y}) + c(-1.0, 1.0);
    default: return y - c(-1.0, 1.0);
    }
}

// Affine predicates over y only, as synthesis requires.
inline expr random_affine_predicate(rng_t& rng) {
    const expr y = expr::var("y");
    const auto c = [&](double lo, double hi) { return expr::constant(random_interval(rng, lo, hi, 0.05)); };
    if (coin(rng)) return c(0.9, 1.1) * y - c(-0.5, 0.8);
    return c(0.3, 1.2) - c(0.9, 1.1) * y;
}

struct formula_options {
    std::size_t depth = 4;
    std::size_t max_bound = 5;
    bool negation = true;
    bool until = true;
    // Never put a negation above an Until.
    bool negation_free_until = false;
    std::function<expr(rng_t&)> predicate = [](rng_t& r) { return random_predicate(r); };
};

inline formula random_formula(rng_t& rng, const formula_options& o, std::size_t depth, bool under_negation = false) {
    if (depth <= 1 || coin(rng, 0.2)) return formula::pred(o.predicate(rng));
    const auto sub = [&](bool neg) { return random_formula(rng, o, depth - 1, under_negation || neg); };
    const auto bounds = [&](std::size_t& t1, std::size_t& t2) {
        t1 = pick(rng, 0, o.max_bound / 2);
        t2 = t1 + pick(rng, 0, o.max_bound - t1);
    };
    std::size_t t1 = 0, t2 = 0;
    for (;;) {
        switch (pick(rng, 0, 6)) {
        case 0:
            if (!o.negation) continue;
            return formula::negation(sub(true));
        case 1: return formula::conjunction({sub(false), sub(false)});
        case 2: return formula::disjunction({sub(false), sub(false)});
        case 3: bounds(t1, t2); return formula::always(sub(false), t1, t2);
        case 4: bounds(t1, t2); return formula::eventually(sub(false), t1, t2);
        case 5:
            if (!o.until || (o.negation_free_until && under_negation)) continue;
            bounds(t1, t2);
            return formula::until(sub(false), sub(false), t1, t2);
        default:
            return formula::conjunction({sub(false), sub(false), sub(false)});
        }
    }
}

inline formula random_formula(rng_t& rng, const formula_options& o = {}) { return random_formula(rng, o, o.depth); }

inline trace random_trace(rng_t& rng, std::size_t T, double lo = -2.0, double hi = 2.0) {
    std::vector<std::vector<double>> rows;
    for (std::size_t t = 0; t < T; ++t) rows.push_back({uniform(rng, lo, hi), uniform(rng, lo, hi)});
    return trace({"x", "y"}, std::move(rows));
}

inline interval_trace random_interval_trace(rng_t& rng, std::size_t T, double max_width = 0.5) {
    std::vector<interval_vector> rows;
    for (std::size_t t = 0; t < T; ++t) {
        rows.push_back({random_interval(rng, -2.0, 2.0, max_width), random_interval(rng, -2.0, 2.0, max_width)});
    }
    return interval_trace({"x", "y"}, std::move(rows));
}

inline trace sample_inside(rng_t& rng, const interval_trace& tr) {
    std::vector<std::vector<double>> rows;
    for (std::size_t t = 0; t < tr.length(); ++t) {
        std::vector<double> row;
        for (const auto& iv : tr.at(t)) row.push_back(iv.degenerate() ? iv.lo() : uniform(rng, iv.lo(), iv.hi()));
        rows.push_back(std::move(row));
    }
    return trace(tr.vars(), std::move(rows));
}

// Lower or upper corner of an interval trace.
inline trace corner(const interval_trace& tr, bool upper) {
    std::vector<std::vector<double>> rows;
    for (std::size_t t = 0; t < tr.length(); ++t) {
        std::vector<double> row;
        for (const auto& iv : tr.at(t)) row.push_back(upper ? iv.hi() : iv.lo());
        rows.push_back(std::move(row));
    }
    return trace(tr.vars(), std::move(rows));
}

// Random MILP with a bounded feasible region, n variables of which the first
// nb are binary.
inline milp_model random_milp(rng_t& rng, std::size_t n, std::size_t nb, std::size_t m) {
    milp_model model;
    for (std::size_t j = 0; j < n; ++j) {
        if (j < nb) {
            model.add_binary("b" + std::to_string(j));
        } else {
            model.add_variable("c" + std::to_string(j), uniform(rng, -3.0, 0.0), uniform(rng, 0.5, 3.0));
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<milp_term> terms;
        for (std::size_t j = 0; j < n; ++j) {
            if (coin(rng, 0.6)) terms.push_back({j, std::round(uniform(rng, -4.0, 4.0) * 4.0) / 4.0});
        }
        if (terms.empty()) continue;
        const row_sense sense = coin(rng, 0.1) ? row_sense::eq : coin(rng) ? row_sense::le : row_sense::ge;
        model.add_constraint("r" + std::to_string(i), std::move(terms), sense, uniform(rng, -2.0, 3.0));
    }
    for (std::size_t j = 0; j < n; ++j) model.set_objective(j, std::round(uniform(rng, -3.0, 3.0) * 4.0) / 4.0);
    return model;
}

// Exact LP optimum of a small bounded LP by vertex enumeration: every vertex
// is the solution of tight constraints drawn from rows and variable bounds,
// one per free variable. Fixed variables are substituted out first so that
// enumeration only runs over the free ones. Returns +inf when infeasible.
inline double lp_by_vertices(const milp_model& m, double tol = 1e-9) {
    const auto& vars = m.variables();
    std::vector<std::size_t> free;
    std::vector<double> base(vars.size(), 0.0);
    for (std::size_t j = 0; j < vars.size(); ++j) {
        if (vars[j].lo == vars[j].hi) {
            base[j] = vars[j].lo;
        } else {
            free.push_back(j);
        }
    }
    const std::size_t n = free.size();
    if (n == 0) return m.max_violation(base) > tol ? std::numeric_limits<double>::infinity() : m.evaluate_objective(base);
    struct plane {
        std::vector<double> a;
        double b;
    };
    std::vector<plane> planes;
    for (const auto& r : m.constraints()) {
        plane p{std::vector<double>(n, 0.0), r.rhs};
        for (const auto& t : r.terms) {
            const auto it = std::find(free.begin(), free.end(), t.var);
            if (it == free.end()) {
                p.b -= t.coef * base[t.var];
            } else {
                p.a[static_cast<std::size_t>(it - free.begin())] += t.coef;
            }
        }
        planes.push_back(p);
    }
    for (std::size_t k = 0; k < n; ++k) {
        for (double bound : {vars[free[k]].lo, vars[free[k]].hi}) {
            plane p{std::vector<double>(n, 0.0), bound};
            p.a[k] = 1.0;
            planes.push_back(p);
        }
    }
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> choice(n);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t k, std::size_t start) {
        if (k == n) {
            std::vector<std::vector<double>> M(n, std::vector<double>(n + 1));
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) M[i][j] = planes[choice[i]].a[j];
                M[i][n] = planes[choice[i]].b;
            }
            for (std::size_t c = 0; c < n; ++c) {
                std::size_t p = c;
                for (std::size_t i = c + 1; i < n; ++i) {
                    if (std::fabs(M[i][c]) > std::fabs(M[p][c])) p = i;
                }
                if (std::fabs(M[p][c]) < 1e-10) return;
                std::swap(M[p], M[c]);
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == c) continue;
                    const double f = M[i][c] / M[c][c];
                    for (std::size_t j = c; j <= n; ++j) M[i][j] -= f * M[c][j];
                }
            }
            std::vector<double> x = base;
            for (std::size_t i = 0; i < n; ++i) x[free[i]] = M[i][n] / M[i][i];
            for (std::size_t j : free) {
                if (x[j] < vars[j].lo - tol || x[j] > vars[j].hi + tol) return;
            }
            if (m.max_violation(x) > tol) return;
            best = std::min(best, m.evaluate_objective(x));
            return;
        }
        for (std::size_t i = start; i < planes.size(); ++i) {
            choice[k] = i;
            rec(k + 1, i + 1);
        }
    };
    rec(0, 0);
    return best;
}

// Exhaustive reference for a MILP: enumerate every binary assignment and solve
// the remaining LP with lp_solver.
inline double milp_by_enumeration(const milp_model& m, const std::function<double(const milp_model&)>& lp_solver) {
    std::vector<std::size_t> bins;
    for (std::size_t j = 0; j < m.variables().size(); ++j) {
        if (m.variables()[j].type == var_type::binary) bins.push_back(j);
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t mask = 0; mask < (std::size_t{1} << bins.size()); ++mask) {
        milp_model sub = m;
        for (std::size_t k = 0; k < bins.size(); ++k) sub.fix(bins[k], (mask >> k) & 1U ? 1.0 : 0.0);
        best = std::min(best, lp_solver(sub));
    }
    return best;
}

// LP optimum with the internal simplex, +inf when infeasible.
inline double lp_by_simplex(const milp_model& m) {
    dual_simplex lp(m);
    const auto st = lp.solve();
    if (st == lp_status::infeasible) return std::numeric_limits<double>::infinity();
    if (st != lp_status::optimal) return std::numeric_limits<double>::quiet_NaN();
    return lp.objective();
}

} // namespace istl::testkit

#endif
