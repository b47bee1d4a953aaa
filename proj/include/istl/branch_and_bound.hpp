#ifndef ISTL_BRANCH_AND_BOUND_HPP
#define ISTL_BRANCH_AND_BOUND_HPP

#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "istl/milp.hpp"
#include "istl/simplex.hpp"

namespace istl {

enum class solve_status { optimal, infeasible, unbounded, timed_out };

inline const char* to_string(solve_status s) {
    switch (s) {
    case solve_status::optimal: return "Optimal";
    case solve_status::infeasible: return "Infeasible";
    case solve_status::unbounded: return "Unbounded";
    case solve_status::timed_out: return "TimedOut";
    }
    return "?";
}

struct solve_options {
    std::optional<std::chrono::duration<double>> time_limit;
    std::size_t node_limit = 0;  // 0 means unlimited; hitting it reports timed_out
    double integrality_tol = 1e-6;
    double prune_tol = 1e-9;
    // Run a rounding dive at every k-th node (0 disables), more often while
    // no incumbent exists.
    std::size_t dive_period = 20;
    std::size_t dive_period_with_incumbent = 100;
    // Optional assignment to seed the incumbent; ignored unless it is
    // feasible and integral.
    std::vector<double> start;
    simplex_options lp;
};

struct solve_result {
    solve_status status = solve_status::infeasible;
    // Assignment and objective of the optimum, or of the best incumbent when
    // timed out (empty if none was found).
    std::vector<double> x;
    double objective = inf;
    std::size_t nodes = 0;
    std::size_t lp_iterations = 0;

    [[nodiscard]] bool has_solution() const noexcept { return !x.empty(); }
};

namespace detail {

struct bb_node {
    double bound;
    std::size_t depth;
    std::size_t seq;
    std::vector<std::pair<std::size_t, double>> fixes;  // binary var -> 0 or 1
};

// Best bound first; among equal bounds the deeper node, then the newer one.
struct bb_order {
    bool operator()(const bb_node& a, const bb_node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.seq < b.seq;
    }
};

// Activity-based bound tightening over rows written as a'x <= b. Only the
// binaries it fixes reach the LP; continuous bounds tightened here stay
// local, so round-off in the derivation cannot cut off a feasible point.
class propagator {
public:
    explicit propagator(const milp_model& m) : vars_(m.variables()) {
        for (const auto& r : m.constraints()) {
            if (r.sense != row_sense::ge) rows_.push_back({r.terms, r.rhs});
            if (r.sense != row_sense::le) {
                row neg{r.terms, -r.rhs};
                for (auto& t : neg.terms) t.coef = -t.coef;
                rows_.push_back(std::move(neg));
            }
        }
        for (std::size_t j = 0; j < m.objective().size(); ++j) {
            if (m.objective()[j] != 0.0) cutoff_.terms.push_back({j, m.objective()[j]});
        }
        constant_ = m.objective_constant();
    }

    // Tightens lo/hi in place; false when the node is infeasible, or cannot
    // beat the cutoff (objective below `cutoff`, if finite).
    bool run(std::vector<double>& lo, std::vector<double>& hi, double cutoff) {
        cutoff_.rhs = cutoff - constant_;
        const bool use_cutoff = std::isfinite(cutoff) && !cutoff_.terms.empty();
        for (int pass = 0; pass < 20; ++pass) {
            bool changed = false;
            for (const auto& r : rows_) {
                if (!tighten(r, lo, hi, changed)) return false;
            }
            if (use_cutoff && !tighten(cutoff_, lo, hi, changed)) return false;
            if (!changed) break;
        }
        return true;
    }

private:
    struct row {
        std::vector<milp_term> terms;
        double rhs;
    };

    bool tighten(const row& r, std::vector<double>& lo, std::vector<double>& hi, bool& changed) const {
        double least = 0.0;
        std::size_t unbounded = 0, which = 0;
        for (const auto& t : r.terms) {
            const double v = t.coef > 0.0 ? t.coef * lo[t.var] : t.coef * hi[t.var];
            if (std::isinf(v)) {
                ++unbounded;
                which = t.var;
            } else {
                least += v;
            }
        }
        if (unbounded > 1) return true;
        const double slack = 1e-9 * (1.0 + std::fabs(r.rhs) + std::fabs(least));
        if (unbounded == 0 && least > r.rhs + 1e-6 * (1.0 + std::fabs(r.rhs))) return false;
        for (const auto& t : r.terms) {
            if (t.coef == 0.0) continue;
            double rest = least;
            if (unbounded == 1) {
                if (t.var != which) continue;
            } else {
                rest -= t.coef > 0.0 ? t.coef * lo[t.var] : t.coef * hi[t.var];
            }
            const double limit = (r.rhs - rest) / t.coef;
            const double pad = slack / std::fabs(t.coef);
            const bool binary = vars_[t.var].type == var_type::binary;
            if (t.coef > 0.0) {
                double h = limit + pad;
                if (binary) h = h < 1.0 - 1e-6 ? std::floor(h + 1e-6) : hi[t.var];
                if (h < hi[t.var] - 1e-6 * (1.0 + std::fabs(h))) {
                    hi[t.var] = h;
                    changed = true;
                }
            } else {
                double l = limit - pad;
                if (binary) l = l > 1e-6 ? std::ceil(l - 1e-6) : lo[t.var];
                if (l > lo[t.var] + 1e-6 * (1.0 + std::fabs(l))) {
                    lo[t.var] = l;
                    changed = true;
                }
            }
            if (lo[t.var] > hi[t.var] + 1e-6 * (1.0 + std::fabs(hi[t.var]))) return false;
        }
        return true;
    }

    const std::vector<milp_variable>& vars_;
    std::vector<row> rows_;
    row cutoff_;
    double constant_ = 0.0;
};

} // namespace detail

// Exact branch and bound over the binaries. Node relaxations reuse one
// tableau: only binary bounds change between nodes. Each node first propagates
// its fixings and the incumbent cutoff through the rows.
inline solve_result solve(const milp_model& model, const solve_options& opts = {}) {
    using clock = std::chrono::steady_clock;
    std::optional<clock::time_point> deadline;
    if (opts.time_limit) {
        deadline = clock::now() + std::chrono::duration_cast<clock::duration>(*opts.time_limit);
    }
    const auto& vars = model.variables();
    std::vector<std::size_t> binaries;
    for (std::size_t j = 0; j < vars.size(); ++j) {
        if (vars[j].type == var_type::binary) binaries.push_back(j);
    }

    dual_simplex lp(model, opts.lp);
    solve_result out;
    std::priority_queue<detail::bb_node, std::vector<detail::bb_node>, detail::bb_order> open;
    std::size_t seq = 0;
    open.push({-inf, 0, seq++, {}});
    std::vector<std::pair<std::size_t, double>> applied;
    detail::propagator prop(model);
    std::vector<double> lo(vars.size()), hi(vars.size());

    const auto fractional = [&](const std::vector<double>& x, std::size_t j) {
        const double f = x[j] - std::floor(x[j]);
        return f > opts.integrality_tol && f < 1.0 - opts.integrality_tol;
    };
    const auto accept = [&](std::vector<double> x) {
        for (std::size_t j : binaries) x[j] = std::round(x[j]);
        const double v = model.evaluate_objective(x);
        if (!out.has_solution() || v < out.objective) {
            out.x = std::move(x);
            out.objective = v;
        }
    };

    if (opts.start.size() == vars.size()) {
        bool ok = model.max_violation(opts.start) <= 1e-7;
        for (std::size_t j : binaries) ok = ok && opts.start[j] == std::round(opts.start[j]);
        if (ok) accept(opts.start);
    }

    // Rounding dive from the current relaxation: repeatedly fix the binary
    // closest to integral, propagate, and flip it once if that turns out
    // infeasible. Finds incumbents long before plain best-first search would
    // reach a leaf. The caller restores the node's bounds afterwards.
    const auto dive = [&](std::vector<double> x, std::vector<double> dlo, std::vector<double> dhi) {
        std::vector<std::size_t> fixed;
        const auto cutoff = [&] { return out.has_solution() ? out.objective - opts.prune_tol : inf; };
        for (std::size_t step = 0; step < binaries.size(); ++step) {
            std::size_t pick = vars.size();
            double closest = 1.0;
            for (std::size_t j : binaries) {
                if (!fractional(x, j)) continue;
                const double d = std::min(x[j] - std::floor(x[j]), std::ceil(x[j]) - x[j]);
                if (d < closest) {
                    closest = d;
                    pick = j;
                }
            }
            if (pick == vars.size()) {
                accept(std::move(x));
                break;
            }
            bool moved = false;
            for (const double v : {std::round(x[pick]), 1.0 - std::round(x[pick])}) {
                auto tlo = dlo, thi = dhi;
                tlo[pick] = thi[pick] = v;
                if (!prop.run(tlo, thi, cutoff())) continue;
                std::vector<std::size_t> now;
                for (std::size_t j : binaries) {
                    if (tlo[j] == thi[j] && dlo[j] != dhi[j]) {
                        lp.set_bounds(j, tlo[j], thi[j]);
                        now.push_back(j);
                    }
                }
                if (lp.solve(deadline) == lp_status::optimal) {
                    fixed.insert(fixed.end(), now.begin(), now.end());
                    dlo = std::move(tlo);
                    dhi = std::move(thi);
                    moved = true;
                    break;
                }
                for (std::size_t j : now) lp.set_bounds(j, dlo[j], dhi[j]);
            }
            if (!moved) break;
            if (out.has_solution() && lp.objective() >= out.objective - opts.prune_tol) break;
            x = lp.primal();
        }
        for (std::size_t j : fixed) lp.set_bounds(j, vars[j].lo, vars[j].hi);
    };

    auto finish = [&](solve_status s) {
        out.status = s;
        out.lp_iterations = lp.iterations();
        return out;
    };

    while (!open.empty()) {
        detail::bb_node node = open.top();
        open.pop();
        if (out.has_solution() && node.bound >= out.objective - opts.prune_tol) break;
        if (deadline && clock::now() > *deadline) return finish(solve_status::timed_out);
        if (opts.node_limit > 0 && out.nodes >= opts.node_limit) return finish(solve_status::timed_out);

        for (const auto& [j, v] : applied) lp.set_bounds(j, vars[j].lo, vars[j].hi);
        applied.clear();
        ++out.nodes;
        for (std::size_t j = 0; j < vars.size(); ++j) {
            lo[j] = vars[j].lo;
            hi[j] = vars[j].hi;
        }
        for (const auto& [j, v] : node.fixes) lo[j] = hi[j] = v;
        if (!prop.run(lo, hi, out.has_solution() ? out.objective - opts.prune_tol : inf)) continue;
        for (std::size_t j : binaries) {
            if (lo[j] == hi[j] && vars[j].lo != vars[j].hi) {
                lp.set_bounds(j, lo[j], hi[j]);
                applied.emplace_back(j, lo[j]);
            }
        }

        const lp_status st = lp.solve(deadline);
        if (st == lp_status::timed_out) return finish(solve_status::timed_out);
        if (st == lp_status::infeasible) continue;
        if (st == lp_status::unbounded) {
            if (node.depth == 0) return finish(solve_status::unbounded);
            continue;
        }
        const double obj = lp.objective();
        if (out.has_solution() && obj >= out.objective - opts.prune_tol) continue;

        std::vector<double> x = lp.primal();
        // Lowest fractional index first; the encoder declares leaves in time order.
        std::size_t branch = vars.size();
        for (std::size_t j : binaries) {
            if (fractional(x, j)) {
                branch = j;
                break;
            }
        }
        if (branch == vars.size()) {
            accept(std::move(x));
            continue;
        }
        const std::size_t period = out.has_solution() ? opts.dive_period_with_incumbent : opts.dive_period;
        if (period > 0 && (out.nodes - 1) % period == 0) {
            dive(x, lo, hi);
            for (const auto& [j, v] : applied) lp.set_bounds(j, v, v);
            if (out.has_solution() && obj >= out.objective - opts.prune_tol) continue;
        }
        // Equal bound and depth: the later push pops first, so the
        // down-branch is pushed last.
        auto up = node.fixes;
        up.emplace_back(branch, 1.0);
        auto down = std::move(node.fixes);
        down.emplace_back(branch, 0.0);
        open.push({obj, node.depth + 1, seq++, std::move(up)});
        open.push({obj, node.depth + 1, seq++, std::move(down)});
    }
    return finish(out.has_solution() ? solve_status::optimal : solve_status::infeasible);
}

} // namespace istl

#endif
