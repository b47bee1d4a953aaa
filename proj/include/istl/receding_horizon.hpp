#ifndef ISTL_RECEDING_HORIZON_HPP
#define ISTL_RECEDING_HORIZON_HPP

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "istl/branch_and_bound.hpp"
#include "istl/embedding.hpp"
#include "istl/encode.hpp"
#include "istl/semantics.hpp"

namespace istl {

struct receding_config {
    synthesis_config synth;
    std::size_t steps = 119;
    std::uint64_t seed = 0;
    solve_options solver;
};

struct step_record {
    std::size_t t = 0;
    std::vector<double> u;
    interval rho;                // robustness of the planned embedding at t
    double window_rho_lo = 0.0;  // smallest lower bound over the constraint window
    std::size_t window_lo = 0;
    std::size_t window_hi = 0;
    double seconds = 0.0;
    std::size_t nodes = 0;
    std::size_t binaries = 0;
    std::size_t variables = 0;
    std::size_t constraints = 0;
    double big_m = 0.0;
    big_m_audit audit;
    std::vector<std::vector<double>> plan;  // u(t), u(t+1), ...
};

struct receding_result {
    std::vector<std::vector<double>> states;  // x(0) .. x(T)
    std::vector<std::vector<double>> inputs;  // u(0) .. u(T-1)
    std::vector<step_record> log;
    robustness_trace rho;
};

namespace detail {

inline interval_trace degenerate_outputs(const linear_system& sys, const std::vector<std::vector<double>>& xs,
                                         std::size_t count) {
    std::vector<interval_vector> samples;
    for (std::size_t s = 0; s < count; ++s) {
        interval_vector row;
        for (const auto& o : sys.outputs()) row.emplace_back(xs[s][o.second]);
        samples.push_back(std::move(row));
    }
    return interval_trace(sys.output_vars(), std::move(samples));
}

inline std::vector<double> clamp_input(const linear_system& sys, std::vector<double> u) {
    for (std::size_t q = 0; q < u.size(); ++q) u[q] = std::clamp(u[q], sys.u_lo()[q], sys.u_hi()[q]);
    return u;
}

// Recorded outputs up to t followed by the embedding of the plan from x(t).
inline interval_trace planned_trace(const linear_system& sys, const std::vector<std::vector<double>>& xs,
                                    std::size_t t, const std::vector<std::vector<double>>& plan) {
    std::vector<interval_vector> samples;
    for (std::size_t s = 0; s < t; ++s) {
        interval_vector row;
        for (const auto& o : sys.outputs()) row.emplace_back(xs[s][o.second]);
        samples.push_back(std::move(row));
    }
    for (const auto& st : embedding_states(sys, embedding_state::degenerate(xs[t]), plan)) {
        samples.push_back(project_outputs(sys, st));
    }
    return interval_trace(sys.output_vars(), std::move(samples));
}

// Completes a fixed input plan to a full assignment of the step model, or
// returns nothing when the plan violates the model or no completion turns up
// within a small node budget.
inline std::vector<double> complete_plan(const linear_system& sys, const encoding& enc,
                                         const std::vector<std::vector<double>>& plan, solve_options opts) {
    opts.node_limit = 100;
    milp_model m = enc.model;
    for (std::size_t k = 0; k < enc.u.size(); ++k) {
        const auto u = clamp_input(sys, k < plan.size() ? plan[k] : std::vector<double>(sys.inputs(), 0.0));
        for (std::size_t q = 0; q < u.size(); ++q) m.fix(enc.u[k][q], u[q]);
    }
    auto res = solve(m, opts);
    return std::move(res.x);
}

} // namespace detail

// Closed loop: at each step encode from the measured state, solve, apply the
// first input, and advance the true dynamics under a sampled disturbance.
inline receding_result receding_horizon(const linear_system& sys, const formula& spec, std::vector<double> x0,
                                        const receding_config& cfg,
                                        const std::function<void(std::size_t, const encoding&)>& on_model = {},
                                        const std::function<void(const step_record&)>& on_step = {}) {
    std::mt19937_64 rng(cfg.seed);
    receding_result out;
    out.states.push_back(std::move(x0));
    const monitor_options mon{cfg.synth.until};
    for (std::size_t t = 0; t < cfg.steps; ++t) {
        const synthesis_problem p{&sys,
                                  spec,
                                  cfg.synth,
                                  t,
                                  detail::degenerate_outputs(sys, out.states, t + 1),
                                  embedding_state::degenerate(out.states[t]),
                                  encode_mode::synthesize,
                                  {}};

        const auto start = std::chrono::steady_clock::now();
        encoding enc = encode(p);
        if (on_model) on_model(t, enc);
        if (enc.trivially_infeasible) throw step_infeasible(t, enc.window_lo, enc.window_hi);
        // Warm start: the previous plan shifted by one step stays feasible for
        // every window the previous step covered, so it usually seeds a good
        // incumbent.
        solve_options opts = cfg.solver;
        if (!out.log.empty()) {
            const auto& prev = out.log.back().plan;
            opts.start = detail::complete_plan(sys, enc, {prev.begin() + 1, prev.end()}, cfg.solver);
        }
        const solve_result res = solve(enc.model, opts);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (res.status == solve_status::infeasible) throw step_infeasible(t, enc.window_lo, enc.window_hi);
        if (res.status == solve_status::timed_out) {
            throw solver_timeout("step " + std::to_string(t) + " exceeded the solver time limit");
        }
        if (res.status != solve_status::optimal) {
            throw numerical_failure("step " + std::to_string(t) + ": " + to_string(res.status));
        }

        step_record rec;
        rec.t = t;
        rec.window_lo = enc.window_lo;
        rec.window_hi = enc.window_hi;
        rec.seconds = seconds;
        rec.nodes = res.nodes;
        rec.binaries = enc.model.num_binaries();
        rec.variables = enc.model.variables().size();
        rec.constraints = enc.model.constraints().size();
        rec.big_m = enc.big_m;
        rec.audit = audit_big_m(enc, res.x);
        for (const auto& uk : enc.u) {
            std::vector<double> u;
            for (std::size_t j : uk) u.push_back(res.x[j]);
            rec.plan.push_back(detail::clamp_input(sys, std::move(u)));
        }
        rec.u = rec.plan.front();

        const auto rho = monitor(spec, detail::planned_trace(sys, out.states, t, rec.plan), mon);
        rec.rho = rho[t];
        rec.window_rho_lo = inf;
        for (std::size_t tau = enc.window_lo; tau <= enc.window_hi; ++tau) {
            rec.window_rho_lo = std::min(rec.window_rho_lo, rho[tau].lo());
        }

        out.inputs.push_back(rec.u);
        out.states.push_back(step_true(sys, out.states[t], rec.u, rng));
        out.rho.values.push_back(rec.rho);
        if (on_step) on_step(rec);
        out.log.push_back(std::move(rec));
    }
    return out;
}

struct monte_carlo_report {
    std::size_t realizations = 0;
    std::size_t checks = 0;
    std::size_t violations = 0;
    double min_robustness = inf;
};

// Post-hoc realizations of a closed-loop run. Each realization draws the
// predicate parameters once, then
//   - checks the recorded closed-loop outputs at every evaluable step, and
//   - replays every step's plan from the recorded state under freshly drawn
//     disturbances, checking the constraint window of that step.
inline monte_carlo_report monte_carlo_check(const linear_system& sys, const formula& spec,
                                            const receding_result& run, std::size_t realizations,
                                            std::uint64_t seed, until_convention until = until_convention::paper) {
    std::mt19937_64 rng(seed);
    monte_carlo_report rep;
    rep.realizations = realizations;
    const monitor_options mon{until};
    const trace recorded = outputs_of(sys, run.states);
    const std::size_t h = horizon(spec);
    const auto record = [&](double r) {
        ++rep.checks;
        rep.min_robustness = std::min(rep.min_robustness, r);
        if (r < 0.0) ++rep.violations;
    };
    for (std::size_t k = 0; k < realizations; ++k) {
        const formula phi = sample_realization(spec, rng);
        if (recorded.length() > h) {
            for (double r : monitor_point(phi, recorded, mon)) record(r);
        }
        for (const auto& step : run.log) {
            auto xs = sample_states(sys, run.states[step.t], step.plan, rng);
            std::vector<std::vector<double>> all(run.states.begin(), run.states.begin() + static_cast<std::ptrdiff_t>(step.t));
            all.insert(all.end(), xs.begin(), xs.end());
            const auto rho = monitor_point(phi, outputs_of(sys, all), mon);
            for (std::size_t tau = step.window_lo; tau <= step.window_hi; ++tau) record(rho[tau]);
        }
    }
    return rep;
}

} // namespace istl

#endif
