#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace istl;
using istl::testkit::rng_t;

namespace {

linear_system double_integrator() {
    return load_system(std::string(ISTL_DATA_DIR) + "/double_integrator.json").sys;
}

const expr Y = expr::var("y");

synthesis_problem evaluate_problem(const linear_system& sys, const formula& f, std::vector<double> x0,
                                   std::vector<std::vector<double>> inputs, synthesis_config cfg = {}) {
    return {&sys,
            f,
            cfg,
            0,
            interval_trace(sys.output_vars(), {{interval(x0[0])}}),
            embedding_state::degenerate(x0),
            encode_mode::evaluate,
            std::move(inputs)};
}

// Lower robustness bound the monitor assigns to the embedding of the inputs.
double monitored_lo(const linear_system& sys, const formula& f, const std::vector<double>& x0,
                    const std::vector<std::vector<double>>& inputs) {
    return rho(f, simulate_embedding(sys, embedding_state::degenerate(x0), inputs), 0).lo();
}

double evaluate(const synthesis_problem& p) {
    const auto enc = encode(p);
    const auto res = solve(enc.model);
    EXPECT_EQ(res.status, solve_status::optimal);
    EXPECT_TRUE(audit_big_m(enc, res.x).ok);
    return res.x[*enc.rho];
}

formula affine_spec(rng_t& rng) {
    testkit::formula_options o;
    o.depth = 3;
    o.max_bound = 4;
    o.negation = false;
    o.predicate = testkit::random_affine_predicate;
    return testkit::random_formula(rng, o);
}

} // namespace

TEST(Encode, EvaluateMatchesMonitor) {
    const auto sys = double_integrator();
    rng_t rng(81);
    for (int k = 0; k < 40; ++k) {
        const auto f = affine_spec(rng);
        std::vector<std::vector<double>> us;
        for (std::size_t s = 0; s < horizon(f); ++s) us.push_back({testkit::uniform(rng, -1, 1)});
        const std::vector<double> x0{testkit::uniform(rng, 0.5, 1.5), testkit::uniform(rng, -0.5, 0.5)};
        const double want = monitored_lo(sys, f, x0, us);
        const double got = evaluate(evaluate_problem(sys, f, x0, us));
        EXPECT_NEAR(got, want, 1e-6) << to_string(f);
    }
}

TEST(Encode, EvaluationStartIsFeasibleAndOptimal) {
    const auto sys = double_integrator();
    rng_t rng(85);
    for (const auto corners : {corner_encoding::hypograph, corner_encoding::selection}) {
        synthesis_config cfg;
        cfg.corners = corners;
        int seeded = 0;
        for (int k = 0; k < 40; ++k) {
            const auto f = affine_spec(rng);
            std::vector<std::vector<double>> us;
            for (std::size_t s = 0; s < horizon(f); ++s) us.push_back({testkit::uniform(rng, -1, 1)});
            const std::vector<double> x0{testkit::uniform(rng, 0.5, 1.5), testkit::uniform(rng, -0.5, 0.5)};
            const auto enc = encode(evaluate_problem(sys, f, x0, us, cfg));
            if (enc.start.empty()) continue;
            ++seeded;
            EXPECT_LE(enc.model.max_violation(enc.start), 1e-9) << to_string(f);
            EXPECT_NEAR(enc.start[*enc.rho], monitored_lo(sys, f, x0, us), 1e-9) << to_string(f);

            // A worse seed must not stop the search short of the optimum.
            auto worse = enc.start;
            worse[*enc.rho] = std::max(enc.model.variables()[*enc.rho].lo, worse[*enc.rho] - 0.1);
            solve_options o;
            o.start = worse;
            const auto res = solve(enc.model, o);
            ASSERT_EQ(res.status, solve_status::optimal);
            EXPECT_NEAR(res.x[*enc.rho], enc.start[*enc.rho], 1e-6) << to_string(f);
        }
        EXPECT_GT(seeded, 30);
    }
}

TEST(Encode, SelectionMatchesHypograph) {
    const auto sys = double_integrator();
    rng_t rng(82);
    synthesis_config sel;
    sel.corners = corner_encoding::selection;
    for (int k = 0; k < 15; ++k) {
        const auto f = affine_spec(rng);
        std::vector<std::vector<double>> us;
        for (std::size_t s = 0; s < horizon(f); ++s) us.push_back({testkit::uniform(rng, -1, 1)});
        const std::vector<double> x0{1.0, 0.0};
        EXPECT_NEAR(evaluate(evaluate_problem(sys, f, x0, us, sel)), evaluate(evaluate_problem(sys, f, x0, us)),
                    1e-6);
    }
}

TEST(Encode, NominalUsesPointRobustness) {
    const auto sys = double_integrator();
    const auto f = formula::eventually(formula::pred(Y - expr::constant(1.05)), 0, 4);
    const std::vector<std::vector<double>> us(4, std::vector<double>{1.0});
    synthesis_config cfg;
    cfg.nominal = true;
    const auto xs = embedding_states(linear_system(sys.A(), sys.B(), {0, 0}, {0, 0}, sys.u_lo(), sys.u_hi(),
                                                   sys.outputs(), sys.dt()),
                                     embedding_state::degenerate({1.0, 0.0}), us);
    double best = -inf;
    for (const auto& s : xs) best = std::max(best, s.lo[0] - 1.05);
    EXPECT_NEAR(evaluate(evaluate_problem(sys, f, {1.0, 0.0}, us, cfg)), best, 1e-9);

    const auto g = formula::pred(Y - expr::constant(interval(0.9, 1.1)));
    EXPECT_THROW(encode(evaluate_problem(sys, g, {1.0, 0.0}, {}, cfg)), nondegenerate_constant);
}

TEST(Encode, Errors) {
    const auto sys = double_integrator();
    const auto p = formula::pred(Y - expr::constant(0.7));
    const auto u = formula::until(p, p, 0, 2);
    const std::vector<std::vector<double>> two(2, std::vector<double>{0.0});
    EXPECT_THROW(encode(evaluate_problem(sys, formula::negation(u), {1, 0}, two)), not_pnf);
    EXPECT_THROW(encode(evaluate_problem(sys, formula::pred(Y * Y), {1, 0}, {})), non_affine_predicate);
    EXPECT_THROW(encode(evaluate_problem(sys, formula::pred(expr::var("v")), {1, 0}, {})), unknown_variable);
    EXPECT_THROW(encode(evaluate_problem(sys, u, {1, 0}, {{0.0}})), horizon_mismatch);
    synthesis_config bad;
    bad.big_m = -1.0;
    EXPECT_THROW(encode(evaluate_problem(sys, p, {1, 0}, {}, bad)), bad_big_m);
    bad.big_m = inf;
    EXPECT_THROW(encode(evaluate_problem(sys, p, {1, 0}, {}, bad)), bad_big_m);
    synthesis_config window;
    window.N = 0;
    auto sp = evaluate_problem(sys, p, {1, 0}, {});
    sp.mode = encode_mode::synthesize;
    sp.config = window;
    EXPECT_THROW(encode(sp), horizon_mismatch);
}

TEST(Encode, NegatedPredicatesArePushedInward) {
    const auto sys = double_integrator();
    const auto f = formula::negation(formula::always(formula::pred(Y - expr::constant(1.2)), 0, 2));
    const std::vector<std::vector<double>> us(2, std::vector<double>{0.5});
    EXPECT_NEAR(evaluate(evaluate_problem(sys, f, {1.0, 0.0}, us)), monitored_lo(sys, f, {1.0, 0.0}, us), 1e-6);
}

TEST(Encode, ExplicitBigMTooSmallIsCaught) {
    // Margins are -0.5 and 0.5, so the robustness is 0.5. With M = 0.8 the
    // relaxed row of the failing leaf caps it at 0.3, and the audit reports
    // that row pinned at its limit.
    const auto sys = double_integrator();
    const auto f = formula::disjunction({formula::pred(Y - expr::constant(1.5)), formula::pred(Y - expr::constant(0.5))});
    synthesis_config cfg;
    cfg.big_m = 0.8;
    const auto enc = encode(evaluate_problem(sys, f, {1.0, 0.0}, {}, cfg));
    const auto res = solve(enc.model);
    ASSERT_EQ(res.status, solve_status::optimal);
    EXPECT_NEAR(res.x[*enc.rho], 0.3, 1e-9);
    EXPECT_FALSE(audit_big_m(enc, res.x).ok);
    EXPECT_NEAR(evaluate(evaluate_problem(sys, f, {1.0, 0.0}, {})), 0.5, 1e-9);
}

TEST(Encode, SynthesisModelStructure) {
    const auto sys = double_integrator();
    const auto spec = load_specification(std::string(ISTL_DATA_DIR) + "/oscillate.stl").phi;
    synthesis_problem p{&sys,
                        spec,
                        {},
                        0,
                        interval_trace(sys.output_vars(), {{interval(1.0)}}),
                        embedding_state::degenerate({1.0, 0.0}),
                        encode_mode::synthesize,
                        {}};
    const auto enc = encode(p);
    EXPECT_EQ(enc.window_lo, 0u);
    EXPECT_EQ(enc.window_hi, 15u);
    EXPECT_EQ(enc.steps, 15u + horizon(spec));
    EXPECT_EQ(enc.u.size(), enc.steps);
    EXPECT_FALSE(enc.rho.has_value());
    EXPECT_GT(enc.model.num_binaries(), 0u);
    // Same problem, same model text.
    EXPECT_EQ(emit_lp(encode(p).model), emit_lp(enc.model));
    const auto text = emit_lp(enc.model);
    EXPECT_NE(text.find("Binaries"), std::string::npos);
}
