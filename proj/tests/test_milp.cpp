#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "support.hpp"

using namespace istl;
using istl::testkit::rng_t;

TEST(Milp, ModelValidation) {
    milp_model m;
    EXPECT_THROW(m.add_variable("x", 1.0, 0.0), construction_error);
    m.add_variable("x", 0.0, 1.0);
    EXPECT_THROW(m.add_constraint("r", {{3, 1.0}}, row_sense::le, 0.0), construction_error);
    const auto b = m.add_variable("b", -5.0, 5.0, var_type::binary);
    EXPECT_EQ(m.variables()[b].lo, 0.0);
    EXPECT_EQ(m.variables()[b].hi, 1.0);
    EXPECT_EQ(m.num_binaries(), 1u);
}

TEST(Milp, SmallLp) {
    // min -x - y s.t. x + 2y <= 4, 3x + y <= 6, 0 <= x, y <= 10 -> (1.6, 1.2)
    milp_model m;
    const auto x = m.add_variable("x", 0.0, 10.0);
    const auto y = m.add_variable("y", 0.0, 10.0);
    m.add_constraint("a", {{x, 1.0}, {y, 2.0}}, row_sense::le, 4.0);
    m.add_constraint("b", {{x, 3.0}, {y, 1.0}}, row_sense::le, 6.0);
    m.set_objective(x, -1.0);
    m.set_objective(y, -1.0);
    dual_simplex lp(m);
    ASSERT_EQ(lp.solve(), lp_status::optimal);
    EXPECT_NEAR(lp.primal()[x], 1.6, 1e-9);
    EXPECT_NEAR(lp.primal()[y], 1.2, 1e-9);
    EXPECT_NEAR(lp.objective(), -2.8, 1e-9);
}

TEST(Milp, LpMatchesVertexEnumeration) {
    rng_t rng(71);
    int feasible = 0;
    for (int k = 0; k < 300; ++k) {
        const auto m = testkit::random_milp(rng, testkit::pick(rng, 2, 4), 0, testkit::pick(rng, 1, 4));
        const double ref = testkit::lp_by_vertices(m);
        const double got = testkit::lp_by_simplex(m);
        if (std::isinf(ref)) {
            EXPECT_TRUE(std::isinf(got)) << emit_lp(m);
            continue;
        }
        ++feasible;
        EXPECT_NEAR(got, ref, 1e-6 * (1.0 + std::fabs(ref))) << emit_lp(m);
    }
    EXPECT_GT(feasible, 100);
}

TEST(Milp, BranchAndBoundMatchesEnumeration) {
    rng_t rng(72);
    for (int k = 0; k < 60; ++k) {
        const std::size_t nb = testkit::pick(rng, 1, 10);
        const auto m = testkit::random_milp(rng, nb + testkit::pick(rng, 1, 3), nb, testkit::pick(rng, 2, 6));
        const double ref = testkit::milp_by_enumeration(m, [](const milp_model& s) { return testkit::lp_by_vertices(s); });
        const auto res = solve(m);
        if (std::isinf(ref)) {
            EXPECT_EQ(res.status, solve_status::infeasible) << emit_lp(m);
            continue;
        }
        ASSERT_EQ(res.status, solve_status::optimal) << emit_lp(m);
        EXPECT_NEAR(res.objective, ref, 1e-6 * (1.0 + std::fabs(ref))) << emit_lp(m);
        EXPECT_LE(m.max_violation(res.x), 1e-6);
        for (std::size_t j = 0; j < nb; ++j) EXPECT_TRUE(res.x[j] == 0.0 || res.x[j] == 1.0);
    }
}

TEST(Milp, InfeasibleAndUnbounded) {
    milp_model a;
    const auto x = a.add_variable("x", 0.0, 1.0);
    a.add_constraint("r", {{x, 1.0}}, row_sense::ge, 2.0);
    EXPECT_EQ(solve(a).status, solve_status::infeasible);

    milp_model b;
    const auto y = b.add_variable("y", 0.0, inf);
    const auto z = b.add_binary("z");
    b.add_constraint("r", {{y, 1.0}, {z, -1.0}}, row_sense::ge, 0.0);
    b.set_objective(y, -1.0);
    EXPECT_EQ(solve(b).status, solve_status::unbounded);
}

TEST(Milp, TimeLimit) {
    rng_t rng(73);
    const auto m = testkit::random_milp(rng, 40, 30, 25);
    solve_options o;
    o.time_limit = std::chrono::duration<double>(0.0);
    const auto res = solve(m, o);
    EXPECT_EQ(res.status, solve_status::timed_out);
}

TEST(Milp, EmitLp) {
    milp_model m;
    const auto x = m.add_variable("x", -1.0, 2.5);
    const auto b = m.add_binary("b");
    const auto f = m.add_variable("f", -inf, inf);
    m.add_constraint("c1", {{x, 1.0}, {b, -2.0}}, row_sense::le, 1.0);
    m.add_constraint("c2", {{x, 1.0}, {f, 1.0}}, row_sense::eq, 0.0);
    m.set_objective(x, 1.0);
    m.set_objective(f, -0.5);
    const auto text = emit_lp(m);
    EXPECT_NE(text.find("Minimize"), std::string::npos);
    EXPECT_NE(text.find(" c1: x - 2 b <= 1\n"), std::string::npos) << text;
    EXPECT_NE(text.find(" f free\n"), std::string::npos) << text;
    EXPECT_NE(text.find(" -1 <= x <= 2.5\n"), std::string::npos) << text;
    EXPECT_NE(text.find("Binaries\n b\n"), std::string::npos) << text;
    EXPECT_EQ(text.substr(text.size() - 4), "End\n");
}
