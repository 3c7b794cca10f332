#include "radinv/optimize.hpp"
#include "radinv/properties.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace radinv {
namespace {

using testing::constant_case;
using testing::make_spec;

std::vector<double> terminal_data(const ProblemSpec& spec, const std::vector<double>& q) {
    auto s = spec;
    s.q = q;
    const auto u = solve_forward(s);
    return {u.last().begin(), u.last().end()};
}

double l2_error(const Mesh& mesh, const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return l2_norm(mesh, d);
}

TEST(Project, FeasibleUnchanged) {
    AdmissibleSet set;
    const std::vector<double> q{0.5, 1.0, 1.7, 2.0};
    EXPECT_EQ(project(q, set), q);
}

TEST(Project, ClampsToBeta) {
    AdmissibleSet set;
    const std::vector<double> q(6, set.beta + 1.0);
    for (double v : project(q, set)) EXPECT_EQ(v, set.beta);
}

TEST(Project, Idempotent) {
    AdmissibleSet set;
    set.pin_endpoints = true;
    set.pin_left = 0.7;
    set.pin_right = 1.9;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> r(-1.0, 4.0);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> q(15);
        for (auto& v : q) v = r(rng);
        const auto p = project(q, set);
        EXPECT_EQ(project(p, set), p);
        EXPECT_EQ(p.front(), 0.7);
        EXPECT_EQ(p.back(), 1.9);
    }
}

TEST(Minimize, StartAtMinimizerStopsImmediately) {
    const Mesh mesh = build_mesh(1.0, 30, 1.0, 60);
    const auto spec = constant_case(mesh);
    const std::vector<double> q_star(mesh.nodes(), 1.0);
    const auto g = terminal_data(spec, q_star);
    AdmissibleSet set;
    set.N = 1e-4;
    StopCriteria stop;
    stop.grad_tol = 1e-12;
    const auto r = minimize(q_star, g, set, spec, Functional::terminal(), stop);
    EXPECT_LE(r.iterations, 1u);
    EXPECT_EQ(r.termination, Termination::gradient_tolerance);
    EXPECT_LE(r.grad_norm_history.back(), 1e-12);
}

TEST(Minimize, RecoversConstantTarget) {
    const Mesh mesh = build_mesh(1.0, 50, 1.0, 200);
    const auto spec = constant_case(mesh);
    const std::vector<double> q_star(mesh.nodes(), 1.0);
    const auto g = terminal_data(spec, q_star);
    AdmissibleSet set;
    set.N = 1e-8;
    const auto r = minimize(std::vector<double>(mesh.nodes(), 2.0), g, set, spec, Functional::terminal());
    EXPECT_LE(l2_error(mesh, r.q_final, q_star), 1e-2);
    EXPECT_NE(r.termination, Termination::stalled_line_search);
}

TEST(Minimize, CostStrictlyDecreasing) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 4; ++t) {
        auto spec = testing::random_spec(rng, 30, 40);
        AdmissibleSet set;
        set.N = 1e-3;
        const auto q_true = random_admissible(spec.mesh.nodes(), set, rng);
        const auto g = terminal_data(spec, q_true);
        StopCriteria stop;
        stop.max_iter = 40;
        const Functional fn = t % 2 ? Functional::windowed(4 * spec.mesh.dt) : Functional::terminal();
        const auto r = minimize(std::vector<double>(spec.mesh.nodes(), 1.0), g, set, spec, fn, stop);
        ASSERT_EQ(r.cost_history.size(), r.iterations + 1);
        for (std::size_t k = 1; k < r.cost_history.size(); ++k)
            EXPECT_LT(r.cost_history[k].total, r.cost_history[k - 1].total) << "trial " << t << " step " << k;
    }
}

TEST(Minimize, MirrorSymmetric) {
    const Mesh mesh = build_mesh(1.0, 30, 0.8, 40);
    std::vector<double> q_true(mesh.nodes()), phi(mesh.nodes()), q0(mesh.nodes());
    for (std::size_t i = 0; i < q_true.size(); ++i) {
        const double x = mesh.node(i);
        q_true[i] = 1.0 + 0.4 * x * x;
        phi[i] = 1.0 + 0.5 * std::sin(2.0 * x);
        q0[i] = 1.2 - 0.1 * x;
    }
    auto reversed = [](std::vector<double> v) {
        std::reverse(v.begin(), v.end());
        return v;
    };
    const auto spec = make_spec(mesh, CoefficientModel{}, q_true, phi);
    const auto mirror = make_spec(mesh, CoefficientModel{}, reversed(q_true), reversed(phi));
    const auto g = terminal_data(spec, q_true);
    const auto gm = terminal_data(mirror, mirror.q);
    AdmissibleSet set;
    set.N = 1e-4;
    StopCriteria stop;
    stop.max_iter = 30;
    const auto a = minimize(q0, g, set, spec, Functional::terminal(), stop);
    const auto b = minimize(reversed(q0), gm, set, mirror, Functional::terminal(), stop);
    const auto br = reversed(b.q_final);
    for (std::size_t i = 0; i < br.size(); ++i) EXPECT_NEAR(a.q_final[i], br[i], 1e-10) << i;
}

TEST(Minimize, MaxIterationsReported) {
    const Mesh mesh = build_mesh(1.0, 20, 1.0, 40);
    const auto spec = constant_case(mesh);
    const auto g = terminal_data(spec, std::vector<double>(mesh.nodes(), 1.0));
    StopCriteria stop;
    stop.max_iter = 3;
    const auto r = minimize(std::vector<double>(mesh.nodes(), 1.8), g, AdmissibleSet{}, spec, Functional::terminal(),
                            stop);
    EXPECT_EQ(r.iterations, 3u);
    EXPECT_EQ(r.termination, Termination::max_iterations);
    EXPECT_EQ(r.grad_norm_history.size(), 4u);
}

TEST(Minimize, ZeroToleranceEndsInStalledLineSearch) {
    const Mesh mesh = build_mesh(1.0, 20, 1.0, 40);
    const auto spec = constant_case(mesh);
    const auto g = terminal_data(spec, std::vector<double>(mesh.nodes(), 1.3));
    StopCriteria stop;
    stop.grad_tol = 0.0;
    stop.max_iter = 100000;
    AdmissibleSet set;
    set.N = 1e-3;
    const auto r = minimize(std::vector<double>(mesh.nodes(), 0.6), g, set, spec, Functional::terminal(), stop);
    EXPECT_EQ(r.termination, Termination::stalled_line_search);
    for (double v : r.q_final) EXPECT_NEAR(v, 1.3, 1e-6);
}

TEST(Minimize, BoundActiveWhenTargetOutsideBox) {
    const Mesh mesh = build_mesh(1.0, 20, 1.0, 40);
    const auto spec = constant_case(mesh);
    const auto g = terminal_data(spec, std::vector<double>(mesh.nodes(), 2.5));
    AdmissibleSet set;
    set.N = 1e-4;
    const auto r = minimize(std::vector<double>(mesh.nodes(), 1.0), g, set, spec, Functional::terminal());
    for (double v : r.q_final) EXPECT_DOUBLE_EQ(v, set.beta);
    EXPECT_EQ(r.active_set.size(), mesh.nodes());
    EXPECT_EQ(r.termination, Termination::gradient_tolerance);
}

TEST(Minimize, L2MetricAlsoDescends) {
    const Mesh mesh = build_mesh(1.0, 30, 1.0, 60);
    const auto spec = constant_case(mesh);
    const auto g = terminal_data(spec, std::vector<double>(mesh.nodes(), 1.0));
    AdmissibleSet set;
    set.N = 1e-6;
    DescentOptions opt;
    opt.metric = GradientMetric::l2;
    StopCriteria stop;
    stop.relative_tol = 1e-6;
    const auto r = minimize(std::vector<double>(mesh.nodes(), 1.5), g, set, spec, Functional::terminal(), stop, opt);
    EXPECT_LE(l2_error(mesh, r.q_final, std::vector<double>(mesh.nodes(), 1.0)), 1e-3);
}

TEST(Minimize, NecessaryConditionAtConvergedRun) {
    const Mesh mesh = build_mesh(1.0, 40, 1.0, 80);
    std::vector<double> q_true(mesh.nodes());
    for (std::size_t i = 0; i < q_true.size(); ++i) q_true[i] = 1.0 + 0.5 * std::exp(-10 * std::pow(mesh.node(i) - 0.5, 2));
    const auto spec = make_spec(mesh, CoefficientModel{}, q_true, std::vector<double>(mesh.nodes(), 1.0));
    auto g = terminal_data(spec, q_true);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 + 0.01 * std::sin(7.0 * i);
    AdmissibleSet set;
    set.N = 1e-3;
    StopCriteria stop;
    stop.relative_tol = 1e-7;
    stop.max_iter = 2000;
    const auto r = minimize(std::vector<double>(mesh.nodes(), 1.0), g, set, spec, Functional::terminal(), stop);
    ASSERT_NE(r.termination, Termination::max_iterations);
    const double scale = std::abs(r.cost_history.front().total);
    EXPECT_GE(check_necessary_condition(r.q_final, g, set, spec, Functional::terminal(), 50, 5), -1e-6 * scale);
}

TEST(FixedPointMap, ExactDataIsFixed) {
    const Mesh mesh = build_mesh(1.0, 30, 1.0, 50);
    std::vector<double> q_star(mesh.nodes());
    for (std::size_t i = 0; i < q_star.size(); ++i) q_star[i] = 1.0 + 0.3 * mesh.node(i);
    const auto spec = make_spec(mesh, CoefficientModel{}, q_star, std::vector<double>(mesh.nodes(), 1.0));
    const auto g = terminal_data(spec, q_star);
    EXPECT_EQ(fixed_point_map(q_star, g, 1.0, spec), q_star);
    const auto r = fixed_point(q_star, g, 1.0, AdmissibleSet{}, spec);
    EXPECT_EQ(r.iterations, 1u);
    EXPECT_EQ(r.grad_norm_history.front(), 0.0);
    EXPECT_EQ(r.termination, Termination::contraction_converged);
}

TEST(FixedPoint, StepGuard) {
    const Mesh mesh = build_mesh(1.0, 10, 1.0, 10);
    const auto spec = constant_case(mesh);
    const std::vector<double> q(mesh.nodes(), 1.0), g(mesh.nodes(), 0.3);
    EXPECT_THROW(fixed_point(q, g, 2.0, AdmissibleSet{}, spec), DomainError);
    EXPECT_THROW(fixed_point(q, g, 0.0, AdmissibleSet{}, spec), DomainError);
    EXPECT_NO_THROW(fixed_point(q, g, 1.99, AdmissibleSet{}, spec));
    const auto doubled = constant_case(mesh, 1.0, 2.0);
    EXPECT_THROW(fixed_point(q, g, 1.0, AdmissibleSet{}, doubled), DomainError);
    EXPECT_NO_THROW(fixed_point(q, g, 0.99, AdmissibleSet{}, doubled));
}

TEST(FixedPoint, MatchesScalarIteration) {
    // phi = 1 and constant q keep u spatially constant: u(T) = (1 + q dt)^{-K}.
    const Mesh mesh = build_mesh(1.0, 20, 1.0, 100);
    const auto spec = constant_case(mesh);
    const double q_star = 1.0;
    const double g0 = std::pow(1.0 + q_star * mesh.dt, -static_cast<double>(mesh.steps));
    const std::vector<double> g(mesh.nodes(), g0);
    for (double start : {0.5, 2.0}) {
        FixedPointStop stop;
        stop.max_iter = 60;
        const auto r = fixed_point(std::vector<double>(mesh.nodes(), start), g, 1.0, AdmissibleSet{}, spec, stop);
        double q = start;
        for (std::size_t k = 0; k < r.iterations; ++k) {
            const double next = std::clamp(q + (std::pow(1.0 + q * mesh.dt, -100.0) - g0), 0.5, 2.0);
            EXPECT_NEAR(r.grad_norm_history[k], std::abs(next - q), 1e-11) << start << " " << k;
            q = next;
        }
        for (double v : r.q_final) EXPECT_NEAR(v, q, 1e-11);
        EXPECT_LT(std::abs(q - q_star), 0.05);
    }
}

TEST(FixedPoint, ConstantTargetWithin200Iterations) {
    const Mesh mesh = build_mesh(1.0, 100, 1.0, 1000);
    const auto spec = constant_case(mesh);
    const std::vector<double> q_star(mesh.nodes(), 1.0);
    const auto g = terminal_data(spec, q_star);
    FixedPointStop stop;
    stop.max_iter = 200;
    const auto r = fixed_point(std::vector<double>(mesh.nodes(), 2.0), g, 1.0, AdmissibleSet{}, spec, stop);
    EXPECT_TRUE(r.unidentifiable.empty());
    double err = 0.0;
    for (double v : r.q_final) err = std::max(err, std::abs(v - 1.0));
    EXPECT_LE(err, 1e-2);
}

TEST(FixedPoint, FlagsNodesWithoutSignal) {
    const Mesh mesh = build_mesh(1.0, 40, 1.0, 100);
    std::vector<double> phi(mesh.nodes(), 0.0);
    for (std::size_t i = 30; i < phi.size(); ++i) phi[i] = 1.0;
    const auto spec = make_spec(mesh, CoefficientModel{CoefficientModel::Kind::quadratic, 1e-6},
                                std::vector<double>(mesh.nodes(), 1.0), phi);
    const std::vector<double> q0(mesh.nodes(), 1.5);
    const auto g = terminal_data(spec, std::vector<double>(mesh.nodes(), 1.0));
    const auto r = fixed_point(q0, g, 0.5, AdmissibleSet{}, spec);
    ASSERT_FALSE(r.unidentifiable.empty());
    EXPECT_EQ(r.unidentifiable.front(), 0u);
    for (std::size_t i : r.unidentifiable) EXPECT_EQ(r.q_final[i], 1.5);
    EXPECT_NEAR(r.q_final.back(), 1.0, 1e-6);
}

TEST(Comparison, LargerAbsorptionGivesSmallerSolution) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    AdmissibleSet box;
    for (int t = 0; t < 20; ++t) {
        auto spec = testing::random_spec(rng);
        auto q2 = random_admissible(spec.mesh.nodes(), box, rng);
        auto q1 = q2;
        for (auto& v : q1) v += 0.3 * u01(rng);
        spec.q = q1;
        const auto u1 = solve_forward(spec);
        spec.q = q2;
        const auto u2 = solve_forward(spec);
        for (std::size_t k = 0; k < u1.values().size(); ++k) EXPECT_LE(u1.values()[k], u2.values()[k] + 1e-14);
    }
}

TEST(Contraction, OrderedPairsStrict) {
    const auto c = check_monotone_contraction(20, 0, Scheme::backward_euler);
    EXPECT_TRUE(c.passed()) << (c.counterexamples.empty() ? "" : c.counterexamples.front());
    EXPECT_LT(c.worst, 0.0);
}

TEST(Contraction, UnstableSchemeIsCaught) {
    const auto c = check_monotone_contraction(20, 0, Scheme::explicit_euler);
    EXPECT_FALSE(c.passed());
    EXPECT_FALSE(c.counterexamples.empty());
}

}  // namespace
}  // namespace radinv
