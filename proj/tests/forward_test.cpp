#include "radinv/forward.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

namespace radinv {
namespace {

using testing::constant_case;
using testing::make_spec;
using testing::random_spec;

TEST(SolveForward, ConstantCaseMatchesScalarRecursion) {
    const Mesh mesh = build_mesh(1.0, 100, 1.0, 1000);
    const auto u = solve_forward(constant_case(mesh));
    double exact_err = 0.0;
    double recursion = 1.0;
    for (std::size_t n = 0; n < mesh.levels(); ++n) {
        for (std::size_t i = 0; i < mesh.nodes(); ++i) {
            EXPECT_NEAR(u(n, i), recursion, 1e-11 * recursion) << n << "," << i;
            exact_err = std::max(exact_err, std::abs(u(n, i) - std::exp(-mesh.time(n))));
        }
        recursion /= 1.0 + mesh.dt;
    }
    EXPECT_LE(exact_err, 2e-3);
}

TEST(SolveForward, ZeroDataGivesZeroSolution) {
    const Mesh mesh = build_mesh(1.0, 20, 1.0, 20);
    std::vector<double> q(mesh.nodes());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = 0.3 + mesh.node(i);
    const auto u = solve_forward(make_spec(mesh, CoefficientModel{}, q, std::vector<double>(mesh.nodes(), 0.0)));
    EXPECT_EQ(u.max_abs(), 0.0);
}

TEST(SolveForward, RowZeroIsInitialDatum) {
    std::mt19937_64 rng(3);
    const auto spec = random_spec(rng);
    const auto u = solve_forward(spec);
    for (std::size_t i = 0; i < spec.mesh.nodes(); ++i) EXPECT_EQ(u(0, i), spec.phi[i]);
}

// Manufactured solution u* = e^{-t}(1 + x(1-x)) for a = x(1-x), q = 1:
// f = u*_t - (a u*_x)_x + u* = -e^{-t}(6x^2 - 6x + 1).
ProblemSpec manufactured(std::size_t cells, std::size_t steps) {
    const Mesh mesh = build_mesh(1.0, cells, 1.0, steps);
    auto exact = [](double x, double t) { return std::exp(-t) * (1.0 + x * (1.0 - x)); };
    std::vector<double> phi(mesh.nodes());
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = exact(mesh.node(i), 0.0);
    auto spec = make_spec(mesh, CoefficientModel{}, std::vector<double>(mesh.nodes(), 1.0), phi);
    SpaceTimeField f(mesh.levels(), mesh.nodes());
    for (std::size_t n = 0; n < mesh.levels(); ++n)
        for (std::size_t i = 0; i < mesh.nodes(); ++i) {
            const double x = mesh.node(i);
            f(n, i) = -std::exp(-mesh.time(n)) * (6.0 * x * x - 6.0 * x + 1.0);
        }
    spec.source = std::move(f);
    return spec;
}

// Max error over all time levels; `interior` restricts to x in [l/4, 3l/4],
// away from the half control volumes at the degenerate endpoints.
double manufactured_error(std::size_t cells, std::size_t steps, bool interior = false) {
    const auto spec = manufactured(cells, steps);
    const auto u = solve_forward(spec);
    double err = 0.0;
    const Mesh& m = spec.mesh;
    for (std::size_t n = 0; n < m.levels(); ++n)
        for (std::size_t i = 1; i < m.cells; ++i) {
            const double x = m.node(i);
            if (interior && (x < 0.25 || x > 0.75)) continue;
            err = std::max(err, std::abs(u(n, i) - std::exp(-m.time(n)) * (1.0 + x * (1.0 - x))));
        }
    return err;
}

TEST(SolveForward, ManufacturedTemporalOrder) {
    const double e1 = manufactured_error(400, 20);
    const double e2 = manufactured_error(400, 40);
    const double e3 = manufactured_error(400, 80);
    EXPECT_GE(std::log2(e1 / e2), 0.9);
    EXPECT_GE(std::log2(e2 / e3), 0.9);
}

TEST(SolveForward, ManufacturedSpatialOrder) {
    const double e1 = manufactured_error(20, 40000, true);
    const double e2 = manufactured_error(40, 40000, true);
    const double e3 = manufactured_error(80, 40000, true);
    EXPECT_GE(std::log2(e1 / e2), 1.8);
    EXPECT_GE(std::log2(e2 / e3), 1.8);
}

TEST(SolveForward, NonFiniteSourceReportsLevel) {
    const Mesh mesh = build_mesh(1.0, 10, 1.0, 10);
    auto spec = constant_case(mesh);
    SpaceTimeField f(mesh.levels(), mesh.nodes());
    f(5, 3) = NAN;
    spec.source = f;
    try {
        (void)solve_forward(spec);
        FAIL() << "expected DomainError";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("time level 5"), std::string::npos) << e.what();
    }
}

TEST(SolveForward, RejectsNegativeQ) {
    const Mesh mesh = build_mesh(1.0, 10, 1.0, 10);
    auto spec = constant_case(mesh);
    spec.q[4] = -0.1;
    EXPECT_THROW(solve_forward(spec), DomainError);
}

TEST(SolveForward, WeakDegenerateUsesDirichletRows) {
    const Mesh mesh = build_mesh(1.0, 20, 0.5, 20);
    CoefficientModel a{CoefficientModel::Kind::power, 1.0, 0.5, 0.5};
    const auto u = solve_forward(make_spec(mesh, a, std::vector<double>(mesh.nodes(), 1.0),
                                           std::vector<double>(mesh.nodes(), 1.0)));
    for (std::size_t n = 1; n < mesh.levels(); ++n) {
        EXPECT_EQ(u(n, 0), 0.0);
        EXPECT_EQ(u(n, mesh.cells), 0.0);
        for (std::size_t i = 1; i < mesh.cells; ++i) {
            EXPECT_GT(u(n, i), 0.0);
            EXPECT_LE(u(n, i), 1.0);
        }
    }
}

TEST(StepOperator, SymmetricMMatrix) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const auto spec = random_spec(rng);
        for (bool dirichlet : {false, true}) {
            const StepOperator op(spec.mesh, spec.coeff.faces, spec.q, 0.0, dirichlet);
            const auto& lo = op.lower();
            const auto& d = op.diag();
            const auto& up = op.upper();
            for (std::size_t i = 0; i + 1 < d.size(); ++i) {
                EXPECT_EQ(up[i], lo[i + 1]);
                EXPECT_LE(up[i], 0.0);
            }
            for (std::size_t i = 0; i < d.size(); ++i) {
                const double off = (i > 0 ? std::abs(lo[i]) : 0.0) + (i + 1 < d.size() ? std::abs(up[i]) : 0.0);
                EXPECT_GT(d[i], off);
            }
        }
    }
}

TEST(Properties, DiscreteMaximumPrinciple) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const auto spec = random_spec(rng);
        const auto u = solve_forward(spec);
        const double bound = testing::sup_abs(spec.phi) + 1e-12;
        for (double v : u.values()) {
            ASSERT_GE(v, 0.0) << "trial " << trial;
            ASSERT_LE(v, bound) << "trial " << trial;
        }
    }
}

TEST(Properties, L2NormNonIncreasing) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        auto spec = random_spec(rng);
        std::uniform_real_distribution<double> sign(-1.0, 1.0);
        for (auto& p : spec.phi) p *= sign(rng);  // sign-changing data is fine here
        const auto u = solve_forward(spec);
        for (std::size_t n = 0; n < spec.mesh.steps; ++n)
            EXPECT_LE(l2_norm(spec.mesh, u.row(n + 1)), l2_norm(spec.mesh, u.row(n)) * (1 + 1e-14));
    }
}

TEST(Properties, Linearity) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        auto s1 = random_spec(rng);
        auto s2 = s1;
        auto s12 = s1;
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (std::size_t i = 0; i < s1.phi.size(); ++i) {
            s2.phi[i] = u(rng);
            s12.phi[i] = s1.phi[i] + s2.phi[i];
        }
        const auto u1 = solve_forward(s1);
        const auto u2 = solve_forward(s2);
        const auto u12 = solve_forward(s12);
        for (std::size_t k = 0; k < u12.values().size(); ++k)
            EXPECT_NEAR(u12.values()[k], u1.values()[k] + u2.values()[k], 1e-13);
    }
}

TEST(Properties, BoundaryFluxDecaysUnderRefinement) {
    double previous = INFINITY;
    for (std::size_t cells : {20, 40, 80, 160}) {
        const Mesh mesh = build_mesh(1.0, cells, 0.5, 200);
        std::vector<double> phi(mesh.nodes());
        for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = 1.0 + mesh.node(i);
        const auto spec = make_spec(mesh, CoefficientModel{}, std::vector<double>(mesh.nodes(), 1.0), phi);
        const auto u = solve_forward(spec);
        const double flux = std::abs(spec.coeff.faces[0] * (u(mesh.steps, 1) - u(mesh.steps, 0)) / mesh.spacing);
        EXPECT_LT(flux, 0.6 * previous) << cells;
        previous = flux;
    }
}

TEST(SolveForwardViscous, ClassicalSolveWellPosed) {
    const Mesh mesh = build_mesh(1.0, 50, 1.0, 100);
    const auto spec = make_spec(mesh, CoefficientModel{}, std::vector<double>(mesh.nodes(), 1.0),
                                InitialDatum{InitialDatum::Kind::sine, 1.0}.sample(mesh));
    const auto u = solve_forward_viscous(spec, 0.1);
    for (std::size_t n = 1; n < mesh.levels(); ++n) {
        EXPECT_EQ(u(n, 0), 0.0);
        EXPECT_EQ(u(n, mesh.cells), 0.0);
    }
    for (double v : u.values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0 + 1e-12);
    }
}

TEST(SolveForwardViscous, VanishingViscosityApproachesDegenerateSolution) {
    const Mesh mesh = build_mesh(1.0, 100, 1.0, 1000);
    const auto spec = constant_case(mesh);
    const auto u = solve_forward(spec);
    double previous = INFINITY;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
        const auto ue = solve_forward_viscous(spec, eps);
        SpaceTimeField diff(mesh.levels(), mesh.nodes());
        for (std::size_t n = 0; n < mesh.levels(); ++n)
            for (std::size_t i = 0; i < mesh.nodes(); ++i) diff(n, i) = ue(n, i) - u(n, i);
        const double d = l2_norm(mesh, diff);
        EXPECT_LT(d, previous) << eps;
        previous = d;
    }
}

TEST(SolveForwardViscous, RejectsBadViscosity) {
    const auto spec = constant_case(build_mesh(1.0, 10, 1.0, 10));
    EXPECT_THROW(solve_forward_viscous(spec, 0.0), DomainError);
    EXPECT_THROW(solve_forward_viscous(spec, 1.0), DomainError);
    EXPECT_THROW(solve_forward_viscous(spec, -1e-3), DomainError);
}

TEST(MaxPrincipleBound, Examples) {
    const Mesh mesh = build_mesh(1.0, 10, 1.0, 10);
    auto spec = constant_case(mesh);
    EXPECT_DOUBLE_EQ(max_principle_bound(spec), 1.0);

    spec.q.assign(mesh.nodes(), 0.5);
    spec.source = SpaceTimeField(mesh.levels(), mesh.nodes(), 2.0);
    EXPECT_DOUBLE_EQ(max_principle_bound(spec), 4.0);

    spec.source = SpaceTimeField(mesh.levels(), mesh.nodes(), 1.0);
    spec.q.assign(mesh.nodes(), 0.0);
    EXPECT_THROW(max_principle_bound(spec), DomainError);
}

TEST(MaxPrincipleBound, HoldsWithSource) {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        auto spec = random_spec(rng);
        for (auto& q : spec.q) q += 0.2;
        SpaceTimeField f(spec.mesh.levels(), spec.mesh.nodes());
        for (std::size_t n = 0; n < f.levels(); ++n)
            for (std::size_t i = 0; i < f.nodes(); ++i) f(n, i) = u(rng);
        spec.source = f;
        const double bound = max_principle_bound(spec);
        EXPECT_LE(solve_forward(spec).max_abs(), bound * (1 + 1e-12));
    }
}

TEST(EnergyReport, ZeroField) {
    const Mesh mesh = build_mesh(1.0, 10, 1.0, 10);
    const auto spec = constant_case(mesh, 1.0, 0.0);
    const auto e = energy_report(solve_forward(spec), spec);
    EXPECT_EQ(e.sup_l2, 0.0);
    EXPECT_EQ(e.grad_energy, 0.0);
    EXPECT_EQ(e.dt_energy, 0.0);
}

TEST(EnergyReport, ExponentialDecayAttainsSupAtZero) {
    const Mesh mesh = build_mesh(1.0, 50, 1.0, 100);
    const auto spec = constant_case(mesh);
    const auto e = energy_report(solve_forward(spec), spec);
    EXPECT_NEAR(e.sup_l2, 1.0, 1e-14);
    EXPECT_NEAR(e.grad_energy, 0.0, 1e-20);
    EXPECT_GT(e.dt_energy, 0.0);
}

TEST(EnergyReport, ShapeMismatch) {
    const auto spec = constant_case(build_mesh(1.0, 10, 1.0, 10));
    EXPECT_THROW(energy_report(SpaceTimeField(3, 3), spec), DomainError);
}

TEST(EnergyReport, BoundedByDataAcrossRefinements) {
    // Energy estimate: grad_energy <= C (||f||^2 + ||phi||^2) with a constant
    // fitted on the coarsest mesh that must not grow under refinement.
    std::vector<double> ratios;
    for (std::size_t level = 0; level < 4; ++level) {
        const std::size_t cells = 20u << level;
        const Mesh mesh = build_mesh(1.0, cells, 1.0, 50u << level);
        std::vector<double> phi(mesh.nodes()), q(mesh.nodes());
        for (std::size_t i = 0; i < phi.size(); ++i) {
            const double x = mesh.node(i);
            phi[i] = 1.0 + std::sin(3.0 * x);
            q[i] = 0.5 + x;
        }
        auto spec = make_spec(mesh, CoefficientModel{}, q, phi);
        SpaceTimeField f(mesh.levels(), mesh.nodes());
        for (std::size_t n = 0; n < f.levels(); ++n)
            for (std::size_t i = 0; i < f.nodes(); ++i) f(n, i) = std::cos(mesh.time(n) + mesh.node(i));
        spec.source = f;
        const auto e = energy_report(solve_forward(spec), spec);
        ASSERT_TRUE(std::isfinite(e.grad_energy));
        const double data = l2_norm(mesh, f) * l2_norm(mesh, f) + std::pow(l2_norm(mesh, phi), 2);
        ratios.push_back((e.sup_l2 * e.sup_l2 + e.grad_energy) / data);
    }
    for (std::size_t k = 1; k < ratios.size(); ++k) EXPECT_LE(ratios[k], 1.1 * ratios[0]);
}

TEST(SolveForward, ConstantCaseRuntime) {
    const Mesh mesh = build_mesh(1.0, 100, 1.0, 1000);
    const auto start = std::chrono::steady_clock::now();
    (void)solve_forward(constant_case(mesh));
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_LT(seconds, 1.0);
}

}  // namespace
}  // namespace radinv
