#pragma once

// Randomized invariant checks with counterexample reporting. Failures are
// collected, never thrown. The forward scheme is a parameter so that a broken
// integrator can be fed in to prove the checks bite.

#include "radinv/adjoint.hpp"
#include "radinv/catalog.hpp"
#include "radinv/format.hpp"
#include "radinv/forward.hpp"
#include "radinv/objective.hpp"
#include "radinv/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace radinv {

struct PropertyCheck {
    std::string name;
    std::size_t trials = 0;
    std::size_t failures = 0;
    double worst = 0.0;      // largest observed excess (or relative error)
    double tolerance = 0.0;
    std::vector<std::string> counterexamples;  // at most kMaxCounterexamples
    bool passed() const { return failures == 0; }
};

struct PropertyReport {
    std::vector<PropertyCheck> checks;
    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const PropertyCheck& c) { return c.passed(); });
    }
    const PropertyCheck& check(std::string_view name) const {
        for (const auto& c : checks)
            if (c.name == name) return c;
        throw DomainError("property report: no check named " + std::string(name));
    }
};

struct PropertySuiteConfig {
    std::size_t max_principle_trials = 100;
    std::size_t adjoint_trials = 50;
    std::size_t contraction_trials = 20;
    std::size_t gradient_trials = 10;
    std::size_t duality_trials = 10;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::backward_euler;
};

inline constexpr std::size_t kMaxCounterexamples = 5;

namespace detail {

/// Strong-degenerate problem with random length, horizon, amplitude, smooth
/// positive q and nonnegative phi.
inline ProblemSpec random_problem(std::mt19937_64& rng, std::size_t cells = 40, std::size_t steps = 50) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double l = 0.5 + 1.5 * u01(rng);
    const double T = 0.2 + u01(rng);
    ProblemSpec s;
    s.mesh = build_mesh(l, cells, T, steps);
    s.coeff = CoefficientModel{CoefficientModel::Kind::quadratic, 0.2 + 3.0 * u01(rng)}.sample(s.mesh);
    s.q.resize(s.mesh.nodes());
    s.phi.resize(s.mesh.nodes());
    const double q0 = 2.0 * u01(rng), q1 = 2.0 * u01(rng), k = 1.0 + 4.0 * u01(rng);
    for (std::size_t i = 0; i < s.q.size(); ++i) {
        s.q[i] = q0 + q1 * (0.5 + 0.5 * std::sin(k * s.mesh.node(i) / l));
        s.phi[i] = 3.0 * u01(rng);
    }
    return s;
}

inline void record(PropertyCheck& c, double excess, const std::string& what) {
    c.worst = std::max(c.worst, excess);
    if (excess > c.tolerance) {
        ++c.failures;
        if (c.counterexamples.size() < kMaxCounterexamples) c.counterexamples.push_back(what);
    }
}

inline double sup(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double max_abs_diff_values(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline std::string where(std::size_t trial, std::uint64_t seed) {
    return "trial " + std::to_string(trial) + " (seed " + std::to_string(seed) + ")";
}

}  // namespace detail

/// 0 <= u <= max phi for f = 0, phi >= 0. Excess is the worst violation.
inline PropertyCheck check_maximum_principle(std::size_t trials, std::uint64_t seed, Scheme scheme) {
    PropertyCheck c{"maximum-principle", trials, 0, 0.0, 1e-12, {}};
    std::mt19937_64 rng(seed);
    for (std::size_t t = 0; t < trials; ++t) {
        const auto spec = detail::random_problem(rng);
        const double bound = max_principle_bound(spec);
        double excess = 0.0;
        std::size_t level = 0, node = 0;
        try {
            const auto u = solve_forward(spec, scheme);
            for (std::size_t n = 0; n <= spec.mesh.steps; ++n)
                for (std::size_t i = 0; i < spec.mesh.nodes(); ++i) {
                    const double v = u(n, i);
                    const double e = std::max(-v, v - bound);
                    if (e > excess) {
                        excess = e;
                        level = n;
                        node = i;
                    }
                }
        } catch (const DomainError& err) {
            detail::record(c, std::numeric_limits<double>::infinity(), detail::where(t, seed) + ": " + err.what());
            continue;
        }
        detail::record(c, excess,
                       detail::where(t, seed) + ": bound exceeded by " + format_number(excess) + " at level " +
                           std::to_string(level) + ", node " + std::to_string(node));
    }
    return c;
}

/// ||v||_inf <= ||u(T) - g||_inf for the adjoint with pure terminal data.
inline PropertyCheck check_adjoint_bound(std::size_t trials, std::uint64_t seed) {
    PropertyCheck c{"adjoint-sup-bound", trials, 0, 0.0, 1e-12, {}};
    std::mt19937_64 rng(seed + 1);
    std::uniform_real_distribution<double> r(-1.0, 1.0);
    for (std::size_t t = 0; t < trials; ++t) {
        const auto spec = detail::random_problem(rng);
        std::vector<double> residual(spec.mesh.nodes());
        const double scale = std::exp(3.0 * r(rng));
        for (auto& v : residual) v = scale * r(rng);
        const auto p = solve_adjoint(spec, TerminalData::pure(residual));
        const double excess = detail::sup(p.values()) - detail::sup(residual);
        detail::record(c, excess, detail::where(t, seed) + ": adjoint exceeds terminal sup by " + format_number(excess));
    }
    return c;
}

/// Ordered q1 >= q2 in the box, lambda = 1 / ||phi||_inf:
/// ||P[q1] - P[q2]||_inf < ||q1 - q2||_inf. Excess is ratio - 1 (strict, so
/// tolerance 0 and equality fails).
inline PropertyCheck check_monotone_contraction(std::size_t trials, std::uint64_t seed, Scheme scheme) {
    PropertyCheck c{"monotone-contraction", trials, 0, -std::numeric_limits<double>::infinity(), 0.0, {}};
    std::mt19937_64 rng(seed + 2);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    AdmissibleSet box;
    for (std::size_t t = 0; t < trials; ++t) {
        auto spec = detail::random_problem(rng);
        for (auto& v : spec.phi) v += 0.1;  // keep u(T) away from zero everywhere
        const double lambda = 1.0 / detail::sup(spec.phi);
        auto q2 = random_admissible(spec.mesh.nodes(), box, rng);
        auto q1 = q2;
        const double shift = 0.05 + 0.5 * u01(rng);
        for (auto& v : q1) v = std::min(box.beta, v + shift * (0.2 + 0.8 * u01(rng)));
        const double before = detail::max_abs_diff_values(q1, q2);
        std::vector<double> p1(q1), p2(q2);
        try {
            const auto u1 = solve_forward(detail::with_q(spec, q1), scheme);
            const auto u2 = solve_forward(detail::with_q(spec, q2), scheme);
            for (std::size_t i = 0; i < p1.size(); ++i) {
                p1[i] += lambda * u1.last()[i];
                p2[i] += lambda * u2.last()[i];
            }
        } catch (const DomainError& err) {
            detail::record(c, std::numeric_limits<double>::infinity(), detail::where(t, seed) + ": " + err.what());
            continue;
        }
        const double after = detail::max_abs_diff_values(p1, p2);
        const double excess = after / before - 1.0;
        detail::record(c, excess,
                       detail::where(t, seed) + ": ||P[q1]-P[q2]|| = " + format_number(after) +
                           " vs ||q1-q2|| = " + format_number(before));
    }
    return c;
}

/// <G, d> against a central difference of the discrete cost, alternating
/// between J and J_sigma. Excess is the relative error.
inline PropertyCheck check_gradient(std::size_t trials, std::uint64_t seed) {
    PropertyCheck c{"gradient-fd", trials, 0, 0.0, 1e-6, {}};
    std::mt19937_64 rng(seed + 3);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (std::size_t t = 0; t < trials; ++t) {
        auto spec = detail::random_problem(rng, 40, 80);
        const Mesh& mesh = spec.mesh;
        AdmissibleSet set;
        set.N = 1e-3;
        const Functional fn = t % 2 == 0 ? Functional::terminal() : Functional::windowed(4.0 * mesh.dt);
        std::vector<double> q(mesh.nodes()), g(mesh.nodes()), d(mesh.nodes());
        const double a = u01(rng), b = 1.0 + 4.0 * u01(rng);
        for (std::size_t i = 0; i < q.size(); ++i) {
            q[i] = 1.0 + 0.5 * a * std::cos(b * mesh.node(i));
            g[i] = 0.2 + 0.3 * u01(rng);
            d[i] = 2.0 * u01(rng) - 1.0;
        }
        const auto G = evaluate(q, g, set, spec, fn).gradient;
        // Central quotient at h and h/2, Richardson-combined. A tiny step
        // drowns in cost round-off when d is nearly orthogonal to G.
        const auto quotient = [&](double eps) {
            std::vector<double> qp = q, qm = q;
            for (std::size_t i = 0; i < q.size(); ++i) {
                qp[i] += eps * d[i];
                qm[i] -= eps * d[i];
            }
            return (cost(qp, g, set, spec, fn).total - cost(qm, g, set, spec, fn).total) / (2.0 * eps);
        };
        const double h = 2e-3;
        const double fd = (4.0 * quotient(0.5 * h) - quotient(h)) / 3.0;
        double adj = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) adj += G[i] * d[i];
        const double rel = std::abs(adj - fd) / std::max(std::abs(adj), 1e-300);
        detail::record(c, rel,
                       detail::where(t, seed) + (fn.is_windowed() ? " J_sigma" : " J") + ": adjoint " +
                           format_number(adj) + ", difference quotient " + format_number(fd));
    }
    return c;
}

/// <xi(T), r>_W = <G(r), d> between the sensitivity and adjoint solves.
/// Excess is the relative gap.
inline PropertyCheck check_duality(std::size_t trials, std::uint64_t seed) {
    PropertyCheck c{"duality", trials, 0, 0.0, 1e-10, {}};
    std::mt19937_64 rng(seed + 4);
    std::uniform_real_distribution<double> r(-1.0, 1.0);
    for (std::size_t t = 0; t < trials; ++t) {
        const auto spec = detail::random_problem(rng);
        const Mesh& mesh = spec.mesh;
        std::vector<double> d(mesh.nodes()), residual(mesh.nodes());
        for (auto& v : d) v = r(rng);
        for (auto& v : residual) v = r(rng);
        const auto u = solve_forward(spec);
        const auto xi = solve_sensitivity(spec, u, d);
        const auto G = misfit_gradient(mesh, u, solve_adjoint(spec, TerminalData::pure(residual)));
        double lhs = 0.0, rhs = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            lhs += mesh.weight(i) * xi.last()[i] * residual[i];
            rhs += G[i] * d[i];
            scale += std::abs(G[i] * d[i]);
        }
        const double rel = std::abs(lhs - rhs) / std::max(scale, 1e-300);
        detail::record(c, rel, detail::where(t, seed) + ": sensitivity side " + format_number(lhs) +
                                   ", adjoint side " + format_number(rhs));
    }
    return c;
}

inline PropertyReport run_property_suite(const PropertySuiteConfig& cfg) {
    PropertyReport r;
    r.checks.push_back(check_maximum_principle(cfg.max_principle_trials, cfg.seed, cfg.scheme));
    r.checks.push_back(check_adjoint_bound(cfg.adjoint_trials, cfg.seed));
    r.checks.push_back(check_monotone_contraction(cfg.contraction_trials, cfg.seed, cfg.scheme));
    r.checks.push_back(check_gradient(cfg.gradient_trials, cfg.seed));
    r.checks.push_back(check_duality(cfg.duality_trials, cfg.seed));
    return r;
}

/// Same number of trials for every check.
inline PropertyReport run_property_suite(std::size_t trials, std::uint64_t seed,
                                         Scheme scheme = Scheme::backward_euler) {
    if (trials < 1) throw DomainError("property suite: trials must be >= 1");
    PropertySuiteConfig cfg;
    cfg.max_principle_trials = cfg.adjoint_trials = cfg.contraction_trials = cfg.gradient_trials =
        cfg.duality_trials = trials;
    cfg.seed = seed;
    cfg.scheme = scheme;
    return run_property_suite(cfg);
}

}  // namespace radinv
