#pragma once

// Tikhonov cost functionals for the radiative coefficient and their exact
// discrete gradients.
//
//   J(q)       = 1/2 ||u(., T; q) - g||^2 + N/2 ||q'||^2
//   J_sigma(q) = 1/(2 sigma) int_{T-sigma}^T ||u(., t; q) - g||^2 dt + N/2 ||q'||^2
//
// Spatial integrals use the trapezoid rule, the regularizer uses face
// differences. Gradients are Euclidean components with respect to nodal q
// values: <G, d> is the directional derivative of the discrete cost.

#include "radinv/adjoint.hpp"
#include "radinv/error.hpp"
#include "radinv/forward.hpp"
#include "radinv/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace radinv {

struct AdmissibleSet {
    double alpha = 0.5;
    double beta = 2.0;
    double N = 1e-6;  // regularization weight
    bool pin_endpoints = false;
    double pin_left = 1.0;   // q(0) when pinned
    double pin_right = 1.0;  // q(l) when pinned

    void validate() const {
        if (!(alpha > 0.0) || !(beta >= alpha) || !std::isfinite(beta))
            throw DomainError("admissible set: need 0 < alpha <= beta < inf");
        if (!(N >= 0.0) || !std::isfinite(N)) throw DomainError("admissible set: N must be >= 0");
        if (pin_endpoints && (pin_left < alpha || pin_left > beta || pin_right < alpha || pin_right > beta))
            throw DomainError("admissible set: pinned endpoint values must lie in [alpha, beta]");
    }
};

/// Which functional to minimize: J when sigma == 0, J_sigma otherwise.
struct Functional {
    double sigma = 0.0;

    static Functional terminal() { return {}; }
    static Functional windowed(double s) { return {s}; }
    bool is_windowed() const noexcept { return sigma > 0.0; }
};

struct CostBreakdown {
    double misfit = 0.0;
    double regularizer = 0.0;
    double total = 0.0;
};

/// Cost, gradient and the forward field they were computed from.
struct Evaluation {
    CostBreakdown cost;
    std::vector<double> gradient;
    SpaceTimeField u;
};

inline void check_admissible(std::span<const double> q, const AdmissibleSet& set) {
    set.validate();
    const double slack = 1e-12 * std::max(1.0, set.beta);
    std::string bad;
    std::size_t count = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (!(q[i] >= set.alpha - slack && q[i] <= set.beta + slack)) {
            if (count < 16) bad += (bad.empty() ? "" : ", ") + std::to_string(i);
            ++count;
        }
    }
    if (count > 0)
        throw DomainError("objective: q outside [alpha, beta] at nodes " + bad +
                          (count > 16 ? " (" + std::to_string(count) + " total)" : ""));
}

/// (N/2) sum_faces ((q_{i+1} - q_i)/h)^2 h
inline double regularizer(const Mesh& mesh, std::span<const double> q, double N) {
    double s = 0.0;
    for (std::size_t f = 0; f + 1 < q.size(); ++f) {
        const double d = (q[f + 1] - q[f]) / mesh.spacing;
        s += d * d * mesh.spacing;
    }
    return 0.5 * N * s;
}

/// N K q with K the Neumann stiffness matrix of the face differences.
inline std::vector<double> regularizer_gradient(const Mesh& mesh, std::span<const double> q, double N) {
    std::vector<double> g(q.size(), 0.0);
    for (std::size_t f = 0; f + 1 < q.size(); ++f) {
        const double c = N * (q[f + 1] - q[f]) / mesh.spacing;
        g[f] -= c;
        g[f + 1] += c;
    }
    return g;
}

namespace detail {

inline ProblemSpec with_q(const ProblemSpec& base, std::span<const double> q) {
    ProblemSpec s = base;
    s.q.assign(q.begin(), q.end());
    return s;
}

inline double misfit_value(const Mesh& mesh, const SpaceTimeField& u, std::span<const double> g,
                           Functional fn) {
    auto level = [&](std::size_t n) {
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double r = u(n, i) - g[i];
            s += mesh.weight(i) * r * r;
        }
        return s;
    };
    if (!fn.is_windowed()) return 0.5 * level(mesh.steps);
    const std::size_t first = window_first_level(mesh, fn.sigma);
    double s = 0.0;
    for (std::size_t n = first; n <= mesh.steps; ++n) s += mesh.dt * level(n);
    return s / (2.0 * fn.sigma);
}

inline void check_data(const ProblemSpec& spec, std::span<const double> q, std::span<const double> g) {
    if (q.size() != spec.mesh.nodes()) throw DomainError("objective: q has wrong size");
    if (g.size() != spec.mesh.nodes()) throw DomainError("objective: data g has wrong size");
}

}  // namespace detail

inline CostBreakdown cost(std::span<const double> q, std::span<const double> g, const AdmissibleSet& set,
                          const ProblemSpec& spec, Functional fn) {
    detail::check_data(spec, q, g);
    check_admissible(q, set);
    if (fn.is_windowed()) (void)window_steps(spec.mesh, fn.sigma);
    const SpaceTimeField u = solve_forward(detail::with_q(spec, q));
    CostBreakdown c;
    c.misfit = detail::misfit_value(spec.mesh, u, g, fn);
    c.regularizer = regularizer(spec.mesh, q, set.N);
    c.total = c.misfit + c.regularizer;
    return c;
}

inline CostBreakdown cost_J(std::span<const double> q, std::span<const double> g, const AdmissibleSet& set,
                            const ProblemSpec& spec) {
    return cost(q, g, set, spec, Functional::terminal());
}

inline CostBreakdown cost_J_sigma(std::span<const double> q, std::span<const double> g,
                                  const AdmissibleSet& set, double sigma, const ProblemSpec& spec) {
    return cost(q, g, set, spec, Functional::windowed(sigma));
}

/// One forward and one adjoint solve: cost, gradient and forward field.
inline Evaluation evaluate(std::span<const double> q, std::span<const double> g, const AdmissibleSet& set,
                           const ProblemSpec& spec, Functional fn) {
    detail::check_data(spec, q, g);
    check_admissible(q, set);
    const ProblemSpec trial = detail::with_q(spec, q);
    Evaluation ev;
    ev.u = solve_forward(trial);
    const Mesh& mesh = spec.mesh;
    ev.cost.misfit = detail::misfit_value(mesh, ev.u, g, fn);
    ev.cost.regularizer = regularizer(mesh, q, set.N);
    ev.cost.total = ev.cost.misfit + ev.cost.regularizer;

    TerminalData data;
    if (fn.is_windowed()) {
        data = TerminalData::windowed(mesh, ev.u, g, fn.sigma);
    } else {
        std::vector<double> r(mesh.nodes());
        const auto uT = ev.u.last();
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = uT[i] - g[i];
        data = TerminalData::pure(std::move(r));
    }
    const SpaceTimeField p = solve_adjoint(trial, data);
    ev.gradient = misfit_gradient(mesh, ev.u, p);
    const auto reg = regularizer_gradient(mesh, q, set.N);
    for (std::size_t i = 0; i < reg.size(); ++i) ev.gradient[i] += reg[i];
    if (set.pin_endpoints) ev.gradient.front() = ev.gradient.back() = 0.0;
    return ev;
}

inline std::vector<double> gradient_J(std::span<const double> q, std::span<const double> g,
                                      const AdmissibleSet& set, const ProblemSpec& spec) {
    return evaluate(q, g, set, spec, Functional::terminal()).gradient;
}

inline std::vector<double> gradient_J_sigma(std::span<const double> q, std::span<const double> g,
                                            const AdmissibleSet& set, double sigma, const ProblemSpec& spec) {
    return evaluate(q, g, set, spec, Functional::windowed(sigma)).gradient;
}

/// Gradient density (G_i / w_i): the L2 representative of the gradient.
inline std::vector<double> gradient_density(const Mesh& mesh, std::span<const double> G) {
    std::vector<double> d(G.begin(), G.end());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] /= mesh.weight(i);
    return d;
}

/// Random admissible comparison function: uniform nodal values in
/// [alpha, beta] smoothed by a few three-point averages (which keep the box).
inline std::vector<double> random_admissible(std::size_t nodes, const AdmissibleSet& set, std::mt19937_64& rng,
                                             int smoothing_passes = 4) {
    std::uniform_real_distribution<double> dist(set.alpha, set.beta);
    std::vector<double> h(nodes);
    for (auto& v : h) v = dist(rng);
    std::vector<double> tmp(nodes);
    for (int pass = 0; pass < smoothing_passes; ++pass) {
        for (std::size_t i = 0; i < nodes; ++i) {
            const double l = h[i == 0 ? 0 : i - 1];
            const double r = h[i + 1 == nodes ? i : i + 1];
            tmp[i] = 0.25 * l + 0.5 * h[i] + 0.25 * r;
        }
        h.swap(tmp);
    }
    if (set.pin_endpoints) {
        h.front() = set.pin_left;
        h.back() = set.pin_right;
    }
    return h;
}

/// Smallest sampled value of the discrete variational inequality
///   <G(q), h - q>  =  sum uv (q - h) - N <q', (q - h)'>  >= 0,  h in A.
/// A value >= -tol means no sampled h violates first-order optimality.
inline double check_necessary_condition(std::span<const double> q, std::span<const double> g,
                                        const AdmissibleSet& set, const ProblemSpec& spec, Functional fn,
                                        std::size_t samples, std::uint64_t seed = 0) {
    const auto G = evaluate(q, g, set, spec, fn).gradient;
    std::mt19937_64 rng(seed);
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < samples; ++s) {
        const auto h = random_admissible(q.size(), set, rng);
        double v = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) v += G[i] * (h[i] - q[i]);
        worst = std::min(worst, v);
    }
    return worst;
}

}  // namespace radinv
