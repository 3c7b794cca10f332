#pragma once

// Projected gradient descent over the admissible box and the fixed-point
// iteration  P[q] = q + lambda (u(., T; q) - g).

#include "radinv/error.hpp"
#include "radinv/forward.hpp"
#include "radinv/mesh.hpp"
#include "radinv/objective.hpp"
#include "radinv/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace radinv {

enum class Termination {
    gradient_tolerance,
    max_iterations,
    stalled_line_search,
    contraction_converged,
    contraction_violated
};

inline std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::gradient_tolerance: return "gradient-tolerance";
        case Termination::max_iterations: return "max-iterations";
        case Termination::stalled_line_search: return "stalled-line-search";
        case Termination::contraction_converged: return "contraction-converged";
        case Termination::contraction_violated: return "contraction-violated";
    }
    return "?";
}

struct InversionResult {
    std::vector<double> q_final;
    std::size_t iterations = 0;
    std::vector<CostBreakdown> cost_history;  // entry k = cost at iterate k
    /// Projected-gradient norms (descent) or sup-norm updates (fixed point).
    std::vector<double> grad_norm_history;
    Termination termination = Termination::max_iterations;
    /// Nodes on a bound with the gradient pushing outward at termination.
    std::vector<std::size_t> active_set;
    /// Fixed point only: nodes where u(., T) is below the information floor.
    std::vector<std::size_t> unidentifiable;
};

/// Nodewise clamp to [alpha, beta]; pinned endpoints overwritten.
inline std::vector<double> project(std::span<const double> q, const AdmissibleSet& set) {
    std::vector<double> p(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) p[i] = std::clamp(q[i], set.alpha, set.beta);
    if (set.pin_endpoints && !p.empty()) {
        p.front() = set.pin_left;
        p.back() = set.pin_right;
    }
    return p;
}

/// Inner product that turns the Euclidean gradient into a descent direction.
///   l2:      D = W^{-1} G                (L2 Riesz representative)
///   sobolev: D = (W + N K)^{-1} G        (H1 representative matching the regularizer)
enum class GradientMetric { l2, sobolev };

inline std::string_view to_string(GradientMetric m) { return m == GradientMetric::l2 ? "l2" : "sobolev"; }

struct StopCriteria {
    /// Absolute tolerance on the projected-gradient norm; when unset,
    /// relative_tol times the initial norm.
    std::optional<double> grad_tol;
    double relative_tol = 1e-8;
    std::size_t max_iter = 500;
};

struct DescentOptions {
    GradientMetric metric = GradientMetric::sobolev;
    double armijo = 1e-4;
    double shrink = 0.5;
    double initial_step = 1.0;
    std::size_t max_backtracks = 60;
};

namespace detail {

inline double weighted_norm(const Mesh& mesh, std::span<const double> v) { return l2_norm(mesh, v); }

/// Applies the inverse of the chosen metric to G.
inline std::vector<double> descent_direction(const Mesh& mesh, std::span<const double> G,
                                             const AdmissibleSet& set, GradientMetric metric) {
    const std::size_t n = G.size();
    std::vector<double> d(G.begin(), G.end());
    if (metric == GradientMetric::l2 || set.N == 0.0) {
        for (std::size_t i = 0; i < n; ++i) d[i] /= mesh.weight(i);
        return d;
    }
    std::vector<double> lower(n, 0.0), diag(n, 0.0), upper(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) diag[i] = mesh.weight(i);
    const double c = set.N / mesh.spacing;
    for (std::size_t f = 0; f + 1 < n; ++f) {
        diag[f] += c;
        diag[f + 1] += c;
        upper[f] = -c;
        lower[f + 1] = -c;
    }
    if (set.pin_endpoints) {
        // Pinned components stay fixed: identity rows, decoupled.
        diag[0] = diag[n - 1] = 1.0;
        upper[0] = lower[1] = 0.0;
        lower[n - 1] = upper[n - 2] = 0.0;
        d[0] = d[n - 1] = 0.0;
    }
    TridiagonalFactor(lower, diag, upper).solve(d);
    return d;
}

inline double projected_gradient_norm(const Mesh& mesh, std::span<const double> q, std::span<const double> D,
                                      const AdmissibleSet& set) {
    std::vector<double> trial(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) trial[i] = q[i] - D[i];
    const auto p = project(trial, set);
    for (std::size_t i = 0; i < q.size(); ++i) trial[i] = q[i] - p[i];
    return weighted_norm(mesh, trial);
}

inline std::vector<std::size_t> active_bounds(std::span<const double> q, std::span<const double> G,
                                              const AdmissibleSet& set) {
    std::vector<std::size_t> active;
    const std::size_t lo = set.pin_endpoints ? 1 : 0;
    const std::size_t hi = set.pin_endpoints ? q.size() - 1 : q.size();
    for (std::size_t i = lo; i < hi; ++i) {
        if ((q[i] <= set.alpha && G[i] > 0.0) || (q[i] >= set.beta && G[i] < 0.0)) active.push_back(i);
    }
    return active;
}

}  // namespace detail

/// Projected gradient descent with Armijo backtracking:
///   q_{k+1} = project(q_k - s_k D_k),
/// s_k = initial_step * shrink^j for the first j with
///   J(q_{k+1}) <= J(q_k) - armijo * <G_k, q_k - q_{k+1}>  and  J(q_{k+1}) < J(q_k).
inline InversionResult minimize(std::span<const double> q0, std::span<const double> g, const AdmissibleSet& set,
                                const ProblemSpec& spec, Functional fn, const StopCriteria& stop = {},
                                const DescentOptions& opt = {}) {
    set.validate();
    const Mesh& mesh = spec.mesh;
    std::vector<double> q = project(q0, set);
    Evaluation ev = evaluate(q, g, set, spec, fn);

    InversionResult res;
    res.cost_history.push_back(ev.cost);
    auto D = detail::descent_direction(mesh, ev.gradient, set, opt.metric);
    double pg = detail::projected_gradient_norm(mesh, q, D, set);
    res.grad_norm_history.push_back(pg);
    const double tol = stop.grad_tol ? *stop.grad_tol : stop.relative_tol * pg;

    res.termination = Termination::max_iterations;
    while (true) {
        if (pg <= tol) {
            res.termination = Termination::gradient_tolerance;
            break;
        }
        if (res.iterations >= stop.max_iter) break;

        double s = opt.initial_step;
        bool accepted = false;
        std::vector<double> trial(q.size());
        for (std::size_t j = 0; j < opt.max_backtracks; ++j, s *= opt.shrink) {
            for (std::size_t i = 0; i < q.size(); ++i) trial[i] = q[i] - s * D[i];
            trial = project(trial, set);
            double decrease = 0.0;
            for (std::size_t i = 0; i < q.size(); ++i) decrease += ev.gradient[i] * (q[i] - trial[i]);
            if (!(decrease > 0.0)) continue;
            const CostBreakdown c = cost(trial, g, set, spec, fn);
            if (c.total < ev.cost.total && c.total <= ev.cost.total - opt.armijo * decrease) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            res.termination = Termination::stalled_line_search;
            break;
        }
        q = std::move(trial);
        ev = evaluate(q, g, set, spec, fn);
        ++res.iterations;
        res.cost_history.push_back(ev.cost);
        D = detail::descent_direction(mesh, ev.gradient, set, opt.metric);
        pg = detail::projected_gradient_norm(mesh, q, D, set);
        res.grad_norm_history.push_back(pg);
    }
    res.active_set = detail::active_bounds(q, ev.gradient, set);
    res.q_final = std::move(q);
    return res;
}

/// u(., T; q) below this is treated as carrying no information about q.
inline constexpr double kInformationFloor = 1e-10;

/// Unprojected map P[q] = q + lambda (u(., T; q) - g).
inline std::vector<double> fixed_point_map(std::span<const double> q, std::span<const double> g, double lambda,
                                           const ProblemSpec& spec) {
    const auto u = solve_forward(detail::with_q(spec, q));
    const auto uT = u.last();
    std::vector<double> p(q.begin(), q.end());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += lambda * (uT[i] - g[i]);
    return p;
}

/// Rejects step sizes outside the contraction range lambda ||phi||_inf < 2.
inline void check_contraction_step(double lambda, std::span<const double> phi) {
    double sup = 0.0;
    for (double v : phi) sup = std::max(sup, std::abs(v));
    if (!(lambda > 0.0)) throw DomainError("fixed point: lambda must be positive");
    if (!(lambda * sup < 2.0))
        throw DomainError("fixed point: lambda * ||phi||_inf = " + std::to_string(lambda * sup) +
                          " violates the contraction condition (< 2)");
}

struct FixedPointStop {
    double tol = 1e-10;
    std::size_t max_iter = 500;
};

/// q_{k+1} = project(q_k + lambda (u(., T; q_k) - g)) until the sup-norm
/// update drops to tol. Nodes where u(., T) is below the information floor
/// are left unchanged and reported as unidentifiable.
inline InversionResult fixed_point(std::span<const double> q0, std::span<const double> g, double lambda,
                                   const AdmissibleSet& set, const ProblemSpec& spec,
                                   const FixedPointStop& stop = {}) {
    set.validate();
    check_contraction_step(lambda, spec.phi);
    if (g.size() != spec.mesh.nodes()) throw DomainError("fixed point: data g has wrong size");
    const Mesh& mesh = spec.mesh;
    std::vector<double> q = project(q0, set);

    InversionResult res;
    res.termination = Termination::max_iterations;
    std::vector<bool> flagged(q.size(), false);
    double previous_update = std::numeric_limits<double>::infinity();
    std::size_t growth = 0;

    while (res.iterations < stop.max_iter) {
        const auto u = solve_forward(detail::with_q(spec, q));
        const auto uT = u.last();
        CostBreakdown c;
        c.misfit = detail::misfit_value(mesh, u, g, Functional::terminal());
        c.regularizer = regularizer(mesh, q, set.N);
        c.total = c.misfit + c.regularizer;
        res.cost_history.push_back(c);

        std::vector<double> next(q.size());
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (std::abs(uT[i]) < kInformationFloor) {
                flagged[i] = true;
                next[i] = q[i];
            } else {
                next[i] = q[i] + lambda * (uT[i] - g[i]);
            }
        }
        next = project(next, set);
        double update = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) update = std::max(update, std::abs(next[i] - q[i]));
        res.grad_norm_history.push_back(update);
        q = std::move(next);
        ++res.iterations;

        if (update <= stop.tol) {
            res.termination = Termination::contraction_converged;
            break;
        }
        growth = update > previous_update ? growth + 1 : 0;
        previous_update = update;
        if (growth >= 10) {
            res.termination = Termination::contraction_violated;
            break;
        }
    }
    for (std::size_t i = 0; i < flagged.size(); ++i)
        if (flagged[i]) res.unidentifiable.push_back(i);
    res.q_final = std::move(q);
    return res;
}

}  // namespace radinv
