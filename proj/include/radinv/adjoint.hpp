#pragma once

// Discrete adjoint of the backward-Euler forward scheme.
//
// The forward propagator E = B^{-1} W / dt is self-adjoint in the W inner
// product, so the adjoint recursion runs the same step operator backward in
// time:  p[K] = terminal data,  p[n-1] = E (p[n] + dt s^n).
// Fields are stored in physical time order (row n = t_n).

#include "radinv/error.hpp"
#include "radinv/forward.hpp"
#include "radinv/mesh.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace radinv {

/// Number of whole time steps in an averaging window of length sigma.
/// Throws unless sigma is a positive integer multiple of dt not exceeding T.
inline std::size_t window_steps(const Mesh& mesh, double sigma) {
    if (!(sigma > 0.0) || sigma > mesh.final_time * (1.0 + 1e-12))
        throw DomainError("window: sigma must lie in (0, T]");
    const double ratio = sigma / mesh.dt;
    const double steps = std::round(ratio);
    if (steps < 1.0 || std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio))
        throw DomainError("window: sigma must be an integer multiple of dt");
    return static_cast<std::size_t>(steps);
}

/// First time level inside the window [T - sigma, T]; the window uses
/// levels first..K (right-endpoint rule, consistent with backward Euler).
inline std::size_t window_first_level(const Mesh& mesh, double sigma) {
    return mesh.steps - window_steps(mesh, sigma) + 1;
}

struct TerminalData {
    /// v(., T); all zeros for the windowed functional.
    std::vector<double> terminal;
    /// Distributed source (1/sigma)(u - g) on window levels, zero elsewhere.
    std::optional<SpaceTimeField> distributed;
    double sigma = 0.0;

    /// Pure terminal data v(., T) = residual.
    static TerminalData pure(std::vector<double> residual) {
        TerminalData d;
        d.terminal = std::move(residual);
        return d;
    }

    /// Data of the windowed functional (1/(2 sigma)) int_{T-sigma}^T ||u - g||^2.
    static TerminalData windowed(const Mesh& mesh, const SpaceTimeField& u, std::span<const double> g,
                                 double sigma) {
        const std::size_t first = window_first_level(mesh, sigma);
        TerminalData d;
        d.sigma = sigma;
        d.terminal.assign(mesh.nodes(), 0.0);
        SpaceTimeField s(mesh.levels(), mesh.nodes());
        for (std::size_t n = first; n <= mesh.steps; ++n)
            for (std::size_t i = 0; i < mesh.nodes(); ++i) s(n, i) = (u(n, i) - g[i]) / sigma;
        d.distributed = std::move(s);
        return d;
    }
};

/// Adjoint field p with p[K] = data.terminal and p[n-1] = E (p[n] + dt s^n).
inline SpaceTimeField solve_adjoint(const ProblemSpec& spec, const TerminalData& data) {
    spec.validate();
    const Mesh& mesh = spec.mesh;
    const std::size_t n = mesh.nodes();
    if (data.terminal.size() != n) throw DomainError("adjoint: terminal data has wrong size");
    if (data.sigma < 0.0 || data.sigma > mesh.final_time)
        throw DomainError("adjoint: sigma must lie in [0, T]");
    if (data.distributed && (data.distributed->levels() != mesh.levels() || data.distributed->nodes() != n))
        throw DomainError("adjoint: distributed source does not match the mesh");

    const StepOperator step(mesh, spec.coeff.faces, spec.q, 0.0, spec.coeff.dirichlet());
    SpaceTimeField p(mesh.levels(), n);
    std::copy(data.terminal.begin(), data.terminal.end(), p.row(mesh.steps).begin());
    if (spec.coeff.dirichlet()) p(mesh.steps, 0) = p(mesh.steps, n - 1) = 0.0;
    for (std::size_t k = mesh.steps; k > 0; --k) {
        std::span<const double> src;
        if (data.distributed) src = data.distributed->row(k);
        step.apply(p.row(k), src, p.row(k - 1));
        detail::check_finite(p.row(k - 1), k - 1);
    }
    return p;
}

/// Forward sensitivity xi = du/dq [d]:  xi^0 = 0,  xi^n = E (xi^{n-1} - dt d u^n).
inline SpaceTimeField solve_sensitivity(const ProblemSpec& spec, const SpaceTimeField& u,
                                        std::span<const double> direction) {
    spec.validate();
    const Mesh& mesh = spec.mesh;
    const std::size_t n = mesh.nodes();
    if (direction.size() != n) throw DomainError("sensitivity: direction has wrong size");
    const StepOperator step(mesh, spec.coeff.faces, spec.q, 0.0, spec.coeff.dirichlet());
    SpaceTimeField xi(mesh.levels(), n);
    std::vector<double> src(n);
    for (std::size_t k = 1; k <= mesh.steps; ++k) {
        for (std::size_t i = 0; i < n; ++i) src[i] = -direction[i] * u(k, i);
        step.apply(xi.row(k - 1), src, xi.row(k));
    }
    return xi;
}

/// Pairing  -dt sum_{n=1}^K w_i u^n_i p^{n-1}_i  at every node: the misfit
/// gradient with respect to nodal q values (Euclidean components).
inline std::vector<double> misfit_gradient(const Mesh& mesh, const SpaceTimeField& u,
                                           const SpaceTimeField& p) {
    std::vector<double> g(mesh.nodes(), 0.0);
    for (std::size_t k = 1; k <= mesh.steps; ++k) {
        const auto uk = u.row(k);
        const auto pk = p.row(k - 1);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += uk[i] * pk[i];
    }
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= -mesh.dt * mesh.weight(i);
    return g;
}

}  // namespace radinv
