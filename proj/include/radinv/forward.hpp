#pragma once

// Implicit finite-volume solver for
//     u_t - (a(x) u_x)_x + q(x) u = f,   u(x, 0) = phi(x)
// on a uniform mesh. Backward Euler in time; conservative fluxes
// a_{i+1/2} (u_{i+1} - u_i) / h; half control volumes at the two endpoints.
//
// One time step solves  B u^{n+1} = (W/dt) u^n + W f^{n+1}  with
// W = diag(trapezoid weights) and B = W/dt + S + W diag(q), S the symmetric
// stiffness matrix of the face fluxes. B is a symmetric M-matrix, which gives
// the discrete maximum principle and makes the step propagator
// E = B^{-1} W / dt self-adjoint in the W inner product.

#include "radinv/error.hpp"
#include "radinv/mesh.hpp"
#include "radinv/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace radinv {

/// Nodal values on every time level, row n = t_n.
class SpaceTimeField {
public:
    SpaceTimeField() = default;
    SpaceTimeField(std::size_t levels, std::size_t nodes, double fill = 0.0)
        : levels_(levels), nodes_(nodes), values_(levels * nodes, fill) {}

    std::size_t levels() const noexcept { return levels_; }
    std::size_t nodes() const noexcept { return nodes_; }

    std::span<double> row(std::size_t n) { return {values_.data() + n * nodes_, nodes_}; }
    std::span<const double> row(std::size_t n) const { return {values_.data() + n * nodes_, nodes_}; }
    std::span<const double> last() const { return row(levels_ - 1); }

    double& operator()(std::size_t n, std::size_t i) { return values_[n * nodes_ + i]; }
    double operator()(std::size_t n, std::size_t i) const { return values_[n * nodes_ + i]; }

    const std::vector<double>& values() const noexcept { return values_; }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    friend bool operator==(const SpaceTimeField&, const SpaceTimeField&) = default;

private:
    std::size_t levels_ = 0;
    std::size_t nodes_ = 0;
    std::vector<double> values_;
};

struct ProblemSpec {
    Mesh mesh;
    CoefficientSamples coeff;
    std::vector<double> q;
    std::vector<double> phi;
    /// f on every time level; empty means f = 0.
    std::optional<SpaceTimeField> source;

    void validate() const {
        const std::size_t n = mesh.nodes();
        if (coeff.nodal.size() != n || coeff.faces.size() != mesh.cells)
            throw DomainError("problem: coefficient samples do not match the mesh");
        if (q.size() != n) throw DomainError("problem: q has wrong size");
        if (phi.size() != n) throw DomainError("problem: phi has wrong size");
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(q[i]) || q[i] < 0.0)
                throw DomainError("problem: q must be finite and >= 0 (node " + std::to_string(i) + ")");
            if (!std::isfinite(phi[i]))
                throw DomainError("problem: phi must be finite (node " + std::to_string(i) + ")");
        }
        if (source && (source->levels() != mesh.levels() || source->nodes() != n))
            throw DomainError("problem: source field does not match the mesh");
    }
};

/// Backward-Euler step operator for fixed coefficients. Holds the factorized
/// step matrix B and applies the propagator E = B^{-1} W / dt.
class StepOperator {
public:
    /// `viscosity` is added to the face coefficients; `dirichlet` pins both
    /// endpoints to zero.
    StepOperator(const Mesh& mesh, std::span<const double> faces, std::span<const double> q,
                 double viscosity, bool dirichlet)
        : mesh_(mesh), weights_(mesh.weights()), dirichlet_(dirichlet) {
        const std::size_t n = mesh.nodes();
        const double h = mesh.spacing;
        lower_.assign(n, 0.0);
        diag_.assign(n, 0.0);
        upper_.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) diag_[i] = weights_[i] * (1.0 / mesh.dt + q[i]);
        for (std::size_t f = 0; f < mesh.cells; ++f) {
            const double c = (faces[f] + viscosity) / h;
            diag_[f] += c;
            diag_[f + 1] += c;
            upper_[f] = -c;
            lower_[f + 1] = -c;
        }
        if (dirichlet_) {
            // Endpoint values are identically zero, so their couplings drop out
            // and the matrix stays symmetric.
            diag_[0] = weights_[0] / mesh.dt;
            diag_[n - 1] = weights_[n - 1] / mesh.dt;
            upper_[0] = lower_[1] = 0.0;
            lower_[n - 1] = upper_[n - 2] = 0.0;
        }
        factor_ = TridiagonalFactor(lower_, diag_, upper_);
    }

    const std::vector<double>& lower() const noexcept { return lower_; }
    const std::vector<double>& diag() const noexcept { return diag_; }
    const std::vector<double>& upper() const noexcept { return upper_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    bool dirichlet() const noexcept { return dirichlet_; }

    /// out <- E (in + dt * src); `src` may be empty.
    void apply(std::span<const double> in, std::span<const double> src, std::span<double> out) const {
        const std::size_t n = out.size();
        const double inv_dt = 1.0 / mesh_.dt;
        for (std::size_t i = 0; i < n; ++i) {
            double r = in[i] * inv_dt;
            if (!src.empty()) r += src[i];
            out[i] = weights_[i] * r;
        }
        if (dirichlet_) out[0] = out[n - 1] = 0.0;
        factor_.solve(out);
    }

private:
    Mesh mesh_;
    std::vector<double> weights_;
    bool dirichlet_ = false;
    std::vector<double> lower_, diag_, upper_;
    TridiagonalFactor factor_;
};

/// Time integrator choice. Only backward Euler is a valid solver; the explicit
/// variant exists so the property suite can be shown to catch a broken scheme.
enum class Scheme { backward_euler, explicit_euler };

namespace detail {

inline void check_finite(std::span<const double> row, std::size_t level) {
    for (double v : row)
        if (!std::isfinite(v))
            throw DomainError("forward: non-finite value at time level " + std::to_string(level));
}

inline SpaceTimeField march(const ProblemSpec& spec, double viscosity, bool dirichlet,
                            Scheme scheme = Scheme::backward_euler) {
    spec.validate();
    const Mesh& mesh = spec.mesh;
    const std::size_t n = mesh.nodes();
    SpaceTimeField u(mesh.levels(), n);
    std::copy(spec.phi.begin(), spec.phi.end(), u.row(0).begin());

    if (scheme == Scheme::explicit_euler) {
        const auto w = mesh.weights();
        const double h = mesh.spacing;
        for (std::size_t k = 0; k < mesh.steps; ++k) {
            auto prev = u.row(k);
            auto next = u.row(k + 1);
            for (std::size_t i = 0; i < n; ++i) {
                double flux = 0.0;
                if (i > 0) flux -= (spec.coeff.faces[i - 1] + viscosity) * (prev[i] - prev[i - 1]) / h;
                if (i + 1 < n) flux += (spec.coeff.faces[i] + viscosity) * (prev[i + 1] - prev[i]) / h;
                const double f = spec.source ? (*spec.source)(k, i) : 0.0;
                next[i] = prev[i] + mesh.dt * (flux / w[i] - spec.q[i] * prev[i] + f);
            }
            if (dirichlet) next[0] = next[n - 1] = 0.0;
            check_finite(next, k + 1);
        }
        return u;
    }

    const StepOperator step(mesh, spec.coeff.faces, spec.q, viscosity, dirichlet);
    for (std::size_t k = 0; k < mesh.steps; ++k) {
        std::span<const double> src;
        if (spec.source) src = spec.source->row(k + 1);
        step.apply(u.row(k), src, u.row(k + 1));
        check_finite(u.row(k + 1), k + 1);
    }
    return u;
}

}  // namespace detail

/// Degenerate solve: zero flux through both endpoints in strong-degenerate
/// and uniformly-elliptic modes, homogeneous Dirichlet rows in weak mode.
inline SpaceTimeField solve_forward(const ProblemSpec& spec, Scheme scheme = Scheme::backward_euler) {
    return detail::march(spec, 0.0, spec.coeff.dirichlet(), scheme);
}

/// Vanishing-viscosity regularization: coefficient a + eps with homogeneous
/// Dirichlet data at both endpoints.
inline SpaceTimeField solve_forward_viscous(const ProblemSpec& spec, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("forward: viscosity must lie in (0, 1)");
    return detail::march(spec, eps, true);
}

/// max{ sup|f| / q0, sup|phi| } with q0 = min q. Requires q0 > 0 unless f = 0.
inline double max_principle_bound(const ProblemSpec& spec) {
    double phi_sup = 0.0;
    for (double v : spec.phi) phi_sup = std::max(phi_sup, std::abs(v));
    const double f_sup = spec.source ? spec.source->max_abs() : 0.0;
    if (f_sup == 0.0) return phi_sup;
    const double q0 = *std::min_element(spec.q.begin(), spec.q.end());
    if (!(q0 > 0.0)) throw DomainError("forward: maximum-principle bound needs min q > 0 when f != 0");
    return std::max(f_sup / q0, phi_sup);
}

struct EnergyReport {
    double sup_l2 = 0.0;       // max_n ||u(., t_n)||_{L2}
    double grad_energy = 0.0;  // sum_n dt sum_faces a |D_x u|^2 h
    double dt_energy = 0.0;    // sum_n dt sum_i w_i |D_t u|^2
};

/// L2 norm of a nodal vector under the trapezoid rule.
inline double l2_norm(const Mesh& mesh, std::span<const double> v) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += mesh.weight(i) * v[i] * v[i];
    return std::sqrt(s);
}

/// L2(Q) norm: trapezoid in space, left Riemann in time.
inline double l2_norm(const Mesh& mesh, const SpaceTimeField& u) {
    double s = 0.0;
    for (std::size_t n = 0; n < mesh.steps; ++n) {
        const double r = l2_norm(mesh, u.row(n));
        s += mesh.dt * r * r;
    }
    return std::sqrt(s);
}

inline EnergyReport energy_report(const SpaceTimeField& u, const ProblemSpec& spec) {
    const Mesh& mesh = spec.mesh;
    if (u.levels() != mesh.levels() || u.nodes() != mesh.nodes())
        throw DomainError("energy: field shape does not match the mesh");
    const double h = mesh.spacing;
    EnergyReport e;
    for (std::size_t n = 0; n < u.levels(); ++n) e.sup_l2 = std::max(e.sup_l2, l2_norm(mesh, u.row(n)));
    for (std::size_t n = 0; n < mesh.steps; ++n) {
        const auto cur = u.row(n);
        const auto nxt = u.row(n + 1);
        double grad = 0.0;
        for (std::size_t f = 0; f < mesh.cells; ++f) {
            const double d = (cur[f + 1] - cur[f]) / h;
            grad += spec.coeff.faces[f] * d * d * h;
        }
        double rate = 0.0;
        for (std::size_t i = 0; i < cur.size(); ++i) {
            const double d = (nxt[i] - cur[i]) / mesh.dt;
            rate += mesh.weight(i) * d * d;
        }
        e.grad_energy += mesh.dt * grad;
        e.dt_energy += mesh.dt * rate;
    }
    return e;
}

}  // namespace radinv
