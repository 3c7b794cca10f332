#pragma once

// Fichera boundary classification for u_t - (a u_x)_x + q u = f written in
// the second-order form  a u_xx + a' u_x - u_t - q u = -f  with space-time
// coordinates (x_1, x_2) = (x, t):  a11 = a, a12 = a21 = a22 = 0,
// b1 = a', b2 = -1.

#include "radinv/catalog.hpp"
#include "radinv/error.hpp"
#include "radinv/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace radinv {

struct FicheraOperator {
    std::function<double(double)> a11;
    /// Analytic da11/dx. When empty, a clamped central difference is used.
    std::function<double(double)> a11_dx;
    std::function<double(double)> b1;
    double b2 = -1.0;

    /// The operator of the forward problem for a catalog coefficient, with
    /// analytic derivatives.
    static FicheraOperator forward_form(const CoefficientModel& a, double l) {
        FicheraOperator op;
        op.a11 = [a, l](double x) { return a.value(x, l); };
        op.a11_dx = [a, l](double x) { return a.derivative(x, l); };
        op.b1 = op.a11_dx;
        op.b2 = -1.0;
        return op;
    }
};

struct SpaceTimePoint {
    double x = 0.0;
    double t = 0.0;
};

struct Normal {
    double nx = 0.0;
    double nt = 0.0;
};

namespace detail {

/// Central difference with half-step `step`, with the stencil clamped to
/// [0, length] (one-sided at the ends).
inline double clamped_derivative(const std::function<double(double)>& f, double x, double step,
                                 double length) {
    const double lo = std::max(0.0, x - step);
    const double hi = std::min(length, x + step);
    return (f(hi) - f(lo)) / (hi - lo);
}

}  // namespace detail

/// Derivative of a11 at x: analytic if supplied, otherwise finite difference
/// with step `fd_step` clamped to [0, length].
inline double a11_derivative(const FicheraOperator& op, double x, double fd_step, double length) {
    if (op.a11_dx) return op.a11_dx(x);
    return detail::clamped_derivative(op.a11, x, fd_step, length);
}

/// B = sum_i (b_i - sum_j d a_ij / d x_j) n_i for an inward unit normal n.
inline double fichera_value(const FicheraOperator& op, SpaceTimePoint p, Normal n,
                            double fd_step = 1e-4, double length = 1.0) {
    const double norm = std::hypot(n.nx, n.nt);
    if (std::abs(norm - 1.0) > 1e-9)
        throw DomainError("fichera: inward normal must have unit length (got " +
                          std::to_string(norm) + ")");
    double value = 0.0;
    if (n.nx != 0.0) value += (op.b1(p.x) - a11_derivative(op, p.x, fd_step, length)) * n.nx;
    if (n.nt != 0.0) value += op.b2 * n.nt;  // a22 = a21 = 0, so no derivative term
    return value;
}

enum class BoundaryClass {
    non_characteristic,  // Gamma_1: data required
    no_data,             // Gamma_2: data must not be given
    data_required,       // Gamma_3: characteristic, data required
    indeterminate        // Fichera sign undefined (derivative blow-up)
};

inline std::string_view to_string(BoundaryClass c) {
    switch (c) {
        case BoundaryClass::non_characteristic: return "Gamma1";
        case BoundaryClass::no_data: return "Gamma2";
        case BoundaryClass::data_required: return "Gamma3";
        case BoundaryClass::indeterminate: return "indeterminate";
    }
    return "?";
}

struct SideReport {
    std::string side;  // "x=0", "x=l", "t=0", "t=T"
    BoundaryClass classification = BoundaryClass::indeterminate;
    std::vector<SpaceTimePoint> points;
    std::vector<double> fichera;    // B at each point (NaN where undefined)
    std::vector<double> quadratic;  // sum a_ij n_i n_j at each point
    bool derivative_blowup = false;
    std::string note;
};

struct BoundaryReport {
    std::array<SideReport, 4> sides;  // x=0, x=l, t=0, t=T

    const SideReport& side(std::string_view name) const {
        for (const auto& s : sides)
            if (s.side == name) return s;
        throw DomainError("fichera: unknown side " + std::string(name));
    }

    bool dirichlet_recommended() const {
        return sides[0].classification == BoundaryClass::indeterminate ||
               sides[1].classification == BoundaryClass::indeterminate;
    }
};

namespace detail {

/// One-sided difference quotients at an endpoint, at half steps h/2 and h/4.
/// A finite derivative gives quotients agreeing to O(h); an x^p vanishing
/// with p < 1 grows like step^(p-1).
inline bool endpoint_derivative_blows_up(const FicheraOperator& op, double x, double h,
                                         double length) {
    if (op.a11_dx) {
        const double d = op.a11_dx(x);
        return !std::isfinite(d);
    }
    const double d1 = detail::clamped_derivative(op.a11, x, 0.5 * h, length);
    const double d2 = detail::clamped_derivative(op.a11, x, 0.25 * h, length);
    if (!std::isfinite(d1) || !std::isfinite(d2)) return true;
    return std::abs(d2 - d1) > 0.25 * std::max(std::abs(d1), 1e-300);
}

}  // namespace detail

inline BoundaryReport classify_rectangle(const FicheraOperator& op, const Mesh& mesh) {
    const double l = mesh.length;
    const double T = mesh.final_time;
    const double step = 0.5 * mesh.spacing;

    double scale = 0.0;
    for (std::size_t i = 0; i < mesh.nodes(); ++i) scale = std::max(scale, std::abs(op.a11(mesh.node(i))));
    const double zero = kDegeneracyTolerance * std::max(scale, 1e-300);

    auto classify = [&](double quad, double b) {
        if (quad > zero) return BoundaryClass::non_characteristic;
        if (!std::isfinite(b)) return BoundaryClass::indeterminate;
        return b >= 0.0 ? BoundaryClass::no_data : BoundaryClass::data_required;
    };

    BoundaryReport report;

    // Spatial sides: B does not depend on t; sample at three time levels.
    const std::array<double, 3> times{0.0, 0.5 * T, T};
    for (int s = 0; s < 2; ++s) {
        SideReport& side = report.sides[s];
        const double x = s == 0 ? 0.0 : l;
        const Normal n{s == 0 ? 1.0 : -1.0, 0.0};
        side.side = s == 0 ? "x=0" : "x=l";
        const double quad = op.a11(x) * n.nx * n.nx;
        const bool blowup = quad <= zero && detail::endpoint_derivative_blows_up(op, x, mesh.spacing, l);
        side.derivative_blowup = blowup;
        BoundaryClass cls = BoundaryClass::indeterminate;
        for (std::size_t k = 0; k < times.size(); ++k) {
            const SpaceTimePoint p{x, times[k]};
            double b = fichera_value(op, p, n, step, l);
            if (blowup) b = std::numeric_limits<double>::quiet_NaN();
            side.points.push_back(p);
            side.fichera.push_back(b);
            side.quadratic.push_back(quad);
            const BoundaryClass c = classify(quad, b);
            cls = k == 0 ? c : (c == cls ? cls : BoundaryClass::indeterminate);
        }
        side.classification = cls;
        if (blowup)
            side.note = "a' unbounded at the endpoint; Fichera sign undefined, Dirichlet data recommended";
        else if (cls == BoundaryClass::no_data)
            side.note = "degenerate boundary, no boundary data";
        else if (cls == BoundaryClass::non_characteristic)
            side.note = "non-characteristic boundary, boundary data required";
    }

    // Temporal sides: a22 = 0 so both are characteristic; sign of B = +/- b2.
    for (int s = 0; s < 2; ++s) {
        SideReport& side = report.sides[2 + s];
        const double t = s == 0 ? 0.0 : T;
        const Normal n{0.0, s == 0 ? 1.0 : -1.0};
        side.side = s == 0 ? "t=0" : "t=T";
        BoundaryClass cls = BoundaryClass::indeterminate;
        for (std::size_t i = 0; i < mesh.nodes(); ++i) {
            const SpaceTimePoint p{mesh.node(i), t};
            const double b = fichera_value(op, p, n, step, l);
            side.points.push_back(p);
            side.fichera.push_back(b);
            side.quadratic.push_back(0.0);
            const BoundaryClass c = classify(0.0, b);
            cls = i == 0 ? c : (c == cls ? cls : BoundaryClass::indeterminate);
        }
        side.classification = cls;
        side.note = cls == BoundaryClass::data_required ? "initial data required"
                                                        : "no data at the final time";
    }
    return report;
}

}  // namespace radinv
