#pragma once

#include "radinv/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace radinv {

/// Uniform space-time mesh of (0, l) x (0, T].
///
/// Nodes sit at x_i = i*h for i = 0..M, faces at x_{i+1/2} = (i + 1/2)*h,
/// time levels at t_n = n*dt for n = 0..K.
struct Mesh {
    double length = 1.0;
    std::size_t cells = 2;
    double spacing = 0.5;
    double final_time = 1.0;
    std::size_t steps = 1;
    double dt = 1.0;

    std::size_t nodes() const noexcept { return cells + 1; }
    std::size_t levels() const noexcept { return steps + 1; }
    double node(std::size_t i) const noexcept {
        return i == cells ? length : static_cast<double>(i) * spacing;
    }
    double face(std::size_t i) const noexcept { return (static_cast<double>(i) + 0.5) * spacing; }
    double time(std::size_t n) const noexcept { return static_cast<double>(n) * dt; }

    /// Trapezoid weight of node i (h/2 at the ends, h inside).
    double weight(std::size_t i) const noexcept {
        return (i == 0 || i == cells) ? 0.5 * spacing : spacing;
    }

    std::vector<double> weights() const {
        std::vector<double> w(nodes());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = weight(i);
        return w;
    }

    friend bool operator==(const Mesh&, const Mesh&) = default;
};

inline Mesh build_mesh(double length, std::size_t cells, double final_time, std::size_t steps) {
    if (!std::isfinite(length) || length <= 0.0)
        throw DomainError("mesh: length must be positive and finite");
    if (!std::isfinite(final_time) || final_time <= 0.0)
        throw DomainError("mesh: final time must be positive and finite");
    if (cells < 2) throw DomainError("mesh: at least 2 spatial cells required");
    if (steps < 1) throw DomainError("mesh: at least 1 time step required");
    Mesh m;
    m.length = length;
    m.cells = cells;
    m.spacing = length / static_cast<double>(cells);
    m.final_time = final_time;
    m.steps = steps;
    m.dt = final_time / static_cast<double>(steps);
    return m;
}

/// Mesh with both spatial cells and time steps doubled.
inline Mesh refine(const Mesh& m) {
    return build_mesh(m.length, 2 * m.cells, m.final_time, 2 * m.steps);
}

enum class Degeneracy { strong, weak, uniformly_elliptic };

inline std::string_view to_string(Degeneracy d) {
    switch (d) {
        case Degeneracy::strong: return "strong-degenerate";
        case Degeneracy::weak: return "weak-degenerate";
        case Degeneracy::uniformly_elliptic: return "uniformly-elliptic";
    }
    return "unknown";
}

/// Diffusion coefficient a(x) sampled at nodes and faces, with its
/// declared (and verified) degeneracy mode.
struct CoefficientSamples {
    std::vector<double> nodal;  // M + 1 values
    std::vector<double> faces;  // M values, faces[i] ~ a(x_{i+1/2}) (mean of adjacent nodes)
    Degeneracy mode = Degeneracy::strong;

    /// Endpoints carry homogeneous Dirichlet rows in this mode.
    bool dirichlet() const noexcept { return mode == Degeneracy::weak; }
};

/// Relative threshold under which an endpoint sample counts as zero.
inline constexpr double kDegeneracyTolerance = 1e-12;

inline CoefficientSamples sample_coefficient(const std::function<double(double)>& a,
                                             const Mesh& mesh, Degeneracy mode) {
    CoefficientSamples s;
    s.mode = mode;
    s.nodal.resize(mesh.nodes());
    s.faces.resize(mesh.cells);
    for (std::size_t i = 0; i < s.nodal.size(); ++i) s.nodal[i] = a(mesh.node(i));
    for (std::size_t i = 0; i < s.faces.size(); ++i)
        s.faces[i] = 0.5 * (s.nodal[i] + s.nodal[i + 1]);

    auto check = [](double v, std::string_view where, double x) {
        if (!std::isfinite(v))
            throw DomainError("coefficient: non-finite sample at " + std::string(where) +
                              " x=" + std::to_string(x));
        if (v < 0.0)
            throw DomainError("coefficient: negative sample at " + std::string(where) +
                              " x=" + std::to_string(x));
    };
    for (std::size_t i = 0; i < s.nodal.size(); ++i) check(s.nodal[i], "node", mesh.node(i));
    for (std::size_t i = 0; i < s.faces.size(); ++i) check(s.faces[i], "face", mesh.face(i));

    double scale = 0.0;
    for (double v : s.nodal) scale = std::max(scale, std::abs(v));
    const double zero = kDegeneracyTolerance * scale;

    switch (mode) {
        case Degeneracy::strong:
        case Degeneracy::weak: {
            if (std::abs(s.nodal.front()) > zero || std::abs(s.nodal.back()) > zero)
                throw DomainError(std::string("coefficient: ") + std::string(to_string(mode)) +
                                  " mode requires a(0) = a(l) = 0");
            for (std::size_t i = 1; i + 1 < s.nodal.size(); ++i)
                if (!(s.nodal[i] > 0.0))
                    throw DomainError("coefficient: a must be positive at interior node " +
                                      std::to_string(i));
            for (double v : s.faces)
                if (!(v > 0.0)) throw DomainError("coefficient: a must be positive at faces");
            // Endpoints are exact zeros from here on.
            s.nodal.front() = 0.0;
            s.nodal.back() = 0.0;
            break;
        }
        case Degeneracy::uniformly_elliptic: {
            const double lo = std::min(*std::min_element(s.nodal.begin(), s.nodal.end()),
                                       *std::min_element(s.faces.begin(), s.faces.end()));
            if (!(lo > 0.0))
                throw DomainError("coefficient: uniformly-elliptic mode requires a >= a0 > 0");
            break;
        }
    }
    return s;
}

/// Samples a nodal function x -> f(x) on the mesh.
inline std::vector<double> sample_nodes(const std::function<double(double)>& f, const Mesh& mesh) {
    std::vector<double> v(mesh.nodes());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(mesh.node(i));
    return v;
}

}  // namespace radinv
