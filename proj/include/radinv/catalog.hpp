#pragma once

// Named coefficient, initial-datum and profile families used by the CLI and
// the experiment harness. Each entry is a small value type with parameters.

#include "radinv/error.hpp"
#include "radinv/mesh.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

namespace radinv {

/// Diffusion coefficient a(x) on [0, l].
///   quadratic: amplitude * x (l - x)                  (strong degeneracy)
///   power:     amplitude * x^p (l - x)^r, 0 < p, r < 1 (weak degeneracy)
///   constant:  amplitude                               (uniformly elliptic)
struct CoefficientModel {
    enum class Kind { quadratic, power, constant };
    Kind kind = Kind::quadratic;
    double amplitude = 1.0;
    double left_exponent = 0.5;
    double right_exponent = 0.5;

    double value(double x, double l) const {
        switch (kind) {
            case Kind::quadratic: return amplitude * x * (l - x);
            case Kind::power:
                return amplitude * std::pow(std::max(x, 0.0), left_exponent) *
                       std::pow(std::max(l - x, 0.0), right_exponent);
            case Kind::constant: return amplitude;
        }
        return 0.0;
    }

    /// a'(x); +/-inf where the power family's derivative blows up.
    double derivative(double x, double l) const {
        switch (kind) {
            case Kind::quadratic: return amplitude * (l - 2.0 * x);
            case Kind::power: {
                const double inf = std::numeric_limits<double>::infinity();
                const double y = l - x;
                if (x <= 0.0) {
                    if (left_exponent < 1.0) return inf;
                    return left_exponent == 1.0 ? amplitude * std::pow(l, right_exponent) : 0.0;
                }
                if (y <= 0.0) {
                    if (right_exponent < 1.0) return -inf;
                    return right_exponent == 1.0 ? -amplitude * std::pow(l, left_exponent) : 0.0;
                }
                return amplitude * std::pow(x, left_exponent) * std::pow(y, right_exponent) *
                       (left_exponent / x - right_exponent / y);
            }
            case Kind::constant: return 0.0;
        }
        return 0.0;
    }

    Degeneracy mode() const {
        switch (kind) {
            case Kind::quadratic: return Degeneracy::strong;
            case Kind::power: return Degeneracy::weak;
            case Kind::constant: return Degeneracy::uniformly_elliptic;
        }
        return Degeneracy::strong;
    }

    CoefficientSamples sample(const Mesh& mesh) const {
        const double l = mesh.length;
        return sample_coefficient([&](double x) { return value(x, l); }, mesh, mode());
    }

    friend bool operator==(const CoefficientModel&, const CoefficientModel&) = default;
};

/// Initial datum phi(x): constant `value`, or value * sin(pi x / l).
struct InitialDatum {
    enum class Kind { constant, sine };
    Kind kind = Kind::constant;
    double value = 1.0;

    double at(double x, double l) const {
        return kind == Kind::constant ? value : value * std::sin(std::numbers::pi * x / l);
    }

    std::vector<double> sample(const Mesh& mesh) const {
        return sample_nodes([&](double x) { return at(x, mesh.length); }, mesh);
    }

    friend bool operator==(const InitialDatum&, const InitialDatum&) = default;
};

/// Target radiative coefficient q*(x).
///   constant: base
///   bump:     base + height * exp(-width (x - l/2)^2)
///   ramp:     base + (top - base) x / l
struct Profile {
    enum class Kind { constant, bump, ramp };
    Kind kind = Kind::constant;
    double base = 1.0;
    double height = 0.5;
    double width = 50.0;
    double top = 1.5;

    double at(double x, double l) const {
        switch (kind) {
            case Kind::constant: return base;
            case Kind::bump: {
                const double s = x - 0.5 * l;
                return base + height * std::exp(-width * s * s);
            }
            case Kind::ramp: return base + (top - base) * x / l;
        }
        return base;
    }

    std::vector<double> sample(const Mesh& mesh) const {
        return sample_nodes([&](double x) { return at(x, mesh.length); }, mesh);
    }

    friend bool operator==(const Profile&, const Profile&) = default;
};

inline std::string_view to_string(CoefficientModel::Kind k) {
    switch (k) {
        case CoefficientModel::Kind::quadratic: return "quadratic";
        case CoefficientModel::Kind::power: return "power";
        case CoefficientModel::Kind::constant: return "constant";
    }
    return "?";
}

inline std::string_view to_string(InitialDatum::Kind k) {
    return k == InitialDatum::Kind::constant ? "constant" : "sine";
}

inline std::string_view to_string(Profile::Kind k) {
    switch (k) {
        case Profile::Kind::constant: return "constant";
        case Profile::Kind::bump: return "bump";
        case Profile::Kind::ramp: return "ramp";
    }
    return "?";
}

inline std::optional<CoefficientModel::Kind> coefficient_kind(std::string_view s) {
    if (s == "quadratic") return CoefficientModel::Kind::quadratic;
    if (s == "power") return CoefficientModel::Kind::power;
    if (s == "constant") return CoefficientModel::Kind::constant;
    return std::nullopt;
}

inline std::optional<InitialDatum::Kind> initial_kind(std::string_view s) {
    if (s == "constant") return InitialDatum::Kind::constant;
    if (s == "sine") return InitialDatum::Kind::sine;
    return std::nullopt;
}

inline std::optional<Profile::Kind> profile_kind(std::string_view s) {
    if (s == "constant") return Profile::Kind::constant;
    if (s == "bump") return Profile::Kind::bump;
    if (s == "ramp") return Profile::Kind::ramp;
    return std::nullopt;
}

}  // namespace radinv
