#pragma once

#include "radinv/error.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace radinv {

/// Thomas-algorithm factorization of a tridiagonal matrix, reusable across
/// right-hand sides. lower[i] couples row i to i-1 (lower[0] unused),
/// upper[i] couples row i to i+1 (upper[n-1] unused).
class TridiagonalFactor {
public:
    TridiagonalFactor() = default;

    TridiagonalFactor(std::span<const double> lower, std::span<const double> diag,
                      std::span<const double> upper)
        : lower_(lower.begin(), lower.end()), pivot_(diag.size()), ratio_(diag.size(), 0.0) {
        const std::size_t n = diag.size();
        if (lower.size() != n || upper.size() != n)
            throw DomainError("tridiagonal: band sizes differ");
        if (n == 0) return;
        pivot_[0] = diag[0];
        check(0);
        for (std::size_t i = 1; i < n; ++i) {
            ratio_[i - 1] = upper[i - 1] / pivot_[i - 1];
            pivot_[i] = diag[i] - lower[i] * ratio_[i - 1];
            check(i);
        }
    }

    std::size_t size() const noexcept { return pivot_.size(); }

    /// Solves in place: rhs <- A^{-1} rhs.
    void solve(std::span<double> rhs) const {
        const std::size_t n = pivot_.size();
        if (rhs.size() != n) throw DomainError("tridiagonal: right-hand side has wrong size");
        if (n == 0) return;
        rhs[0] /= pivot_[0];
        for (std::size_t i = 1; i < n; ++i) rhs[i] = (rhs[i] - lower_[i] * rhs[i - 1]) / pivot_[i];
        for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= ratio_[i] * rhs[i + 1];
    }

private:
    void check(std::size_t i) const {
        if (!(std::abs(pivot_[i]) > 0.0) || !std::isfinite(pivot_[i]))
            throw DomainError("tridiagonal: elimination breakdown at row " + std::to_string(i));
    }

    std::vector<double> lower_;
    std::vector<double> pivot_;
    std::vector<double> ratio_;
};

}  // namespace radinv
