#pragma once

// Manufactured benchmarks, calibrated noise and the rate studies:
//   convergence: N = c * delta, windowed functional, pinned endpoints;
//                coefficient error and windowed residual against delta.
//   stability:   noise-free vs noisy data at fixed N; coefficient difference
//                against the data difference, and its dependence on N.
// Plus a randomized property suite for the solver invariants.

#include "radinv/adjoint.hpp"
#include "radinv/catalog.hpp"
#include "radinv/error.hpp"
#include "radinv/format.hpp"
#include "radinv/forward.hpp"
#include "radinv/mesh.hpp"
#include "radinv/objective.hpp"
#include "radinv/optimize.hpp"
#include "radinv/properties.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace radinv {

struct NoiseSpec {
    double delta = 0.0;
    std::uint64_t seed = 0;
};

/// g + e with e iid standard normal per node, rescaled so that the trapezoid
/// L2 norm of e equals delta exactly. Deterministic in the seed.
inline std::vector<double> add_noise(std::span<const double> g, const Mesh& mesh, const NoiseSpec& noise) {
    if (!(noise.delta >= 0.0)) throw DomainError("noise: delta must be >= 0");
    if (g.size() != mesh.nodes()) throw DomainError("noise: data has wrong size");
    std::vector<double> out(g.begin(), g.end());
    if (noise.delta == 0.0) return out;
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> e(g.size());
    for (auto& v : e) v = normal(rng);
    const double norm = l2_norm(mesh, e);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += noise.delta * e[i] / norm;
    return out;
}

/// Benchmark inverse problem with known coefficient.
struct Manufactured {
    ProblemSpec spec;  // working mesh, q = q*
    CoefficientModel coefficient;
    InitialDatum initial;
    Profile profile;
    std::vector<double> q_star;
    std::vector<double> g;  // u(., T; q*) from the refined mesh, restricted
};

/// Builds the working-mesh problem and computes exact data on the once-refined
/// mesh (2M cells, 2K steps), restricted to the working nodes.
inline Manufactured manufacture(const Profile& profile, const Mesh& mesh, const CoefficientModel& coefficient,
                                const InitialDatum& initial, const AdmissibleSet& set) {
    set.validate();
    Manufactured m;
    m.coefficient = coefficient;
    m.initial = initial;
    m.profile = profile;
    m.q_star = profile.sample(mesh);
    for (std::size_t i = 0; i < m.q_star.size(); ++i)
        if (m.q_star[i] < set.alpha || m.q_star[i] > set.beta)
            throw DomainError("manufacture: profile leaves [alpha, beta] at node " + std::to_string(i));

    m.spec.mesh = mesh;
    m.spec.coeff = coefficient.sample(mesh);
    m.spec.q = m.q_star;
    m.spec.phi = initial.sample(mesh);

    const Mesh fine = refine(mesh);
    ProblemSpec fine_spec;
    fine_spec.mesh = fine;
    fine_spec.coeff = coefficient.sample(fine);
    fine_spec.q = profile.sample(fine);
    fine_spec.phi = initial.sample(fine);
    const auto u = solve_forward(fine_spec);
    m.g.resize(mesh.nodes());
    for (std::size_t i = 0; i < mesh.nodes(); ++i) m.g[i] = u.last()[2 * i];
    return m;
}

/// One inversion cell of a study.
struct RateRow {
    double delta = 0.0;
    double N = 0.0;
    double sigma = 0.0;
    double coeff_err_l2 = 0.0;
    double coeff_err_max = 0.0;
    double residual_norm = 0.0;
    std::size_t iterations = 0;
    Termination termination = Termination::max_iterations;
};

/// Least-squares line log(y) = slope log(x) + log(constant).
struct LogLogFit {
    double slope = 0.0;
    double constant = 0.0;
    double residual = 0.0;  // RMS of the log-space residuals
    std::size_t points = 0;
};

inline LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("fit: need at least two points");
    const std::size_t n = x.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("fit: log-log fit needs positive values");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw DomainError("fit: abscissae must not all coincide");
    LogLogFit f;
    f.points = n;
    f.slope = sxy / sxx;
    const double intercept = my - f.slope * mx;
    f.constant = std::exp(intercept);
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (intercept + f.slope * lx[i]);
        rss += r * r;
    }
    f.residual = std::sqrt(rss / static_cast<double>(n));
    return f;
}

struct NamedFit {
    std::string name;
    LogLogFit fit;
};

struct RateReport {
    std::string study;
    std::vector<RateRow> rows;
    std::optional<RateRow> baseline;  // delta = 0 run, excluded from fits
    std::vector<NamedFit> fits;
    bool partial = false;  // some inner minimization stalled
    std::vector<std::string> notes;
    /// Stability study: points where the two recovered coefficients cross
    /// (one entry per row, NaN when they do not).
    std::vector<double> crossing_points;
    /// Stability study: max|q1 - q2| ratio when delta doubles, per N.
    std::vector<double> doubling_factors;

    const LogLogFit& fit(std::string_view name) const {
        for (const auto& f : fits)
            if (f.name == name) return f.fit;
        throw DomainError("report: no fit named " + std::string(name));
    }
};

namespace detail {

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline std::vector<double> diff(std::span<const double> a, std::span<const double> b) {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return d;
}

/// sqrt( (1/sigma) int_{T-sigma}^T ||u1 - u2||^2 dt ) with the window quadrature.
inline double windowed_residual(const Mesh& mesh, const SpaceTimeField& u1, const SpaceTimeField& u2,
                                double sigma) {
    const std::size_t first = window_first_level(mesh, sigma);
    double s = 0.0;
    for (std::size_t n = first; n <= mesh.steps; ++n) {
        double level = 0.0;
        for (std::size_t i = 0; i < mesh.nodes(); ++i) {
            const double r = u1(n, i) - u2(n, i);
            level += mesh.weight(i) * r * r;
        }
        s += mesh.dt * level;
    }
    return std::sqrt(s / sigma);
}

/// Abscissa of the first sign change of q1 - q2 (linear interpolation);
/// NaN if the two never meet.
inline double crossing_point(const Mesh& mesh, std::span<const double> q1, std::span<const double> q2) {
    const auto d = diff(q1, q2);
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i] == 0.0) return mesh.node(i);
        if (i + 1 < d.size() && d[i] * d[i + 1] < 0.0)
            return mesh.node(i) + mesh.spacing * d[i] / (d[i] - d[i + 1]);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

struct ConvergenceConfig {
    Manufactured problem;
    AdmissibleSet set;  // N is overwritten per cell
    std::vector<double> deltas{1e-1, 1e-2, 1e-3};
    double coupling = 1.0;  // N = coupling * delta
    std::optional<double> sigma;  // default 4 dt
    double q0 = 1.0;              // constant initial guess (endpoints pinned)
    StopCriteria stop;
    DescentOptions descent;
    std::uint64_t seed = 0;
    bool include_baseline = true;
};

inline RateReport run_convergence_study(const ConvergenceConfig& cfg) {
    const Manufactured& p = cfg.problem;
    const Mesh& mesh = p.spec.mesh;
    if (cfg.deltas.size() < 2) throw DomainError("convergence study: need at least two noise levels");
    for (std::size_t k = 0; k < cfg.deltas.size(); ++k) {
        if (!(cfg.deltas[k] > 0.0)) throw DomainError("convergence study: deltas must be positive");
        if (k > 0 && !(cfg.deltas[k] < cfg.deltas[k - 1]))
            throw DomainError("convergence study: deltas must be decreasing");
    }
    if (!(cfg.coupling > 0.0)) throw DomainError("convergence study: coupling must be positive");
    const double sigma = cfg.sigma.value_or(4.0 * mesh.dt);
    (void)window_steps(mesh, sigma);

    AdmissibleSet set = cfg.set;
    set.pin_endpoints = true;
    set.pin_left = p.q_star.front();
    set.pin_right = p.q_star.back();

    const SpaceTimeField u_star = solve_forward(p.spec);
    const std::vector<double> q0(mesh.nodes(), cfg.q0);

    auto run_cell = [&](double delta, std::uint64_t seed) {
        AdmissibleSet cell = set;
        cell.N = delta > 0.0 ? cfg.coupling * delta : cfg.coupling * cfg.deltas.back();
        const auto g = add_noise(p.g, mesh, {delta, seed});
        const auto res = minimize(q0, g, cell, p.spec, Functional::windowed(sigma), cfg.stop, cfg.descent);
        auto spec = p.spec;
        spec.q = res.q_final;
        const auto u = solve_forward(spec);
        RateRow row;
        row.delta = delta;
        row.N = cell.N;
        row.sigma = sigma;
        const auto e = detail::diff(res.q_final, p.q_star);
        row.coeff_err_l2 = l2_norm(mesh, e);
        row.coeff_err_max = detail::max_abs_diff(res.q_final, p.q_star);
        row.residual_norm = detail::windowed_residual(mesh, u, u_star, sigma);
        row.iterations = res.iterations;
        row.termination = res.termination;
        return row;
    };

    RateReport report;
    report.study = "convergence";
    for (std::size_t k = 0; k < cfg.deltas.size(); ++k) {
        report.rows.push_back(run_cell(cfg.deltas[k], cfg.seed + k));
        if (report.rows.back().termination == Termination::stalled_line_search) report.partial = true;
    }
    if (cfg.include_baseline) report.baseline = run_cell(0.0, cfg.seed);

    std::vector<double> d, el2, emax, res;
    for (const auto& r : report.rows) {
        d.push_back(r.delta);
        el2.push_back(r.coeff_err_l2);
        emax.push_back(r.coeff_err_max);
        res.push_back(r.residual_norm);
    }
    report.fits.push_back({"coeff_err_l2", fit_loglog(d, el2)});
    report.fits.push_back({"coeff_err_max", fit_loglog(d, emax)});
    report.fits.push_back({"residual_norm", fit_loglog(d, res)});
    if (report.partial) report.notes.push_back("at least one inversion stalled in the line search");
    return report;
}

struct StabilityConfig {
    Manufactured problem;
    AdmissibleSet set;  // N is overwritten per sweep entry
    std::vector<double> Ns{1e-2, 1e-3, 1e-4};
    std::vector<double> deltas{1e-3, 2e-3};
    double q0 = 1.0;
    StopCriteria stop;
    DescentOptions descent;
    std::uint64_t seed = 0;
};

/// For each N: invert noise-free data g and noisy data g^delta from the same
/// q0 with the terminal functional J, record max|q1 - q2| against
/// ||g - g^delta||. Fits per-N slopes in delta and the N-exponent of the
/// Lipschitz ratio max|q1 - q2| / ||g - g^delta||.
inline RateReport run_stability_study(const StabilityConfig& cfg) {
    const Manufactured& p = cfg.problem;
    const Mesh& mesh = p.spec.mesh;
    if (cfg.Ns.empty() || cfg.deltas.empty()) throw DomainError("stability study: empty sweep");
    for (double d : cfg.deltas)
        if (!(d >= 0.0)) throw DomainError("stability study: deltas must be >= 0");
    for (double N : cfg.Ns)
        if (!(N > 0.0)) throw DomainError("stability study: N must be positive");

    const std::vector<double> q0(mesh.nodes(), cfg.q0);
    RateReport report;
    report.study = "stability";

    std::vector<double> Ns_fit, ratios;
    for (std::size_t j = 0; j < cfg.Ns.size(); ++j) {
        AdmissibleSet set = cfg.set;
        set.N = cfg.Ns[j];
        const auto clean = minimize(q0, p.g, set, p.spec, Functional::terminal(), cfg.stop, cfg.descent);
        if (clean.termination == Termination::stalled_line_search) report.partial = true;
        std::vector<double> ratio_here, diffs_here, deltas_here;
        for (std::size_t k = 0; k < cfg.deltas.size(); ++k) {
            // Same noise direction for every delta, so doubling delta doubles
            // the data perturbation exactly.
            const auto g_noisy = add_noise(p.g, mesh, {cfg.deltas[k], cfg.seed});
            const auto noisy = minimize(q0, g_noisy, set, p.spec, Functional::terminal(), cfg.stop, cfg.descent);
            if (noisy.termination == Termination::stalled_line_search) report.partial = true;
            RateRow row;
            row.delta = cfg.deltas[k];
            row.N = set.N;
            const auto d = detail::diff(noisy.q_final, clean.q_final);
            row.coeff_err_l2 = l2_norm(mesh, d);
            row.coeff_err_max = detail::max_abs_diff(noisy.q_final, clean.q_final);
            row.residual_norm = l2_norm(mesh, detail::diff(g_noisy, p.g));
            row.iterations = noisy.iterations;
            row.termination = noisy.termination;
            report.rows.push_back(row);
            report.crossing_points.push_back(detail::crossing_point(mesh, noisy.q_final, clean.q_final));
            if (row.delta > 0.0 && row.coeff_err_max > 0.0) {
                ratio_here.push_back(row.coeff_err_max / row.residual_norm);
                diffs_here.push_back(row.coeff_err_max);
                deltas_here.push_back(row.delta);
            }
        }
        for (std::size_t a = 0; a < cfg.deltas.size(); ++a)
            for (std::size_t b = 0; b < cfg.deltas.size(); ++b)
                if (cfg.deltas[a] > 0.0 && std::abs(cfg.deltas[b] - 2.0 * cfg.deltas[a]) <= 1e-12 * cfg.deltas[b]) {
                    const auto& ra = report.rows[report.rows.size() - cfg.deltas.size() + a];
                    const auto& rb = report.rows[report.rows.size() - cfg.deltas.size() + b];
                    report.doubling_factors.push_back(rb.coeff_err_max / ra.coeff_err_max);
                }
        if (deltas_here.size() >= 2)
            report.fits.push_back({"coeff_diff_vs_delta N=" + format_number(set.N), fit_loglog(deltas_here, diffs_here)});
        if (!ratio_here.empty()) {
            double mean = 0.0;
            for (double r : ratio_here) mean += r;
            Ns_fit.push_back(set.N);
            ratios.push_back(mean / static_cast<double>(ratio_here.size()));
        }
        // Small-T regime indicator T^3 l^2 / N^2 (the admissible T scales like N^{2/3}).
        const double T = mesh.final_time, l = mesh.length;
        report.notes.push_back("N=" + format_number(set.N) + ": T^3 l^2 / N^2 = " +
                               format_number(T * T * T * l * l / (set.N * set.N)));
    }
    if (Ns_fit.size() >= 2) report.fits.push_back({"lipschitz_ratio_vs_N", fit_loglog(Ns_fit, ratios)});
    std::size_t crossed = 0;
    for (double x : report.crossing_points) crossed += std::isnan(x) ? 0 : 1;
    report.notes.push_back("recovered pairs crossing: " + std::to_string(crossed) + " of " +
                           std::to_string(report.crossing_points.size()));
    if (report.partial) report.notes.push_back("at least one inversion stalled in the line search");
    return report;
}

/// Flat table of a report: one line per row, then the baseline if present.
/// Columns: delta, N, sigma, coeff_err_L2, coeff_err_max, residual_norm,
/// iterations, termination. Numbers in shortest round-trip form.
inline std::string to_csv(const RateReport& r) {
    std::string s = "delta,N,sigma,coeff_err_L2,coeff_err_max,residual_norm,iterations,termination\n";
    auto line = [&](const RateRow& row) {
        s += format_number(row.delta) + ',' + format_number(row.N) + ',' + format_number(row.sigma) + ',' +
             format_number(row.coeff_err_l2) + ',' + format_number(row.coeff_err_max) + ',' +
             format_number(row.residual_norm) + ',' + std::to_string(row.iterations) + ',' +
             std::string(to_string(row.termination)) + '\n';
    };
    for (const auto& row : r.rows) line(row);
    if (r.baseline) line(*r.baseline);
    return s;
}

/// Base problem of both rate studies: a = x(1 - x), phi = 3, q* a Gaussian
/// bump 1 + 0.5 exp(-3 (x - 1/2)^2) on [0, 1] x [0, 1], box [0.5, 2].
/// With phi = 1 the coupling N = delta over-regularizes the whole noise range;
/// phi = 3 puts the studied deltas in the regime where the rates show.
inline Manufactured default_study_problem(const Mesh& mesh) {
    Profile p;
    p.kind = Profile::Kind::bump;
    p.base = 1.0;
    p.height = 0.5;
    p.width = 3.0;
    AdmissibleSet set;
    return manufacture(p, mesh, CoefficientModel{}, InitialDatum{InitialDatum::Kind::constant, 3.0}, set);
}

inline Mesh default_study_mesh() { return build_mesh(1.0, 100, 1.0, 1000); }

/// Inner-solver settings used by the studies: 1e-8 of the initial projected
/// gradient sits below round-off for these problems, 1e-6 does not.
inline StopCriteria default_study_stop() {
    StopCriteria s;
    s.relative_tol = 1e-6;
    s.max_iter = 2000;
    return s;
}

inline ConvergenceConfig default_convergence_config(const Mesh& mesh = default_study_mesh()) {
    ConvergenceConfig c;
    c.problem = default_study_problem(mesh);
    c.q0 = 1.2;
    c.stop = default_study_stop();
    return c;
}

inline StabilityConfig default_stability_config(const Mesh& mesh = default_study_mesh()) {
    StabilityConfig c;
    c.problem = default_study_problem(mesh);
    c.q0 = 1.2;
    c.stop = default_study_stop();
    return c;
}

}  // namespace radinv
