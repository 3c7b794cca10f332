#pragma once

// Command dispatch for radinv-cli. Each command reads a RunConfig, runs one
// library operation and writes fixed-name files into the output directory.
// Exit status: 0 ok, 1 domain error, 2 config error, 3 property failure.
// Diagnostics go to the error stream as one JSON object per line.

#include "radinv/config.hpp"
#include "radinv/experiments.hpp"
#include "radinv/fichera.hpp"
#include "radinv/format.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace radinv::cli {

enum class Command { forward, fichera, invert, fixed_point, study_convergence, study_stability, properties };

inline constexpr std::array<std::pair<Command, std::string_view>, 7> kCommands{{
    {Command::forward, "forward"},
    {Command::fichera, "fichera"},
    {Command::invert, "invert"},
    {Command::fixed_point, "fixed-point"},
    {Command::study_convergence, "study-convergence"},
    {Command::study_stability, "study-stability"},
    {Command::properties, "properties"},
}};

inline std::string_view to_string(Command c) {
    for (const auto& [k, name] : kCommands)
        if (k == c) return name;
    return "?";
}

inline std::optional<Command> command_from(std::string_view s) {
    for (const auto& [k, name] : kCommands)
        if (name == s) return k;
    return std::nullopt;
}

enum ExitCode : int { kOk = 0, kDomainError = 1, kConfigError = 2, kPropertyFailure = 3 };

struct Overrides {
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
};

using json = nlohmann::ordered_json;

/// One structured diagnostic line.
inline void diagnose(std::ostream& err, std::string_view kind, std::string_view message) {
    json j;
    j["level"] = "error";
    j["kind"] = kind;
    j["message"] = message;
    err << j.dump() << '\n';
}

namespace detail {

/// Writes only fixed basenames below one root directory.
class OutputDir {
public:
    OutputDir(const RunConfig& cfg, std::ostream& out) : root_(cfg.output.directory), cfg_(cfg), out_(out) {
        std::filesystem::create_directories(root_);
    }

    void csv(std::string_view name, const std::vector<std::string>& header,
             const std::vector<std::vector<std::string>>& rows) const {
        if (!cfg_.output.csv) return;
        std::string text;
        append_row(text, header);
        for (const auto& r : rows) append_row(text, r);
        write(std::string(name) + ".csv", text);
    }

    void csv_text(std::string_view name, const std::string& text) const {
        if (cfg_.output.csv) write(std::string(name) + ".csv", text);
    }

    void json_file(std::string_view name, const json& j) const {
        if (!cfg_.output.json) return;
        write(std::string(name) + ".json", j.dump(2) + "\n");
    }

private:
    static void append_row(std::string& text, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text += ',';
            text += cells[i];
        }
        text += '\n';
    }

    void write(const std::string& basename, const std::string& text) const {
        const auto path = root_ / basename;
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw DomainError("cannot open " + path.string() + " for writing");
        f << text;
        if (!f) throw DomainError("failed writing " + path.string());
        out_ << "wrote " << path.string() << '\n';
    }

    std::filesystem::path root_;
    const RunConfig& cfg_;
    std::ostream& out_;
};

inline std::string num(double v) { return format_number(v); }

/// NaN/inf are not JSON numbers; they become null.
inline json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json jlist(std::span<const double> v) {
    json a = json::array();
    for (double x : v) a.push_back(jnum(x));
    return a;
}

inline json mesh_json(const Mesh& m) {
    return json{{"l", m.length}, {"T", m.final_time}, {"M", m.cells}, {"K", m.steps}, {"h", m.spacing}, {"dt", m.dt}};
}

inline ProblemSpec base_spec(const RunConfig& cfg) {
    ProblemSpec s;
    s.mesh = cfg.mesh();
    s.coeff = cfg.problem.a.sample(s.mesh);
    s.q = cfg.problem.q_star.sample(s.mesh);
    s.phi = cfg.problem.phi.sample(s.mesh);
    return s;
}

/// Box with endpoints pinned to q* when requested.
inline AdmissibleSet inversion_set(const RunConfig& cfg, const Mesh& mesh) {
    AdmissibleSet set = cfg.admissible();
    if (set.pin_endpoints) {
        set.pin_left = cfg.problem.q_star.at(0.0, mesh.length);
        set.pin_right = cfg.problem.q_star.at(mesh.length, mesh.length);
    }
    return set;
}

inline Manufactured manufactured(const RunConfig& cfg, const AdmissibleSet& set) {
    return manufacture(cfg.problem.q_star, cfg.mesh(), cfg.problem.a, cfg.problem.phi, set);
}

inline json inversion_json(const InversionResult& r) {
    json j;
    j["termination"] = to_string(r.termination);
    j["iterations"] = r.iterations;
    json costs = json::array();
    for (const auto& c : r.cost_history)
        costs.push_back({{"misfit", jnum(c.misfit)}, {"regularizer", jnum(c.regularizer)}, {"total", jnum(c.total)}});
    j["cost_history"] = costs;
    j["grad_norm_history"] = jlist(r.grad_norm_history);
    j["active_set"] = r.active_set;
    j["unidentifiable"] = r.unidentifiable;
    return j;
}

inline json rate_row_json(const RateRow& r) {
    return json{{"delta", jnum(r.delta)},
                {"N", jnum(r.N)},
                {"sigma", jnum(r.sigma)},
                {"coeff_err_L2", jnum(r.coeff_err_l2)},
                {"coeff_err_max", jnum(r.coeff_err_max)},
                {"residual_norm", jnum(r.residual_norm)},
                {"iterations", r.iterations},
                {"termination", to_string(r.termination)}};
}

inline json rate_report_json(const RateReport& r) {
    json j;
    j["study"] = r.study;
    json rows = json::array();
    for (const auto& row : r.rows) rows.push_back(rate_row_json(row));
    j["rows"] = rows;
    j["baseline"] = r.baseline ? rate_row_json(*r.baseline) : json(nullptr);
    json fits = json::array();
    for (const auto& f : r.fits)
        fits.push_back({{"name", f.name},
                        {"slope", jnum(f.fit.slope)},
                        {"constant", jnum(f.fit.constant)},
                        {"residual", jnum(f.fit.residual)},
                        {"points", f.fit.points}});
    j["fits"] = fits;
    j["partial"] = r.partial;
    j["notes"] = r.notes;
    if (!r.crossing_points.empty()) j["crossing_points"] = jlist(r.crossing_points);
    if (!r.doubling_factors.empty()) j["doubling_factors"] = jlist(r.doubling_factors);
    return j;
}

inline int run_forward(const RunConfig& cfg, const OutputDir& out) {
    const auto spec = base_spec(cfg);
    const auto u = solve_forward(spec);
    const Mesh& m = spec.mesh;
    std::vector<std::vector<std::string>> rows;
    rows.reserve(m.levels() * m.nodes());
    for (std::size_t n = 0; n < m.levels(); ++n)
        for (std::size_t i = 0; i < m.nodes(); ++i) rows.push_back({num(m.time(n)), num(m.node(i)), num(u(n, i))});
    out.csv("forward", {"t", "x", "u"}, rows);
    const auto e = energy_report(u, spec);
    json j;
    j["command"] = "forward";
    j["mesh"] = mesh_json(m);
    j["degeneracy"] = to_string(spec.coeff.mode);
    j["energy"] = {{"sup_l2", jnum(e.sup_l2)}, {"grad_energy", jnum(e.grad_energy)}, {"dt_energy", jnum(e.dt_energy)}};
    j["max_principle_bound"] = jnum(max_principle_bound(spec));
    j["u_max"] = jnum(u.max_abs());
    out.json_file("energy", j);
    return kOk;
}

inline int run_fichera(const RunConfig& cfg, const OutputDir& out) {
    const Mesh m = cfg.mesh();
    const auto report = classify_rectangle(FicheraOperator::forward_form(cfg.problem.a, m.length), m);
    std::vector<std::vector<std::string>> rows;
    json sides = json::array();
    for (const auto& s : report.sides) {
        for (std::size_t k = 0; k < s.points.size(); ++k)
            rows.push_back({s.side, num(s.points[k].x), num(s.points[k].t), num(s.fichera[k]), num(s.quadratic[k])});
        sides.push_back({{"side", s.side},
                         {"class", to_string(s.classification)},
                         {"points", s.points.size()},
                         {"derivative_blowup", s.derivative_blowup},
                         {"note", s.note}});
    }
    out.csv("fichera", {"side", "x", "t", "fichera", "quadratic"}, rows);
    json j;
    j["command"] = "fichera";
    j["sides"] = sides;
    j["dirichlet_recommended"] = report.dirichlet_recommended();
    out.json_file("fichera", j);
    return kOk;
}

template <class Solve>
int run_inversion(const RunConfig& cfg, const OutputDir& out, std::string_view name, Solve solve) {
    const Mesh mesh = cfg.mesh();
    const AdmissibleSet set = inversion_set(cfg, mesh);
    const auto problem = manufactured(cfg, set);
    const auto g = add_noise(problem.g, mesh, {cfg.noise.delta, cfg.noise.seed});
    const std::vector<double> q0(mesh.nodes(), cfg.inversion.q0);
    const InversionResult r = solve(q0, g, set, problem.spec);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < mesh.nodes(); ++i)
        rows.push_back({num(mesh.node(i)), num(r.q_final[i]), num(problem.q_star[i]), num(g[i])});
    out.csv(name, {"x", "q_final", "q_star", "g"}, rows);
    std::vector<double> e(mesh.nodes());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = r.q_final[i] - problem.q_star[i];
    json j;
    j["command"] = std::string(name == "inversion" ? "invert" : "fixed-point");
    j["mesh"] = mesh_json(mesh);
    j["noise"] = {{"delta", cfg.noise.delta}, {"seed", cfg.noise.seed}};
    j["result"] = inversion_json(r);
    j["coeff_err_L2"] = jnum(l2_norm(mesh, e));
    j["coeff_err_max"] = jnum(radinv::detail::max_abs_diff(r.q_final, problem.q_star));
    out.json_file(name, j);
    return kOk;
}

inline int run_convergence(const RunConfig& cfg, const OutputDir& out) {
    ConvergenceConfig c;
    const AdmissibleSet set = cfg.admissible();
    c.problem = manufactured(cfg, set);
    c.set = set;
    c.deltas = cfg.study.deltas;
    c.coupling = cfg.study.coupling;
    c.sigma = cfg.inversion.sigma;
    c.q0 = cfg.inversion.q0;
    c.stop = cfg.stop();
    c.descent = cfg.descent();
    c.seed = cfg.noise.seed;
    const auto r = run_convergence_study(c);
    out.csv_text("convergence", to_csv(r));
    out.json_file("convergence", rate_report_json(r));
    return kOk;
}

inline int run_stability(const RunConfig& cfg, const OutputDir& out) {
    StabilityConfig c;
    c.set = cfg.admissible();
    c.problem = manufactured(cfg, c.set);
    c.Ns = cfg.study.Ns;
    c.deltas = cfg.study.stability_deltas;
    c.q0 = cfg.inversion.q0;
    c.stop = cfg.stop();
    c.descent = cfg.descent();
    c.seed = cfg.noise.seed;
    const auto r = run_stability_study(c);
    out.csv_text("stability", to_csv(r));
    out.json_file("stability", rate_report_json(r));
    return kOk;
}

inline int run_properties(const RunConfig& cfg, const OutputDir& out, std::ostream& err) {
    PropertySuiteConfig p;
    if (cfg.study.trials)
        p.max_principle_trials = p.adjoint_trials = p.contraction_trials = p.gradient_trials = p.duality_trials =
            *cfg.study.trials;
    p.seed = cfg.noise.seed;
    p.scheme = cfg.study.scheme;
    const auto r = run_property_suite(p);
    std::vector<std::vector<std::string>> rows;
    json checks = json::array();
    for (const auto& c : r.checks) {
        rows.push_back({c.name, std::to_string(c.trials), std::to_string(c.failures), num(c.worst), num(c.tolerance),
                        c.passed() ? "true" : "false"});
        checks.push_back({{"name", c.name},
                          {"trials", c.trials},
                          {"failures", c.failures},
                          {"worst", jnum(c.worst)},
                          {"tolerance", c.tolerance},
                          {"passed", c.passed()},
                          {"counterexamples", c.counterexamples}});
        for (const auto& ce : c.counterexamples) diagnose(err, "property", c.name + ": " + ce);
    }
    out.csv("properties", {"check", "trials", "failures", "worst", "tolerance", "passed"}, rows);
    json j;
    j["command"] = "properties";
    j["seed"] = cfg.noise.seed;
    j["passed"] = r.passed();
    j["checks"] = checks;
    out.json_file("properties", j);
    return r.passed() ? kOk : kPropertyFailure;
}

}  // namespace detail

inline void apply(RunConfig& cfg, const Overrides& o) {
    if (o.output_dir) cfg.output.directory = *o.output_dir;
    if (o.seed) cfg.noise.seed = *o.seed;
}

/// Runs one command on a parsed configuration. Domain errors map to exit 1.
inline int dispatch(Command cmd, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        const detail::OutputDir dir(cfg, out);
        switch (cmd) {
            case Command::forward: return detail::run_forward(cfg, dir);
            case Command::fichera: return detail::run_fichera(cfg, dir);
            case Command::invert:
                return detail::run_inversion(cfg, dir, "inversion", [&](auto& q0, auto& g, auto& set, auto& spec) {
                    return minimize(q0, g, set, spec, cfg.functional(), cfg.stop(), cfg.descent());
                });
            case Command::fixed_point:
                return detail::run_inversion(cfg, dir, "fixed_point", [&](auto& q0, auto& g, auto& set, auto& spec) {
                    return fixed_point(q0, g, cfg.inversion.lambda, set, spec,
                                       FixedPointStop{cfg.inversion.fp_tol, cfg.inversion.fp_max_iter});
                });
            case Command::study_convergence: return detail::run_convergence(cfg, dir);
            case Command::study_stability: return detail::run_stability(cfg, dir);
            case Command::properties: return detail::run_properties(cfg, dir, err);
        }
    } catch (const DomainError& e) {
        diagnose(err, "domain", e.what());
        return kDomainError;
    } catch (const std::filesystem::filesystem_error& e) {
        diagnose(err, "domain", e.what());
        return kDomainError;
    }
    return kDomainError;
}

/// Reads and parses the config file, applies overrides, dispatches.
inline int run(Command cmd, const std::string& config_path, const Overrides& overrides, std::ostream& out,
               std::ostream& err) {
    std::ifstream f(config_path, std::ios::binary);
    if (!f) {
        diagnose(err, "config", "cannot read config file " + config_path);
        return kConfigError;
    }
    std::stringstream text;
    text << f.rdbuf();
    RunConfig cfg;
    try {
        cfg = parse_config(text.str());
    } catch (const ConfigError& e) {
        for (const auto& p : e.problems()) diagnose(err, "config", p);
        return kConfigError;
    }
    apply(cfg, overrides);
    if (cfg.output.directory.empty()) {
        diagnose(err, "config", "output directory must not be empty");
        return kConfigError;
    }
    return dispatch(cmd, cfg, out, err);
}

}  // namespace radinv::cli
