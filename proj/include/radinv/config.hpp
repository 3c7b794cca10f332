#pragma once

// Run configuration for the command-line front end. YAML text with five
// optional sections; every key has a default. Parsing collects all problems
// (unknown keys and sections, bad values, violated constraints), each tagged
// with its line, and throws them together as one ConfigError.
//
//   problem:   l T M K  a a_amplitude a_left_exponent a_right_exponent
//              phi phi_value  q_star q_star_base q_star_height q_star_width q_star_top
//   inversion: functional N sigma alpha beta pin_endpoints q0 grad_tol
//              relative_tol max_iter metric lambda fp_tol fp_max_iter
//   noise:     delta seed
//   output:    directory formats
//   study:     deltas coupling Ns stability_deltas trials scheme

#include "radinv/adjoint.hpp"
#include "radinv/catalog.hpp"
#include "radinv/error.hpp"
#include "radinv/format.hpp"
#include "radinv/forward.hpp"
#include "radinv/mesh.hpp"
#include "radinv/objective.hpp"
#include "radinv/optimize.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace radinv {

struct ProblemBlock {
    double l = 1.0;
    double T = 1.0;
    std::size_t M = 100;
    std::size_t K = 1000;
    CoefficientModel a;
    InitialDatum phi;
    Profile q_star{Profile::Kind::bump};
    friend bool operator==(const ProblemBlock&, const ProblemBlock&) = default;
};

enum class FunctionalKind { J, J_sigma };

inline std::string_view to_string(FunctionalKind f) { return f == FunctionalKind::J ? "J" : "J_sigma"; }

struct InversionBlock {
    FunctionalKind functional = FunctionalKind::J;
    double N = 1e-6;
    double sigma = 0.0;  // filled with 4 dt when absent
    double alpha = 0.5;
    double beta = 2.0;
    bool pin_endpoints = false;
    double q0 = 1.0;
    std::optional<double> grad_tol;
    double relative_tol = 1e-8;
    std::size_t max_iter = 500;
    GradientMetric metric = GradientMetric::sobolev;
    double lambda = 1.0;
    double fp_tol = 1e-10;
    std::size_t fp_max_iter = 500;
    friend bool operator==(const InversionBlock&, const InversionBlock&) = default;
};

struct NoiseBlock {
    double delta = 0.0;
    std::uint64_t seed = 0;
    friend bool operator==(const NoiseBlock&, const NoiseBlock&) = default;
};

struct OutputBlock {
    std::string directory = "radinv-out";
    bool csv = true;
    bool json = true;
    friend bool operator==(const OutputBlock&, const OutputBlock&) = default;
};

struct StudyBlock {
    std::vector<double> deltas{1e-1, 1e-2, 1e-3};
    double coupling = 1.0;
    std::vector<double> Ns{1e-2, 1e-3, 1e-4};
    std::vector<double> stability_deltas{1e-3, 2e-3};
    std::optional<std::size_t> trials;  // property suite; unset = per-check defaults
    Scheme scheme = Scheme::backward_euler;  // explicit_euler is a test hook
    friend bool operator==(const StudyBlock&, const StudyBlock&) = default;
};

struct RunConfig {
    ProblemBlock problem;
    InversionBlock inversion;
    NoiseBlock noise;
    OutputBlock output;
    StudyBlock study;
    friend bool operator==(const RunConfig&, const RunConfig&) = default;

    Mesh mesh() const { return build_mesh(problem.l, problem.M, problem.T, problem.K); }

    AdmissibleSet admissible() const {
        AdmissibleSet s;
        s.alpha = inversion.alpha;
        s.beta = inversion.beta;
        s.N = inversion.N;
        s.pin_endpoints = inversion.pin_endpoints;
        return s;
    }

    Functional functional() const {
        return inversion.functional == FunctionalKind::J ? Functional::terminal()
                                                         : Functional::windowed(inversion.sigma);
    }

    StopCriteria stop() const {
        StopCriteria s;
        s.grad_tol = inversion.grad_tol;
        s.relative_tol = inversion.relative_tol;
        s.max_iter = inversion.max_iter;
        return s;
    }

    DescentOptions descent() const {
        DescentOptions d;
        d.metric = inversion.metric;
        return d;
    }
};

namespace detail {

class ConfigReader {
public:
    void problem(std::optional<int> line, const std::string& what) {
        problems_.push_back(line ? "line " + std::to_string(*line) + ": " + what : what);
    }
    const std::vector<std::string>& problems() const { return problems_; }

    void seen(const std::string& key, int line) { lines_[key] = line; }
    std::optional<int> line_of(const std::string& key) const {
        const auto it = lines_.find(key);
        if (it == lines_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::vector<std::string> problems_;
    std::map<std::string, int> lines_;
};

inline int line(const YAML::Node& n) { return n.Mark().line + 1; }

inline std::string scalar_text(const YAML::Node& n) { return n.IsScalar() ? n.Scalar() : std::string("<non-scalar>"); }

template <class T>
bool read_as(const YAML::Node& n, const std::string& key, const char* expected, ConfigReader& r, T& out) {
    try {
        if (!n.IsScalar()) throw YAML::BadConversion(n.Mark());
        out = n.as<T>();
        return true;
    } catch (const YAML::Exception&) {
        r.problem(line(n), key + ": expected " + expected + ", got '" + scalar_text(n) + "'");
        return false;
    }
}

inline void read_number(const YAML::Node& n, const std::string& key, ConfigReader& r, double& out) {
    read_as(n, key, "a number", r, out);
}

inline bool read_count(const YAML::Node& n, const std::string& key, ConfigReader& r, std::size_t& out,
                       long long min = 0) {
    long long v = 0;
    if (!read_as(n, key, "an integer", r, v)) return false;
    if (v < min) {
        r.problem(line(n), key + ": must be an integer >= " + std::to_string(min) + " (got " + std::to_string(v) + ")");
        return false;
    }
    out = static_cast<std::size_t>(v);
    return true;
}

inline void read_list(const YAML::Node& n, const std::string& key, ConfigReader& r, std::vector<double>& out) {
    if (!n.IsSequence()) {
        r.problem(line(n), key + ": expected a list of numbers");
        return;
    }
    std::vector<double> v;
    bool ok = true;
    for (const auto& item : n) {
        double x = 0.0;
        ok = read_as(item, key, "a number", r, x) && ok;
        v.push_back(x);
    }
    if (ok) out = std::move(v);
}

template <class Kind, class Parse>
void read_name(const YAML::Node& n, const std::string& key, ConfigReader& r, Kind& out, Parse parse,
               const char* choices) {
    std::string s;
    if (!read_as(n, key, "a name", r, s)) return;
    if (const auto k = parse(s))
        out = *k;
    else
        r.problem(line(n), key + ": unknown name '" + s + "' (choices: " + choices + ")");
}

using KeyHandler = std::function<void(const YAML::Node&, const std::string&, ConfigReader&, RunConfig&)>;

inline const std::map<std::string, std::map<std::string, KeyHandler>>& key_table() {
    static const std::map<std::string, std::map<std::string, KeyHandler>> table = [] {
        std::map<std::string, std::map<std::string, KeyHandler>> t;
        auto& p = t["problem"];
        p["l"] = [](auto& n, auto& k, auto& r, auto& c) { read_number(n, k, r, c.problem.l); };
        p["T"] = [](auto& n, auto& k, auto& r, auto& c) { read_number(n, k, r, c.problem.T); };
        p["M"] = [](auto& n, auto& k, auto& r, auto& c) { read_count(n, k, r, c.problem.M, 2); };
        p["K"] = [](auto& n, auto& k, auto& r, auto& c) { read_count(n, k, r, c.problem.K, 1); };
        p["a"] = [](auto& n, auto& k, auto& r, auto& c) {
            read_name(n, k, r, c.problem.a.kind, coefficient_kind, "quadratic, power, constant");
        };
        p["a_amplitude"] = [](auto& n, auto& k, auto& r, auto& c) { read_number(n, k, r, c.problem.a.amplitude); };
        p["a_left_exponent"] = [](auto& n, auto& k, auto& r, auto& c) {
            read_number(n, k, r, c.problem.a.left_exponent);
        };
        p["a_right_exponent"] = [](auto& n, auto& k, auto& r, auto& c) {
            read_number(n, k, r, c.problem.a.right_exponent);
        };
        p["phi"] = [](auto& n, auto& k, auto& r, auto& c) {
            read_name(n, k, r, c.problem.phi.kind, initial_kind, "constant, sine");
        };
        p["phi_value"] = [](auto& n, auto& k, auto& r, auto& c) { read_number(n, k, r, c.problem.phi.value); };
        p["q_star"] = [](auto& n, auto& k, auto& r, auto& c) {
            read_name(n, k, r, c.problem.q_star.kind, profile_kind, "constant, bump, ramp");
        };
        p["q_star_base"] = [](auto& n, auto& k, auto& r, auto& c) { read_number(n, k, r, c.problem.q_star.base); };
        p["q_star_height"] = [](auto& n, auto& k, auto& r, auto& c) {
            read_number(n, k, r, c.problem.q_star.height);
        };
        p["q_star_width"] = [](auto& n, auto& k, auto& r, auto& c) { read_number(n, k, r, c.problem.q_star.width); };
        p["q_star_top"] = [](auto& n, auto& k, auto& r, auto& c) { read_number(n, k, r, c.problem.q_star.top); };

        auto& v = t["inversion"];
        v["functional"] = [](auto& n, auto& k, auto& r, auto& c) {
            read_name(
                n, k, r, c.inversion.functional,
                [](const std::string& s) -> std::optional<FunctionalKind> {
                    if (s == "J") return FunctionalKind::J;
                    if (s == "J_sigma") return FunctionalKind::J_sigma;
                    return std::nullopt;
                },
                "J, J_sigma");
        };
        v["N"] = [](auto& n, auto& k, auto& r, auto& c) { read_number(n, k, r, c.inversion.N); };
        v["sigma"] = [](auto& n, auto& k, auto& r, auto& c) { read_number(n, k, r, c.inversion.sigma); };
        v["alpha"] = [](auto& n, auto& k, auto& r, auto& c) { read_number(n, k, r, c.inversion.alpha); };
        v["beta"] = [](auto& n, auto& k, auto& r, auto& c) { read_number(n, k, r, c.inversion.beta); };
        v["pin_endpoints"] = [](auto& n, auto& k, auto& r, auto& c) {
            read_as(n, k, "true or false", r, c.inversion.pin_endpoints);
        };
        v["q0"] = [](auto& n, auto& k, auto& r, auto& c) { read_number(n, k, r, c.inversion.q0); };
        v["grad_tol"] = [](auto& n, auto& k, auto& r, auto& c) {
            double x = 0.0;
            if (read_as(n, k, "a number", r, x)) c.inversion.grad_tol = x;
        };
        v["relative_tol"] = [](auto& n, auto& k, auto& r, auto& c) { read_number(n, k, r, c.inversion.relative_tol); };
        v["max_iter"] = [](auto& n, auto& k, auto& r, auto& c) { read_count(n, k, r, c.inversion.max_iter); };
        v["metric"] = [](auto& n, auto& k, auto& r, auto& c) {
            read_name(
                n, k, r, c.inversion.metric,
                [](const std::string& s) -> std::optional<GradientMetric> {
                    if (s == "sobolev") return GradientMetric::sobolev;
                    if (s == "l2") return GradientMetric::l2;
                    return std::nullopt;
                },
                "sobolev, l2");
        };
        v["lambda"] = [](auto& n, auto& k, auto& r, auto& c) { read_number(n, k, r, c.inversion.lambda); };
        v["fp_tol"] = [](auto& n, auto& k, auto& r, auto& c) { read_number(n, k, r, c.inversion.fp_tol); };
        v["fp_max_iter"] = [](auto& n, auto& k, auto& r, auto& c) { read_count(n, k, r, c.inversion.fp_max_iter); };

        auto& z = t["noise"];
        z["delta"] = [](auto& n, auto& k, auto& r, auto& c) { read_number(n, k, r, c.noise.delta); };
        z["seed"] = [](auto& n, auto& k, auto& r, auto& c) {
            long long s = 0;
            if (!read_as(n, k, "an integer", r, s)) return;
            if (s < 0)
                r.problem(line(n), k + ": must be a nonnegative integer");
            else
                c.noise.seed = static_cast<std::uint64_t>(s);
        };

        auto& o = t["output"];
        o["directory"] = [](auto& n, auto& k, auto& r, auto& c) { read_as(n, k, "a path", r, c.output.directory); };
        o["formats"] = [](auto& n, auto& k, auto& r, auto& c) {
            if (!n.IsSequence()) {
                r.problem(line(n), k + ": expected a list drawn from csv, json");
                return;
            }
            bool csv = false, json = false;
            for (const auto& item : n) {
                std::string s;
                if (!read_as(item, k, "a format name", r, s)) continue;
                if (s == "csv")
                    csv = true;
                else if (s == "json")
                    json = true;
                else
                    r.problem(line(item), k + ": unknown format '" + s + "' (choices: csv, json)");
            }
            c.output.csv = csv;
            c.output.json = json;
        };

        auto& s = t["study"];
        s["deltas"] = [](auto& n, auto& k, auto& r, auto& c) { read_list(n, k, r, c.study.deltas); };
        s["coupling"] = [](auto& n, auto& k, auto& r, auto& c) { read_number(n, k, r, c.study.coupling); };
        s["Ns"] = [](auto& n, auto& k, auto& r, auto& c) { read_list(n, k, r, c.study.Ns); };
        s["stability_deltas"] = [](auto& n, auto& k, auto& r, auto& c) {
            read_list(n, k, r, c.study.stability_deltas);
        };
        s["trials"] = [](auto& n, auto& k, auto& r, auto& c) {
            std::size_t v = 0;
            if (read_count(n, k, r, v, 1)) c.study.trials = v;
        };
        s["scheme"] = [](auto& n, auto& k, auto& r, auto& c) {
            read_name(
                n, k, r, c.study.scheme,
                [](const std::string& x) -> std::optional<Scheme> {
                    if (x == "backward_euler") return Scheme::backward_euler;
                    if (x == "explicit_euler") return Scheme::explicit_euler;
                    return std::nullopt;
                },
                "backward_euler, explicit_euler");
        };
        return t;
    }();
    return table;
}

inline void validate(RunConfig& c, ConfigReader& r, bool sigma_given) {
    auto bad = [&](const std::string& key, const std::string& what) { r.problem(r.line_of(key), key + ": " + what); };
    auto positive = [&](const std::string& key, double v) {
        if (!(v > 0.0) || !std::isfinite(v)) bad(key, "must be a positive finite number (got " + format_number(v) + ")");
    };
    auto finite = [&](const std::string& key, double v) {
        if (!std::isfinite(v)) bad(key, "must be finite");
    };

    auto& p = c.problem;
    positive("problem.l", p.l);
    positive("problem.T", p.T);
    const bool mesh_ok = p.M >= 2 && p.K >= 1 && p.l > 0.0 && p.T > 0.0 && std::isfinite(p.l) && std::isfinite(p.T);
    if (p.M < 2) bad("problem.M", "must be an integer >= 2 (got " + std::to_string(p.M) + ")");
    if (p.K < 1) bad("problem.K", "must be an integer >= 1 (got " + std::to_string(p.K) + ")");
    positive("problem.a_amplitude", p.a.amplitude);
    if (p.a.kind == CoefficientModel::Kind::power) {
        if (!(p.a.left_exponent > 0.0 && p.a.left_exponent < 1.0))
            bad("problem.a_left_exponent", "must lie in (0, 1) for the power coefficient");
        if (!(p.a.right_exponent > 0.0 && p.a.right_exponent < 1.0))
            bad("problem.a_right_exponent", "must lie in (0, 1) for the power coefficient");
    }
    finite("problem.phi_value", p.phi.value);
    finite("problem.q_star_base", p.q_star.base);
    finite("problem.q_star_height", p.q_star.height);
    if (!(p.q_star.width >= 0.0) || !std::isfinite(p.q_star.width)) bad("problem.q_star_width", "must be >= 0");
    finite("problem.q_star_top", p.q_star.top);

    auto& v = c.inversion;
    if (!(v.N >= 0.0) || !std::isfinite(v.N)) bad("inversion.N", "must be >= 0");
    positive("inversion.alpha", v.alpha);
    finite("inversion.beta", v.beta);
    if (!(v.beta >= v.alpha)) bad("inversion.beta", "must be >= alpha");
    finite("inversion.q0", v.q0);
    if (v.grad_tol && !(*v.grad_tol >= 0.0)) bad("inversion.grad_tol", "must be >= 0");
    positive("inversion.relative_tol", v.relative_tol);
    positive("inversion.lambda", v.lambda);
    positive("inversion.fp_tol", v.fp_tol);
    if (mesh_ok) {
        const double dt = p.T / static_cast<double>(p.K);
        if (!sigma_given) v.sigma = 4.0 * dt;
        if (!sigma_given && v.sigma > p.T) v.sigma = p.T;  // fewer than four steps
        try {
            (void)window_steps(build_mesh(p.l, p.M, p.T, p.K), v.sigma);
        } catch (const DomainError&) {
            bad("inversion.sigma", "must be a positive integer multiple of dt = " + format_number(dt) +
                                       " not exceeding T (got " + format_number(v.sigma) + ")");
        }
    }

    if (!(c.noise.delta >= 0.0) || !std::isfinite(c.noise.delta)) bad("noise.delta", "must be >= 0");
    if (c.output.directory.empty()) bad("output.directory", "must not be empty");
    if (!c.output.csv && !c.output.json) bad("output.formats", "must name at least one of csv, json");

    auto& s = c.study;
    if (s.deltas.size() < 2) bad("study.deltas", "needs at least two values");
    for (std::size_t k = 0; k < s.deltas.size(); ++k) {
        if (!(s.deltas[k] > 0.0)) bad("study.deltas", "values must be positive");
        if (k > 0 && !(s.deltas[k] < s.deltas[k - 1])) bad("study.deltas", "values must be strictly decreasing");
    }
    positive("study.coupling", s.coupling);
    if (s.Ns.empty()) bad("study.Ns", "needs at least one value");
    for (double N : s.Ns)
        if (!(N > 0.0)) bad("study.Ns", "values must be positive");
    if (s.stability_deltas.empty()) bad("study.stability_deltas", "needs at least one value");
    for (double d : s.stability_deltas)
        if (!(d >= 0.0)) bad("study.stability_deltas", "values must be >= 0");
    if (s.trials && *s.trials < 1) bad("study.trials", "must be >= 1");
}

inline std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"' || ch == '\\') out += '\\';
        out += ch;
    }
    return out + "\"";
}

inline std::string list_text(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_number(v[i]);
    return out + "]";
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
    detail::ConfigReader r;
    RunConfig c;
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError({"line " + std::to_string(e.mark.line + 1) + ": syntax error: " + e.msg});
    }
    bool sigma_given = false;
    if (root.IsDefined() && !root.IsNull()) {
        if (!root.IsMap()) throw ConfigError({"line 1: the configuration must be a mapping of sections"});
        const auto& table = detail::key_table();
        std::set<std::string> sections;
        for (const auto& sec : root) {
            const std::string name = detail::scalar_text(sec.first);
            const int sec_line = detail::line(sec.first);
            const auto it = table.find(name);
            if (it == table.end()) {
                r.problem(sec_line, "unknown section '" + name + "' (choices: problem, inversion, noise, output, study)");
                continue;
            }
            if (!sections.insert(name).second) {
                r.problem(sec_line, "duplicate section '" + name + "'");
                continue;
            }
            if (sec.second.IsNull()) continue;
            if (!sec.second.IsMap()) {
                r.problem(sec_line, "section '" + name + "' must be a mapping of keys");
                continue;
            }
            std::set<std::string> keys;
            for (const auto& kv : sec.second) {
                const std::string key = detail::scalar_text(kv.first);
                const std::string full = name + "." + key;
                const int key_line = detail::line(kv.first);
                const auto h = it->second.find(key);
                if (h == it->second.end()) {
                    r.problem(key_line, "unknown key '" + full + "'");
                    continue;
                }
                if (!keys.insert(key).second) {
                    r.problem(key_line, "duplicate key '" + full + "'");
                    continue;
                }
                r.seen(full, key_line);
                if (full == "inversion.sigma") sigma_given = true;
                h->second(kv.second, full, r, c);
            }
        }
    }
    detail::validate(c, r, sigma_given);
    if (!r.problems().empty()) throw ConfigError(r.problems());
    return c;
}

/// YAML text that parses back to an equal configuration.
inline std::string serialize(const RunConfig& c) {
    using detail::list_text;
    const auto& p = c.problem;
    const auto& v = c.inversion;
    const auto n = [](double x) { return format_number(x); };
    std::string s;
    s += "problem:\n";
    s += "  l: " + n(p.l) + "\n";
    s += "  T: " + n(p.T) + "\n";
    s += "  M: " + std::to_string(p.M) + "\n";
    s += "  K: " + std::to_string(p.K) + "\n";
    s += "  a: " + std::string(to_string(p.a.kind)) + "\n";
    s += "  a_amplitude: " + n(p.a.amplitude) + "\n";
    s += "  a_left_exponent: " + n(p.a.left_exponent) + "\n";
    s += "  a_right_exponent: " + n(p.a.right_exponent) + "\n";
    s += "  phi: " + std::string(to_string(p.phi.kind)) + "\n";
    s += "  phi_value: " + n(p.phi.value) + "\n";
    s += "  q_star: " + std::string(to_string(p.q_star.kind)) + "\n";
    s += "  q_star_base: " + n(p.q_star.base) + "\n";
    s += "  q_star_height: " + n(p.q_star.height) + "\n";
    s += "  q_star_width: " + n(p.q_star.width) + "\n";
    s += "  q_star_top: " + n(p.q_star.top) + "\n";
    s += "inversion:\n";
    s += "  functional: " + std::string(to_string(v.functional)) + "\n";
    s += "  N: " + n(v.N) + "\n";
    s += "  sigma: " + n(v.sigma) + "\n";
    s += "  alpha: " + n(v.alpha) + "\n";
    s += "  beta: " + n(v.beta) + "\n";
    s += std::string("  pin_endpoints: ") + (v.pin_endpoints ? "true" : "false") + "\n";
    s += "  q0: " + n(v.q0) + "\n";
    if (v.grad_tol) s += "  grad_tol: " + n(*v.grad_tol) + "\n";
    s += "  relative_tol: " + n(v.relative_tol) + "\n";
    s += "  max_iter: " + std::to_string(v.max_iter) + "\n";
    s += "  metric: " + std::string(to_string(v.metric)) + "\n";
    s += "  lambda: " + n(v.lambda) + "\n";
    s += "  fp_tol: " + n(v.fp_tol) + "\n";
    s += "  fp_max_iter: " + std::to_string(v.fp_max_iter) + "\n";
    s += "noise:\n";
    s += "  delta: " + n(c.noise.delta) + "\n";
    s += "  seed: " + std::to_string(c.noise.seed) + "\n";
    s += "output:\n";
    s += "  directory: " + detail::quoted(c.output.directory) + "\n";
    s += "  formats: [";
    s += c.output.csv ? (c.output.json ? "csv, json" : "csv") : "json";
    s += "]\n";
    s += "study:\n";
    s += "  deltas: " + list_text(c.study.deltas) + "\n";
    s += "  coupling: " + n(c.study.coupling) + "\n";
    s += "  Ns: " + list_text(c.study.Ns) + "\n";
    s += "  stability_deltas: " + list_text(c.study.stability_deltas) + "\n";
    if (c.study.trials) s += "  trials: " + std::to_string(*c.study.trials) + "\n";
    s += std::string("  scheme: ") +
         (c.study.scheme == Scheme::backward_euler ? "backward_euler" : "explicit_euler") + "\n";
    return s;
}

}  // namespace radinv
