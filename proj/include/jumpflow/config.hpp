#pragma once

// Run configuration: a single JSON document (comments allowed) plus dotted
// key=value overrides. Every field is validated before any computation; errors
// name the offending field, or the line and column for syntax errors.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "jumpflow/constants.hpp"
#include "jumpflow/error.hpp"
#include "jumpflow/model.hpp"
#include "jumpflow/montecarlo.hpp"
#include "jumpflow/simulate.hpp"

namespace jumpflow {

using json = nlohmann::json;

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"constants",      "bound",          "simulate", "verify-bdg",
                                                "verify-moments", "verify-derivatives", "greeks"};
    return names;
}

struct LawConfig {
    std::string family = "discrete";
    double mean = 0.0;
    double sd = 0.0;
    double beta_plus = 1.0;
    double beta_minus = 1.0;
    double p_plus = 0.5;
    std::vector<Atom> atoms{{0.0, 1.0}};
};

struct JumpConfig {
    std::string intensity = "constant";  // constant | linear
    double lambda = 0.0;
    double lambda_end = 0.0;             // linear profile only
    std::optional<double> lambda_bar;    // defaults to max of the profile
    LawConfig law;
};

struct GridConfig {
    double T = 1.0;
    int n_steps = 200;
};

struct McConfig {
    std::uint64_t paths = 10000;
    std::uint64_t master_seed = 1;
    int workers = 1;  // never part of the effective config or digest
};

struct PayoffConfig {
    std::string kind = "identity";  // identity | constant | power | sine | call
    double strike = 1.0;
    double value = 1.0;
    int power = 2;
};

struct IntegrandConfig {
    std::string kind = "mark";  // mark | zero
    double scale = 1.0;
};

struct ExperimentConfig {
    std::string name;
    double p = 2.0;
    double q = 2.0;
    int n = 1;
    double x = 1.0;
    std::vector<double> x_grid = default_x_grid();
    std::optional<double> t;  // greeks horizon, defaults to grid.T
    double h = 1e-4;
    bool fd_check = true;
    int record_paths = 10;
    PayoffConfig payoff;
    IntegrandConfig integrand;
};

struct RunConfig {
    ModelSpec model{"affine", {}, {}, 3};
    int quadrature = 32;
    JumpConfig jumps;
    GridConfig grid;
    McConfig mc;
    ExperimentConfig experiment;
};

namespace detail {

inline std::string line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

[[noreturn]] inline void field_error(const std::string& path, const std::string& msg) {
    throw Error(ErrorCode::invalid_config, "field '" + path + "': " + msg);
}

/// Typed, strict reader over one JSON object; unknown keys are errors.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) field_error(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }
    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    void number(const std::string& key, double& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number()) field_error(at(key), "expected a number");
        out = v.get<double>();
        if (!std::isfinite(out)) field_error(at(key), "must be finite");
    }
    void integer(const std::string& key, int& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) field_error(at(key), "expected an integer");
        out = v.get<int>();
    }
    void unsigned_integer(const std::string& key, std::uint64_t& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            field_error(at(key), "expected a non-negative integer");
        }
        out = v.get<std::uint64_t>();
    }
    void string(const std::string& key, std::string& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_string()) field_error(at(key), "expected a string");
        out = v.get<std::string>();
    }
    void boolean(const std::string& key, bool& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) field_error(at(key), "expected true or false");
        out = v.get<bool>();
    }
    void numbers(const std::string& key, std::vector<double>& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_array()) field_error(at(key), "expected an array of numbers");
        out.clear();
        for (const auto& e : v) {
            if (!e.is_number()) field_error(at(key), "expected an array of numbers");
            out.push_back(e.get<double>());
        }
    }

    void finish() const {
        for (const auto& [k, _] : j_.items()) {
            if (!seen_.count(k)) field_error(at(k), "unknown field");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void require(bool ok, const std::string& path, const std::string& msg) {
    if (!ok) field_error(path, msg);
}

inline void parse_law(const json& j, LawConfig& law) {
    Fields f(j, "jumps.law");
    f.string("family", law.family);
    f.number("mean", law.mean);
    f.number("sd", law.sd);
    f.number("beta_plus", law.beta_plus);
    f.number("beta_minus", law.beta_minus);
    f.number("p_plus", law.p_plus);
    if (f.has("atoms")) {
        const auto& a = f.raw("atoms");
        if (!a.is_array() || a.empty()) field_error("jumps.law.atoms", "expected a nonempty array of [value, probability]");
        law.atoms.clear();
        for (const auto& e : a) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
                field_error("jumps.law.atoms", "each atom must be [value, probability]");
            }
            law.atoms.push_back({e[0].get<double>(), e[1].get<double>()});
        }
    }
    f.finish();
}

inline void parse_model(const json& j, RunConfig& c) {
    Fields f(j, "model");
    f.string("family", c.model.family);
    f.integer("n_max", c.model.n_max);
    f.integer("quadrature", c.quadrature);
    if (f.has("params")) {
        const auto& p = f.raw("params");
        if (!p.is_object()) field_error("model.params", "expected an object");
        c.model.params.clear();
        c.model.lists.clear();
        for (const auto& [k, v] : p.items()) {
            if (v.is_number()) {
                c.model.params[k] = v.get<double>();
            } else if (v.is_array()) {
                std::vector<double> xs;
                for (const auto& e : v) {
                    if (!e.is_number()) field_error("model.params." + k, "expected numbers");
                    xs.push_back(e.get<double>());
                }
                c.model.lists[k] = std::move(xs);
            } else {
                field_error("model.params." + k, "expected a number or an array of numbers");
            }
        }
    }
    f.finish();
}

inline void parse_jumps(const json& j, JumpConfig& jc) {
    Fields f(j, "jumps");
    f.string("intensity", jc.intensity);
    f.number("lambda", jc.lambda);
    f.number("lambda_end", jc.lambda_end);
    if (f.has("lambda_bar")) {
        double v = 0.0;
        f.number("lambda_bar", v);
        jc.lambda_bar = v;
    }
    if (f.has("law")) parse_law(f.raw("law"), jc.law);
    f.finish();
}

inline void parse_experiment(const json& j, ExperimentConfig& e) {
    Fields f(j, "experiment");
    f.string("name", e.name);
    f.number("p", e.p);
    f.number("q", e.q);
    f.integer("n", e.n);
    f.number("x", e.x);
    f.numbers("x_grid", e.x_grid);
    if (f.has("t")) {
        double t = 0.0;
        f.number("t", t);
        e.t = t;
    }
    f.number("h", e.h);
    f.boolean("fd_check", e.fd_check);
    f.integer("record_paths", e.record_paths);
    if (f.has("payoff")) {
        Fields pf(f.raw("payoff"), "experiment.payoff");
        pf.string("kind", e.payoff.kind);
        pf.number("strike", e.payoff.strike);
        pf.number("value", e.payoff.value);
        pf.integer("power", e.payoff.power);
        pf.finish();
    }
    if (f.has("integrand")) {
        Fields pf(f.raw("integrand"), "experiment.integrand");
        pf.string("kind", e.integrand.kind);
        pf.number("scale", e.integrand.scale);
        pf.finish();
    }
    f.finish();
}

} // namespace detail

/// Parses JSON text with syntax diagnostics; `source` names it in messages.
inline json parse_json_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::invalid_config,
                    source + ": syntax error at " + detail::line_col(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
    }
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::invalid_config, "cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path);
}

/// Applies "a.b.c=value". The value is read as JSON when it parses as JSON,
/// otherwise as a string.
inline void apply_override(json& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw Error(ErrorCode::invalid_config, "override '" + assignment + "' is not of the form key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    if (!root.is_object()) root = json::object();
    json* node = &root;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw Error(ErrorCode::invalid_config, "override key '" + key + "' has an empty component");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        json& child = (*node)[part];
        if (child.is_null()) child = json::object();
        if (!child.is_object()) {
            throw Error(ErrorCode::invalid_config, "override key '" + key + "': '" + part + "' is not an object");
        }
        node = &child;
        start = dot + 1;
    }
}

/// Reads a RunConfig from a JSON document. Missing blocks keep defaults.
inline RunConfig parse_run_config(const json& root) {
    RunConfig c;
    detail::Fields f(root, "");
    if (f.has("model")) detail::parse_model(f.raw("model"), c);
    if (f.has("jumps")) detail::parse_jumps(f.raw("jumps"), c.jumps);
    if (f.has("grid")) {
        detail::Fields g(f.raw("grid"), "grid");
        g.number("T", c.grid.T);
        g.integer("n_steps", c.grid.n_steps);
        g.finish();
    }
    if (f.has("mc")) {
        detail::Fields m(f.raw("mc"), "mc");
        m.unsigned_integer("paths", c.mc.paths);
        m.unsigned_integer("master_seed", c.mc.master_seed);
        m.integer("workers", c.mc.workers);
        m.finish();
    }
    if (f.has("experiment")) {
        const auto& e = f.raw("experiment");
        if (e.is_string()) {
            c.experiment.name = e.get<std::string>();
        } else {
            detail::parse_experiment(e, c.experiment);
        }
    }
    f.finish();
    return c;
}

/// Builds the jump model; the error message names the block.
inline JumpModel build_jump_model(const RunConfig& c) {
    const auto& jc = c.jumps;
    SizeLaw law = [&] {
        const auto& l = jc.law;
        if (l.family == "gaussian") return SizeLaw::gaussian(l.mean, l.sd, c.quadrature);
        if (l.family == "two-sided-exponential") {
            return SizeLaw::two_sided_exponential(l.beta_plus, l.beta_minus, l.p_plus, c.quadrature);
        }
        if (l.family == "discrete") return SizeLaw::discrete(l.atoms);
        detail::field_error("jumps.law.family", "unknown size law '" + l.family + "'");
    }();
    if (jc.intensity == "constant") {
        if (!jc.lambda_bar || *jc.lambda_bar == jc.lambda) return JumpModel::constant(jc.lambda, std::move(law));
        const double l = jc.lambda;
        JumpModel jm([l](double) { return l; }, *jc.lambda_bar, std::move(law));
        jm.check_domination(c.grid.T);
        return jm;
    }
    if (jc.intensity == "linear") {
        auto base = JumpModel::linear(jc.lambda, jc.lambda_end, c.grid.T, law);
        if (!jc.lambda_bar) return base;
        const double a = jc.lambda, b = jc.lambda_end, T = c.grid.T;
        JumpModel jm([=](double t) { return a + (b - a) * t / T; }, *jc.lambda_bar, std::move(law));
        jm.check_domination(c.grid.T);
        return jm;
    }
    detail::field_error("jumps.intensity", "expected 'constant' or 'linear', got '" + jc.intensity + "'");
}

inline Payoff build_payoff(const PayoffConfig& p) {
    if (p.kind == "identity") return Payoff::identity();
    if (p.kind == "constant") return Payoff::constant(p.value);
    if (p.kind == "power") {
        detail::require(p.power >= 0, "experiment.payoff.power", "must be >= 0");
        return Payoff::power(p.power);
    }
    if (p.kind == "sine") return Payoff::sine();
    if (p.kind == "call") return Payoff::call(p.strike);
    detail::field_error("experiment.payoff.kind", "unknown payoff '" + p.kind + "'");
}

inline BdgIntegrand build_integrand(const IntegrandConfig& ic) {
    if (ic.kind == "mark") return BdgIntegrand::mark(ic.scale);
    if (ic.kind == "zero") return BdgIntegrand::zero();
    detail::field_error("experiment.integrand.kind", "unknown integrand '" + ic.kind + "'");
}

/// Module preconditions for the selected experiment, checked up front.
inline void validate_run_config(const RunConfig& c) {
    using detail::require;
    const auto& e = c.experiment;
    bool known = false;
    for (const auto& n : experiment_names()) known = known || n == e.name;
    require(known, "experiment.name", "unknown experiment '" + e.name + "'");

    require(c.grid.T > 0.0, "grid.T", "horizon must be > 0 (simulate)");
    require(c.grid.n_steps >= 1, "grid.n_steps", "must be >= 1 (simulate)");
    require(c.quadrature >= 8, "model.quadrature", "needs at least 8 nodes (model)");
    require(c.model.n_max >= 0, "model.n_max", "must be >= 0 (model)");
    require(c.mc.workers >= 0, "mc.workers", "must be >= 0, 0 meaning all cores (montecarlo)");
    require(e.p >= 1.0, "experiment.p", "moment order must be >= 1 (constants)");

    const bool mc_needed = e.name == "verify-bdg" || e.name == "verify-moments" || e.name == "verify-derivatives" ||
                           e.name == "greeks";
    if (mc_needed) require(c.mc.paths >= 100, "mc.paths", "need at least 100 paths (montecarlo)");
    if (e.name == "constants") return;

    if (e.name != "verify-bdg") {
        try {
            (void)build_coefficients(c.model);
        } catch (const Error& err) {
            throw Error(ErrorCode::invalid_config, std::string("model: ") + err.what());
        }
    }
    try {
        (void)build_jump_model(c);
    } catch (const Error& err) {
        if (err.code() == ErrorCode::invalid_config) throw;
        throw Error(ErrorCode::invalid_config, std::string("jumps: ") + err.what());
    }

    if (e.name == "bound" || e.name == "verify-moments") {
        require(e.p >= 2.0, "experiment.p", "moment bound needs p >= 2 (constants)");
    }
    if (e.name == "verify-bdg") {
        require(e.p >= 2.0, "experiment.p", "jump BDG needs p >= 2 (constants)");
        (void)build_integrand(e.integrand);
    }
    if (e.name == "simulate") {
        require(e.n >= 0 && e.n <= c.model.n_max, "experiment.n", "derivative order must be in [0, model.n_max] (simulate)");
        require(e.record_paths >= 1, "experiment.record_paths", "must be >= 1 (simulate)");
    }
    if (e.name == "verify-derivatives") {
        require(e.n >= 1 && e.n <= c.model.n_max, "experiment.n", "must be in [1, model.n_max] (montecarlo)");
        require(e.n <= 6, "experiment.n", "partition tables stop at order 6 (partitions)");
        require(e.q >= 2.0, "experiment.q", "must be >= 2 (constants)");
        require(!e.x_grid.empty(), "experiment.x_grid", "must be nonempty (montecarlo)");
    }
    if (e.name == "greeks") {
        require(e.n >= 1 && e.n <= c.model.n_max, "experiment.n", "must be in [1, model.n_max] (montecarlo)");
        require(e.n <= 6, "experiment.n", "partition tables stop at order 6 (partitions)");
        require(e.h > 0.0, "experiment.h", "finite-difference step must be > 0 (montecarlo)");
        if (e.t) require(*e.t > 0.0, "experiment.t", "must be > 0 (montecarlo)");
        const auto f = build_payoff(e.payoff);
        require(e.n <= f.max_order, "experiment.n",
                "payoff '" + f.label + "' has derivatives only up to order " + std::to_string(f.max_order) + " (montecarlo)");
    }
}

/// Normalized configuration with defaults filled in. Worker count is left out
/// because results do not depend on it.
inline json effective_config(const RunConfig& c) {
    json model{{"family", c.model.family}, {"n_max", c.model.n_max}, {"quadrature", c.quadrature}};
    json params = json::object();
    for (const auto& [k, v] : c.model.params) params[k] = v;
    for (const auto& [k, v] : c.model.lists) params[k] = v;
    model["params"] = params;

    json atoms = json::array();
    for (const auto& a : c.jumps.law.atoms) atoms.push_back({a.value, a.probability});
    json law{{"family", c.jumps.law.family}};
    if (c.jumps.law.family == "gaussian") {
        law["mean"] = c.jumps.law.mean;
        law["sd"] = c.jumps.law.sd;
    } else if (c.jumps.law.family == "two-sided-exponential") {
        law["beta_plus"] = c.jumps.law.beta_plus;
        law["beta_minus"] = c.jumps.law.beta_minus;
        law["p_plus"] = c.jumps.law.p_plus;
    } else {
        law["atoms"] = atoms;
    }
    json jumps{{"intensity", c.jumps.intensity}, {"lambda", c.jumps.lambda}, {"law", law}};
    if (c.jumps.intensity == "linear") jumps["lambda_end"] = c.jumps.lambda_end;
    if (c.jumps.lambda_bar) jumps["lambda_bar"] = *c.jumps.lambda_bar;

    const auto& e = c.experiment;
    json exp{{"name", e.name},
             {"p", e.p},
             {"q", e.q},
             {"n", e.n},
             {"x", e.x},
             {"x_grid", e.x_grid},
             {"h", e.h},
             {"fd_check", e.fd_check},
             {"record_paths", e.record_paths},
             {"payoff", {{"kind", e.payoff.kind}, {"strike", e.payoff.strike}, {"value", e.payoff.value}, {"power", e.payoff.power}}},
             {"integrand", {{"kind", e.integrand.kind}, {"scale", e.integrand.scale}}}};
    if (e.t) exp["t"] = *e.t;

    return json{{"model", model},
                {"jumps", jumps},
                {"grid", {{"T", c.grid.T}, {"n_steps", c.grid.n_steps}}},
                {"mc", {{"paths", c.mc.paths}, {"master_seed", c.mc.master_seed}}},
                {"experiment", exp}};
}

/// FNV-1a 64 of the canonical dump, as 16 hex digits.
inline std::string config_digest(const json& effective) {
    const std::string s = effective.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[h & 0xf];
        h >>= 4;
    }
    return out;
}

} // namespace jumpflow
