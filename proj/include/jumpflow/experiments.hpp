#pragma once

// Experiment dispatch and report emission. A report is deterministic given the
// effective config; wall-clock data lives only under "runtime".

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "jumpflow/config.hpp"
#include "jumpflow/constants.hpp"
#include "jumpflow/montecarlo.hpp"
#include "jumpflow/simulate.hpp"

namespace jumpflow {

inline constexpr const char* report_schema = "jumpflow/1";

/// Exit status: 0 holds or success, 2 violated, 3 inconclusive, 1 error.
inline int exit_code(Verdict v) {
    switch (v) {
    case Verdict::holds: return 0;
    case Verdict::violated: return 2;
    case Verdict::inconclusive: return 3;
    }
    return 1;
}

/// violated beats inconclusive beats holds.
inline Verdict worst(Verdict a, Verdict b) {
    auto rank = [](Verdict v) { return v == Verdict::violated ? 2 : (v == Verdict::inconclusive ? 1 : 0); };
    return rank(a) >= rank(b) ? a : b;
}

struct ExperimentResult {
    json report;   // without the runtime block
    int exit_status = 0;
    std::vector<std::pair<std::string, std::string>> files;  // name -> contents
};

namespace detail {

/// Non-finite doubles become strings so they survive JSON round-trips.
inline json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

inline json to_json(const LogValue& v) { return json{{"log", num(v.log)}, {"value", num(v.value)}}; }

inline json to_json(const McEstimate& e) {
    return json{{"mean", num(e.mean)},
                {"stderr", num(e.stderr_)},
                {"n_samples", e.n_samples},
                {"ci95", json::array({num(e.ci_lo), num(e.ci_hi)})}};
}

inline json to_json(const BoundReport& r) {
    return json{{"label", r.label},
                {"estimate", to_json(r.estimate)},
                {"bound", to_json(r.bound)},
                {"log_slack", num(r.log_slack)},
                {"slack_ratio", num(r.slack_ratio)},
                {"verdict", to_string(r.verdict)},
                {"notes", r.notes}};
}

inline json to_json(const BdgConstants& b) {
    json j{{"p", b.p},
           {"c_p", num(b.c_p.value)},
           {"log_values", {{"c_p", num(b.c_p.log)}}}};
    if (b.p >= 2.0) {
        j["tilde_c_p"] = num(b.tilde_c_p.value);
        j["tilde_upper"] = num(b.tilde_upper.value);
        j["recursion_depth"] = b.recursion_depth;
        j["log_values"]["tilde_c_p"] = num(b.tilde_c_p.log);
        j["log_values"]["tilde_upper"] = num(b.tilde_upper.log);
    } else {
        j["tilde_c_p"] = nullptr;
        j["tilde_upper"] = nullptr;
    }
    return j;
}

inline json to_json(const GronwallBound& g) {
    return json{{"p", g.p},
                {"T", g.T},
                {"x", g.x},
                {"F_T", to_json(g.f_T)},
                {"integral_G", to_json(g.g_integral)},
                {"C_pT", to_json(g.c_pT)}};
}

inline json to_json(const AssumptionReport& a) {
    json norms = json::object();
    for (const auto& [q, v] : a.theta_norms) {
        std::ostringstream k;
        k << q;
        norms[k.str()] = num(v);
    }
    return json{{"n", a.n},
                {"lip_bound", num(a.lip_bound)},
                {"max_drift_partial", a.max_drift_partial},
                {"max_diffusion_partial", a.max_diffusion_partial},
                {"max_jump_ratio", a.max_jump_ratio},
                {"theta_norms", norms},
                {"theta_norm_orders_note", "theta norms reported for q in {2, p, 2p}"},
                {"violations", a.violations},
                {"fd_partials", a.fd_partials},
                {"holds", a.holds()}};
}

inline std::string csv_number(double v) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

inline McSettings mc_settings(const RunConfig& c) { return {c.mc.paths, c.mc.master_seed, c.mc.workers}; }

inline BdgConstants constants_for(double p) {
    if (p >= 2.0) return kunita_constant(p);
    BdgConstants b;
    b.p = p;
    b.c_p = LogValue::from_log(log_bdg_constant(p));
    return b;
}

} // namespace detail

inline ExperimentResult run_constants(const RunConfig& c) {
    ExperimentResult r;
    r.report["result"] = detail::to_json(detail::constants_for(c.experiment.p));
    r.report["verdict"] = "success";
    return r;
}

inline ExperimentResult run_bound(const RunConfig& c) {
    const auto coeffs = build_coefficients(c.model);
    const auto jm = build_jump_model(c);
    const auto norms = norms_from_coefficients(coeffs, jm, c.experiment.p, c.grid.T);
    const auto g = gronwall_bound(norms, c.experiment.p, c.grid.T, c.experiment.x);
    ExperimentResult r;
    r.report["result"] = {{"gronwall", detail::to_json(g)},
                          {"constants", detail::to_json(detail::constants_for(c.experiment.p))}};
    r.report["verdict"] = "success";
    return r;
}

inline ExperimentResult run_simulate(const RunConfig& c) {
    const auto coeffs = build_coefficients(c.model);
    const auto jm = build_jump_model(c);
    const TimeGrid grid(c.grid.T, c.grid.n_steps);
    const auto count = static_cast<std::size_t>(c.experiment.record_paths);
    auto paths = parallel_map<PathRecord>(count, c.mc.workers, [&](std::size_t i) {
        return simulate_path(coeffs, jm, c.experiment.x, c.experiment.n, grid, path_seed(c.mc.master_seed, i));
    });
    json rows = json::array();
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const auto& p = paths[i];
        json sup = json::array();
        for (double s : p.running_sup) sup.push_back(detail::num(s));
        json term = json::array();
        for (double v : p.terminal.values) term.push_back(detail::num(v));
        rows.push_back({{"path_index", i},
                        {"seed", p.seed},
                        {"n_jumps", p.jumps.size()},
                        {"terminal", term},
                        {"running_sup", sup}});
    }
    std::ostringstream csv;
    write_paths_csv(csv, paths);
    ExperimentResult r;
    r.report["result"] = {{"paths", rows}, {"csv", "paths.csv"}};
    r.report["verdict"] = "success";
    r.files.emplace_back("paths.csv", csv.str());
    return r;
}

inline ExperimentResult run_verify_moments(const RunConfig& c) {
    const auto coeffs = build_coefficients(c.model);
    const auto jm = build_jump_model(c);
    const TimeGrid grid(c.grid.T, c.grid.n_steps);
    GronwallBound g;
    const auto rep = verify_moment_bound(coeffs, jm, c.experiment.x, c.experiment.p, grid, detail::mc_settings(c),
                                         std::nullopt, &g);
    ExperimentResult r;
    r.report["result"] = {{"bound_report", detail::to_json(rep)}, {"gronwall", detail::to_json(g)}};
    r.report["verdict"] = to_string(rep.verdict);
    r.exit_status = exit_code(rep.verdict);
    return r;
}

inline ExperimentResult run_verify_bdg(const RunConfig& c) {
    const auto jm = build_jump_model(c);
    const auto integrand = build_integrand(c.experiment.integrand);
    const auto b = estimate_bdg_lhs(integrand, jm, c.experiment.p, c.grid.T, c.grid.n_steps, detail::mc_settings(c));
    const Verdict v = worst(b.corollary3.verdict, b.lemma.verdict);
    json powers = json::array();
    for (double m : b.power_moments) powers.push_back(detail::num(m));
    ExperimentResult r;
    r.report["result"] = {
        {"integrand", integrand.label},
        {"sup_moment", detail::to_json(b.sup_moment)},
        {"terminal_square", detail::to_json(b.terminal_square)},
        {"isometry", {{"exact", detail::num(b.isometry)}, {"z", detail::num(combined_z(b.terminal_square, b.isometry))}}},
        {"stats",
         {{"jump_p", detail::num(b.stats.jump_p)}, {"jump_l2_power", detail::num(b.stats.jump_l2_power)}, {"power_moments", powers}}},
        {"time_factored", detail::to_json(b.corollary3)},
        {"jump_bdg", detail::to_json(b.lemma)}};
    r.report["verdict"] = to_string(v);
    r.exit_status = exit_code(v);
    return r;
}

/// CSV columns: x,k,p_k,coarse_mean,coarse_stderr,refined_mean,refined_stderr,z,stable
inline std::string derivative_moments_csv(const DerivativeMomentReport& rep) {
    std::ostringstream os;
    os << "x,k,p_k,coarse_mean,coarse_stderr,refined_mean,refined_stderr,z,stable\n";
    for (const auto& row : rep.rows) {
        os << detail::csv_number(row.x) << ',' << row.k << ',' << detail::csv_number(row.p_k) << ','
           << detail::csv_number(row.coarse.mean) << ',' << detail::csv_number(row.coarse.stderr_) << ','
           << detail::csv_number(row.refined.mean) << ',' << detail::csv_number(row.refined.stderr_) << ','
           << detail::csv_number(row.z) << ',' << (row.stable ? 1 : 0) << '\n';
    }
    return os.str();
}

inline ExperimentResult run_verify_derivatives(const RunConfig& c) {
    const auto coeffs = build_coefficients(c.model);
    const auto jm = build_jump_model(c);
    const TimeGrid grid(c.grid.T, c.grid.n_steps);
    const auto rep = verify_derivative_moments(coeffs, jm, c.experiment.n, c.experiment.q, grid, detail::mc_settings(c),
                                               c.experiment.x_grid);
    Verdict v = Verdict::holds;
    json per = json::array();
    for (const auto& b : rep.per_order) {
        v = worst(v, b.verdict);
        per.push_back(detail::to_json(b));
    }
    json rows = json::array();
    for (const auto& row : rep.rows) {
        rows.push_back({{"x", row.x},
                        {"k", row.k},
                        {"p_k", row.p_k},
                        {"coarse", detail::to_json(row.coarse)},
                        {"refined", detail::to_json(row.refined)},
                        {"z", detail::num(row.z)},
                        {"stable", row.stable}});
    }
    ExperimentResult r;
    r.report["result"] = {{"moment_orders", rep.orders.p},
                          {"in_hypothesis", rep.in_hypothesis},
                          {"x_grid", rep.x_grid},
                          {"per_order", per},
                          {"rows", rows},
                          {"notes", rep.notes},
                          {"csv", "derivative_moments.csv"}};
    r.report["verdict"] = to_string(v);
    r.exit_status = exit_code(v);
    r.files.emplace_back("derivative_moments.csv", derivative_moments_csv(rep));
    return r;
}

inline ExperimentResult run_greeks(const RunConfig& c) {
    const auto coeffs = build_coefficients(c.model);
    const auto jm = build_jump_model(c);
    const auto f = build_payoff(c.experiment.payoff);
    const double t = c.experiment.t.value_or(c.grid.T);
    const auto mc = detail::mc_settings(c);
    const auto est = estimate_semigroup_derivative(coeffs, jm, f, c.experiment.n, t, c.experiment.x, c.grid.n_steps, mc);
    ExperimentResult r;
    json res{{"payoff", f.label}, {"n", c.experiment.n}, {"t", t}, {"x", c.experiment.x}, {"estimate", detail::to_json(est)}};
    if (c.experiment.fd_check && c.experiment.n == 1) {
        const auto fd = finite_difference_oracle(coeffs, jm, f, t, c.experiment.x, c.experiment.h, c.grid.n_steps, mc);
        const double z = combined_z(est, fd);
        res["finite_difference"] = {{"h", c.experiment.h}, {"estimate", detail::to_json(fd)}, {"z", detail::num(z)},
                                    {"agree_3se", z < 3.0}};
    }
    r.report["result"] = res;
    r.report["verdict"] = "success";
    return r;
}

/// Validates, dispatches and assembles the deterministic part of the report.
inline ExperimentResult run_experiment(const RunConfig& c) {
    validate_run_config(c);
    const json eff = effective_config(c);
    ExperimentResult r;
    const auto& name = c.experiment.name;
    if (name == "constants") r = run_constants(c);
    else if (name == "bound") r = run_bound(c);
    else if (name == "simulate") r = run_simulate(c);
    else if (name == "verify-moments") r = run_verify_moments(c);
    else if (name == "verify-bdg") r = run_verify_bdg(c);
    else if (name == "verify-derivatives") r = run_verify_derivatives(c);
    else if (name == "greeks") r = run_greeks(c);
    r.report["schema"] = report_schema;
    r.report["experiment"] = name;
    r.report["config_digest"] = config_digest(eff);
    r.report["master_seed"] = c.mc.master_seed;
    r.report["effective_config"] = eff;
    r.report["exit_status"] = r.exit_status;
    return r;
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

/// Report without the runtime block, as compared across reruns.
inline json deterministic_part(json report) {
    report.erase("runtime");
    return report;
}

/// Writes report.json and any CSV artifacts into `dir` (created if needed).
inline void write_artifacts(const std::filesystem::path& dir, const json& report, const ExperimentResult& r) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "report.json");
        if (!out) throw Error(ErrorCode::invalid_config, "cannot write " + (dir / "report.json").string());
        out << report.dump(2) << '\n';
    }
    for (const auto& [name, contents] : r.files) {
        std::ofstream out(dir / name);
        if (!out) throw Error(ErrorCode::invalid_config, "cannot write " + (dir / name).string());
        out << contents;
    }
}

} // namespace jumpflow
