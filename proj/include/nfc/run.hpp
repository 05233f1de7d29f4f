// run.hpp - executes a RunConfig: dispatches to the analytic or numerical
// path, writes outputs under cfg.out and prints "E=<v> F=<v>".

#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "nfc/analytic.hpp"
#include "nfc/config.hpp"
#include "nfc/io.hpp"
#include "nfc/scan.hpp"
#include "nfc/solver.hpp"
#include "nfc/version.hpp"

namespace nfc {

struct ExecResult {
    double efficiency = 0.0;
    double fidelity = 0.0;
    std::vector<std::string> files; // relative to cfg.out
};

namespace detail {

class OutputDir {
public:
    explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {}
    void write(const std::string& name, const std::string& content) {
        write_file_atomic(root_ / name, content);
        files_.push_back(name);
    }
    const std::vector<std::string>& files() const { return files_; }

private:
    std::filesystem::path root_;
    std::vector<std::string> files_;
};

inline nlohmann::ordered_json comb_json(const CombSystem& c) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& t : c.targets)
        arr.push_back({{"xi", t.xi},
                       {"hyperfine", t.hyperfine},
                       {"doppler_static", t.doppler_static},
                       {"epsilon", t.motion.epsilon},
                       {"tau_d", t.motion.tau_d},
                       {"b_d", t.motion.b_d}});
    return {{"S", c.spacing}, {"k", c.shape_k}, {"total_xi", c.total_xi()}, {"targets", arr}};
}

inline nlohmann::ordered_json grid_json(const Grid& g) {
    return {{"t0", g.t0}, {"t1", g.t1}, {"dt", g.dt}, {"nz", g.nz}};
}

inline nlohmann::ordered_json pulse_json(const PulseSpec& p) {
    return {{"omega0", p.omega0}, {"tau_i", p.tau_i}, {"tau_p", p.tau_p}};
}

inline nlohmann::ordered_json scan_json(const ScanResult& r) {
    nlohmann::ordered_json axes = nlohmann::ordered_json::object();
    for (const auto& a : r.axes) axes[a.name] = a.values.size();
    nlohmann::ordered_json j{{"scenario", r.scenario},
                             {"axes", axes},
                             {"grid_hash", r.grid_hash},
                             {"config_hash", r.config_hash}};
    if (!r.points.empty()) {
        auto pts = nlohmann::ordered_json::array();
        for (const auto& p : r.points) {
            nlohmann::ordered_json params = nlohmann::ordered_json::object();
            for (const auto& [k, v] : p.params) params[k] = v;
            pts.push_back({{"label", p.label}, {"params", params}, {"E", p.efficiency}, {"F", p.fidelity}});
        }
        j["points"] = pts;
    }
    return j;
}

inline void print_ef(std::ostream& os, double e, double f) { os << "E=" << fmt17(e) << " F=" << fmt17(f) << "\n"; }

inline void write_report(OutputDir& out, const std::string& stem, const EchoReport& r) {
    out.write(stem + ".json", dump(to_json(r)));
    out.write(stem + ".csv", std::string(report_csv_header()) + report_csv_row(r));
}

inline std::size_t best_cell(const ScanResult& r) {
    std::size_t b = 0;
    for (std::size_t i = 1; i < r.efficiency.size(); ++i)
        if (r.efficiency[i] > r.efficiency[b]) b = i;
    return b;
}

} // namespace detail

/// Runs the configured mode. Errors propagate as nfc::Error subclasses;
/// files written before the error stay in place.
inline ExecResult execute(const RunConfig& cfg, std::ostream& os, const PhysConstants& pc = fe57()) {
    detail::OutputDir out(cfg.out);
    ExecResult res;
    const ReportOptions ropts{cfg.window, resolved_shift_mode(cfg)};
    nlohmann::ordered_json resolved;
    resolved["shift_mode"] = std::string(to_string(ropts.shift_mode));
    nlohmann::ordered_json results;

    switch (cfg.mode) {
    case Mode::Analytic: {
        const auto pulse = resolved_pulse(cfg);
        const auto comb = build_comb(cfg, pc);
        const auto sc = make_series_config(pulse, comb.spacing, cfg.series_tol, cfg.half_period_T, pc);
        resolved["pulse"] = detail::pulse_json(pulse);
        resolved["comb"] = detail::comb_json(comb);
        resolved["series"] = {{"half_period_T", sc.half_period_T}, {"l_max", sc.l_max}, {"truncation_tol", sc.truncation_tol}};
        const auto run = analytic_run(pulse, comb, sc, std::nullopt, pc);
        out.write("trace_input.csv", trace_csv(run.input));
        out.write("trace_output.csv", trace_csv(run.output));
        const auto r = report(run.input, run.output, pulse, comb, ropts, pc);
        detail::write_report(out, "report", r);
        results = to_json(r);
        res.efficiency = r.efficiency;
        res.fidelity = r.fidelity;
        detail::print_ef(os, r.efficiency, r.fidelity);
        break;
    }
    case Mode::Simulate: {
        const auto pulse = resolved_pulse(cfg);
        const auto comb = build_comb(cfg, pc);
        const Grid g = cfg.grid ? *cfg.grid : auto_grid(comb, pulse, pc);
        resolved["pulse"] = detail::pulse_json(pulse);
        resolved["comb"] = detail::comb_json(comb);
        resolved["grid"] = detail::grid_json(g);
        const auto traces = simulate_chain(comb, pulse, g, pc);
        out.write("trace_input.csv", trace_csv(traces.front()));
        out.write("trace_output.csv", trace_csv(traces.back()));
        const auto r = report(traces.front(), traces.back(), pulse, comb, ropts, pc);
        detail::write_report(out, "report", r);
        results = to_json(r);
        res.efficiency = r.efficiency;
        res.fidelity = r.fidelity;
        detail::print_ef(os, r.efficiency, r.fidelity);
        break;
    }
    case Mode::ScanKXi: {
        const auto pulse = resolved_pulse(cfg);
        resolved["pulse"] = detail::pulse_json(pulse);
        const auto r = scan_k_xi(pulse, cfg.s, cfg.m, linear_grid(cfg.k_min, cfg.k_max, cfg.k_step),
                                 linear_grid(cfg.xi_min, cfg.xi_max, cfg.xi_step), cfg.threads, pc);
        out.write("scan.csv", scan_csv(r));
        out.write("efficiency_map.csv", efficiency_map_csv(r));
        results = detail::scan_json(r);
        const auto b = detail::best_cell(r);
        res.efficiency = r.efficiency[b];
        res.fidelity = r.fidelity[b];
        detail::print_ef(os, res.efficiency, res.fidelity);
        break;
    }
    case Mode::ScanM: {
        const auto pulse = resolved_pulse(cfg);
        const auto xs = resolved_xi_bar_grid(cfg);
        resolved["pulse"] = detail::pulse_json(pulse);
        resolved["xi_bar_grid"] = {{"min", xs.front()}, {"max", xs.back()}, {"points", xs.size()}};
        const auto r = scan_m(pulse, cfg.s, cfg.k, cfg.m_list, xs.front(), xs.back(),
                              cfg.xi_bar_step.value_or(0.05), cfg.threads, pc);
        out.write("scan.csv", scan_csv(r));
        results = detail::scan_json(r);
        const auto b = detail::best_cell(r);
        res.efficiency = r.efficiency[b];
        res.fidelity = r.fidelity[b];
        detail::print_ef(os, res.efficiency, res.fidelity);
        break;
    }
    case Mode::ScanDyn: {
        auto p = scenario_params(cfg);
        const auto xs = resolved_xi_bar_grid(cfg);
        if (!p.tau_i) {
            ScenarioParams ref = p;
            ref.xi_bar = ref.xi_bar.value_or(default_xi_bar(ScenarioId::Doppler6));
            p.tau_i = calibrate_tau_i(scenario_comb(ScenarioId::Doppler6, ref), p.tau_p, p.tau_i_grid, p.grid,
                                      ReportOptions{p.window, p.shift_mode}, cfg.threads, pc)
                          .tau_i;
        }
        resolved["tau_i"] = *p.tau_i;
        resolved["tau_p"] = p.tau_p;
        const auto with = scan_dynamical_xi(xs, true, p, cfg.threads, pc);
        const auto without = scan_dynamical_xi(xs, false, p, cfg.threads, pc);
        ScanResult both;
        both.scenario = "scan_dyn";
        both.axes = {{"with_outer_pair", {1.0, 0.0}}, {"xi_bar", xs}};
        both.efficiency = with.efficiency;
        both.efficiency.insert(both.efficiency.end(), without.efficiency.begin(), without.efficiency.end());
        both.fidelity = with.fidelity;
        both.fidelity.insert(both.fidelity.end(), without.fidelity.begin(), without.fidelity.end());
        both.grid_hash = detail::hash_axes(both.axes);
        both.config_hash = with.config_hash;
        out.write("scan.csv", scan_csv(both));
        results = detail::scan_json(both);
        double de = 0.0, df = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            de = std::max(de, std::abs(with.efficiency[i] - without.efficiency[i]));
            df = std::max(df, std::abs(with.fidelity[i] - without.fidelity[i]));
        }
        results["max_abs_dE"] = de;
        results["max_abs_dF"] = df;
        const auto b = detail::best_cell(with);
        res.efficiency = with.efficiency[b];
        res.fidelity = with.fidelity[b];
        detail::print_ef(os, res.efficiency, res.fidelity);
        break;
    }
    case Mode::Scenario: {
        const auto sr = run_scenario(*cfg.scenario, scenario_params(cfg), cfg.threads, pc);
        nlohmann::ordered_json params{{"tau_p", sr.params.tau_p},
                                      {"S", sr.params.s},
                                      {"tau_d", sr.params.tau_d},
                                      {"b_d", sr.params.b_d},
                                      {"thickness", std::string(to_string(sr.params.thickness))},
                                      {"shift_mode", std::string(to_string(sr.params.shift_mode))}};
        if (sr.params.xi_bar) params["xi_bar"] = *sr.params.xi_bar;
        if (sr.params.tau_i) params["tau_i"] = *sr.params.tau_i;
        params["tau_i_source"] = cfg.tau_i ? "override" : (sr.calibration ? "calibrated" : "default");
        resolved["scenario"] = params;
        if (sr.calibration) {
            std::string csv = "tau_i,E\n";
            for (std::size_t i = 0; i < sr.calibration->grid.size(); ++i)
                csv += fmt17(sr.calibration->grid[i]) + "," + fmt17(sr.calibration->efficiency[i]) + "\n";
            out.write("calibration.csv", csv);
        }
        auto runs = nlohmann::ordered_json::array();
        for (const auto& run : sr.runs) {
            const std::string stem = sr.runs.size() == 1 ? "" : run.label + "_";
            out.write(stem + "trace_input.csv", trace_csv(run.traces.front()));
            out.write(stem + "trace_output.csv", trace_csv(run.traces.back()));
            detail::write_report(out, stem + "report", run.report);
            nlohmann::ordered_json rj{{"label", run.label}, {"method", run.method},
                                      {"pulse", detail::pulse_json(run.pulse)}, {"comb", detail::comb_json(run.comb)}};
            if (run.grid) rj["grid"] = detail::grid_json(*run.grid);
            rj["report"] = to_json(run.report);
            runs.push_back(rj);
            if (sr.runs.size() == 1)
                detail::print_ef(os, run.report.efficiency, run.report.fidelity);
            else
                os << "E=" << fmt17(run.report.efficiency) << " F=" << fmt17(run.report.fidelity)
                   << " label=" << run.label << "\n";
        }
        results["runs"] = runs;
        res.efficiency = sr.runs.front().report.efficiency;
        res.fidelity = sr.runs.front().report.fidelity;
        break;
    }
    case Mode::Convergence: {
        const auto pulse = resolved_pulse(cfg);
        const auto comb = build_comb(cfg, pc);
        const Grid base = cfg.grid ? *cfg.grid : auto_grid(comb, pulse, pc);
        resolved["pulse"] = detail::pulse_json(pulse);
        resolved["comb"] = detail::comb_json(comb);
        resolved["base_grid"] = detail::grid_json(base);
        ConvergenceOptions co;
        co.tolerance = cfg.tolerance;
        co.max_levels = cfg.max_levels;
        co.report = ropts;
        const auto cr = convergence_study(comb, pulse, base, co, pc);
        out.write("convergence.csv", convergence_csv(cr));
        const auto& lv = cr.levels[static_cast<std::size_t>(cr.converged_level)];
        results = {{"converged_level", cr.converged_level}, {"converged_grid", detail::grid_json(cr.converged)},
                   {"E", lv.efficiency}, {"F", lv.fidelity}};
        res.efficiency = lv.efficiency;
        res.fidelity = lv.fidelity;
        detail::print_ef(os, res.efficiency, res.fidelity);
        break;
    }
    }

    nlohmann::ordered_json manifest{{"version", kVersion},
                                    {"mode", std::string(to_string(cfg.mode))},
                                    {"config", serialize(cfg)},
                                    {"resolved", resolved},
                                    {"results", results}};
    auto files = out.files();
    manifest["files"] = files;
    out.write("manifest.json", dump(manifest));
    res.files = out.files();
    return res;
}

/// Machine-readable record of a failed run.
inline nlohmann::ordered_json error_record(const Error& e) {
    nlohmann::ordered_json j{{"error", e.kind()}, {"exit_code", e.exit_code()}, {"message", e.what()}};
    if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) j["field"] = ce->field();
    return j;
}

} // namespace nfc
