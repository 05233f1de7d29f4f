// config.hpp - run configuration: JSON parsing with field-level errors,
// serialization, --set overrides and comb construction.
//
// A config is one flat JSON object. Only "targets" (a list of objects) and
// "grid" (an object, or the string "auto") nest. Unknown keys are errors.

#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "nfc/comb_model.hpp"
#include "nfc/errors.hpp"
#include "nfc/metrics.hpp"
#include "nfc/scan.hpp"
#include "nfc/solver.hpp"

namespace nfc {

enum class Mode { Analytic, Simulate, ScanKXi, ScanM, ScanDyn, Scenario, Convergence };

inline const std::vector<std::pair<Mode, std::string_view>>& mode_names() {
    static const std::vector<std::pair<Mode, std::string_view>> names{
        {Mode::Analytic, "analytic"}, {Mode::Simulate, "simulate"}, {Mode::ScanKXi, "scan-kxi"},
        {Mode::ScanM, "scan-m"},      {Mode::ScanDyn, "scan-dyn"},  {Mode::Scenario, "scenario"},
        {Mode::Convergence, "convergence"},
    };
    return names;
}

inline std::string_view to_string(Mode m) {
    for (const auto& [k, v] : mode_names())
        if (k == m) return v;
    return "?";
}

inline std::optional<Mode> parse_mode(std::string_view s) {
    for (const auto& [k, v] : mode_names())
        if (v == s) return k;
    return std::nullopt;
}

struct RunConfig {
    Mode mode = Mode::Analytic;
    std::optional<std::string> scenario;

    double omega0 = 1.0;
    std::optional<double> tau_i; // 5 tau_p, or calibrated for dynamical modes
    std::optional<double> tau_p; // 7 ns for dynamical modes, else 5 ns

    std::string comb = "shaped"; // flat | shaped | hybrid | doppler | targets
    double s = 50.0;
    int m = 9;
    double k = 0.0;
    std::optional<double> xi_bar;
    std::optional<double> xi_total;
    std::optional<std::string> variant;
    double tau_d = 60.0;
    double b_d = 100.0;
    HybridThickness thickness = HybridThickness::LineMatched;
    std::vector<TargetSpec> targets;

    std::optional<Grid> grid; // auto when unset
    std::optional<EchoWindow> window;
    std::optional<ShiftMode> shift_mode;

    double series_tol = 1e-12;
    std::optional<double> half_period_T;

    double k_min = 0.0, k_max = 1.0, k_step = 0.1;
    double xi_min = 0.0, xi_max = 200.0, xi_step = 5.0;
    std::vector<int> m_list{1, 3, 5, 7, 9, 11, 13, 15, 17, 19, 21};
    std::optional<double> xi_bar_min, xi_bar_max, xi_bar_step;
    double tau_i_min = 10.0, tau_i_max = 58.0, tau_i_step = 2.0;

    double tolerance = 1e-3;
    int max_levels = 6;

    std::string out = "out";
    int threads = 1;

    bool operator==(const RunConfig&) const = default;
};

inline bool is_dynamical_mode(Mode m) { return m == Mode::Scenario || m == Mode::ScanDyn; }

inline double resolved_tau_p(const RunConfig& c) { return c.tau_p.value_or(is_dynamical_mode(c.mode) ? 7.0 : 5.0); }

inline ShiftMode resolved_shift_mode(const RunConfig& c) {
    return c.shift_mode.value_or(is_dynamical_mode(c.mode) ? ShiftMode::Optimize : ShiftMode::Auto);
}

inline double resolved_tau_i(const RunConfig& c) { return c.tau_i.value_or(5.0 * resolved_tau_p(c)); }

inline PulseSpec resolved_pulse(const RunConfig& c) { return {c.omega0, resolved_tau_i(c), resolved_tau_p(c)}; }

inline std::vector<double> resolved_tau_i_grid(const RunConfig& c) {
    return linear_grid(c.tau_i_min, c.tau_i_max, c.tau_i_step);
}

/// xi_bar grid: [0, 15] in steps of 0.05 for scan-m, 0.4 for scan-dyn.
inline std::vector<double> resolved_xi_bar_grid(const RunConfig& c) {
    const double lo = c.xi_bar_min.value_or(0.0);
    const double hi = c.xi_bar_max.value_or(15.0);
    const double st = c.xi_bar_step.value_or(c.mode == Mode::ScanDyn ? 0.4 : 0.05);
    return hi > lo ? linear_grid(lo, hi, st) : std::vector<double>{lo};
}

namespace detail {

using json = nlohmann::json;

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "mode",      "scenario",   "omega0",     "tau_i",      "tau_p",     "comb",        "S",
        "M",         "k",          "xi_bar",     "xi",         "variant",   "tau_d",       "b_d",
        "thickness", "targets",    "grid",       "window",     "shift_mode", "series_tol", "half_period_T",
        "k_min",     "k_max",      "k_step",     "xi_min",     "xi_max",    "xi_step",     "m_list",
        "xi_bar_min", "xi_bar_max", "xi_bar_step", "tau_i_min", "tau_i_max", "tau_i_step", "tolerance",
        "max_levels", "out",       "threads",
    };
    return keys;
}

inline const std::set<std::string>& target_keys() {
    static const std::set<std::string> keys{"xi", "hyperfine", "doppler_static", "epsilon", "tau_d", "b_d"};
    return keys;
}

inline double get_number(const json& j, const std::string& field) {
    if (!j.is_number()) throw ConfigError(field, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
    return v;
}

inline int get_int(const json& j, const std::string& field) {
    if (j.is_number_integer()) return j.get<int>();
    if (j.is_number_float()) {
        const double v = j.get<double>();
        if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e9) return static_cast<int>(v);
    }
    throw ConfigError(field, "expected an integer");
}

inline std::string get_string(const json& j, const std::string& field) {
    if (!j.is_string()) throw ConfigError(field, "expected a string");
    return j.get<std::string>();
}

template <class T, class Fn>
T with_field(const std::string& field, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(field, e.what());
    }
}

inline TargetSpec parse_target(const json& j, std::size_t idx, double s) {
    const std::string base = "targets[" + std::to_string(idx) + "]";
    if (!j.is_object()) throw ConfigError(base, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!target_keys().count(it.key())) throw ConfigError(base + "." + it.key(), "unknown key");
    TargetSpec t;
    if (!j.contains("xi")) throw ConfigError(base + ".xi", "required");
    t.xi = get_number(j["xi"], base + ".xi");
    if (t.xi < 0.0) throw ConfigError(base + ".xi", "must be non-negative");
    if (j.contains("hyperfine")) t.hyperfine = get_number(j["hyperfine"], base + ".hyperfine");
    if (j.contains("doppler_static")) t.doppler_static = get_number(j["doppler_static"], base + ".doppler_static");
    if (j.contains("epsilon")) {
        t.motion.epsilon = get_int(j["epsilon"], base + ".epsilon");
        if (t.motion.epsilon < -1 || t.motion.epsilon > 1) throw ConfigError(base + ".epsilon", "must be -1, 0 or 1");
    }
    if (j.contains("tau_d")) t.motion.tau_d = get_number(j["tau_d"], base + ".tau_d");
    if (j.contains("b_d")) t.motion.b_d = get_number(j["b_d"], base + ".b_d");
    if (t.motion.epsilon != 0 && !(t.motion.b_d > 0.0))
        throw ConfigError(base + ".b_d", "must be positive for an accelerated target");
    t.motion.s_units = t.motion.epsilon != 0 ? s : 0.0;
    return t;
}

} // namespace detail

/// Validates a JSON config object. `mode_hint` fills a missing "mode" and
/// must agree with a present one.
inline RunConfig parse_config(const nlohmann::json& j, std::optional<Mode> mode_hint = std::nullopt) {
    using detail::get_int;
    using detail::get_number;
    using detail::get_string;
    if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!detail::known_keys().count(it.key())) throw ConfigError(it.key(), "unknown key");

    RunConfig c;
    if (j.contains("mode")) {
        const auto s = get_string(j["mode"], "mode");
        const auto m = parse_mode(s);
        if (!m) throw ConfigError("mode", "unknown mode '" + s + "'");
        if (mode_hint && *mode_hint != *m)
            throw ConfigError("mode", "config says '" + s + "' but '" + std::string(to_string(*mode_hint)) +
                                          "' was requested");
        c.mode = *m;
    } else if (mode_hint) {
        c.mode = *mode_hint;
    } else {
        throw ConfigError("mode", "required");
    }

    auto num = [&](const char* key, auto& dst) {
        if (j.contains(key)) dst = get_number(j[key], key);
    };
    auto positive = [&](const char* key, double v) {
        if (!(v > 0.0)) throw ConfigError(key, "must be positive");
    };

    if (j.contains("scenario")) {
        c.scenario = get_string(j["scenario"], "scenario");
        detail::with_field<ScenarioId>("scenario", [&] { return parse_scenario_id(*c.scenario); });
    }
    if (c.mode == Mode::Scenario && !c.scenario) throw ConfigError("scenario", "required in scenario mode");

    num("omega0", c.omega0);
    if (c.omega0 == 0.0) throw ConfigError("omega0", "must be nonzero");
    if (j.contains("tau_i")) c.tau_i = get_number(j["tau_i"], "tau_i");
    if (j.contains("tau_p")) {
        c.tau_p = get_number(j["tau_p"], "tau_p");
        positive("tau_p", *c.tau_p);
    }

    if (j.contains("comb")) {
        c.comb = get_string(j["comb"], "comb");
        static const std::set<std::string> combs{"flat", "shaped", "hybrid", "doppler", "targets"};
        if (!combs.count(c.comb))
            throw ConfigError("comb", "unknown comb '" + c.comb + "' (expected flat, shaped, hybrid, doppler or targets)");
    }
    num("S", c.s);
    positive("S", c.s);
    if (j.contains("M")) c.m = get_int(j["M"], "M");
    if (c.m < 1) throw ConfigError("M", "must be >= 1");
    num("k", c.k);
    if (c.k < 0.0) throw ConfigError("k", "must be non-negative");
    if (j.contains("xi_bar")) {
        c.xi_bar = get_number(j["xi_bar"], "xi_bar");
        if (*c.xi_bar < 0.0) throw ConfigError("xi_bar", "must be non-negative");
    }
    if (j.contains("xi")) {
        c.xi_total = get_number(j["xi"], "xi");
        if (*c.xi_total < 0.0) throw ConfigError("xi", "must be non-negative");
    }
    if (c.xi_bar && c.xi_total) throw ConfigError("xi", "give either xi (total) or xi_bar, not both");
    if (j.contains("variant")) c.variant = get_string(j["variant"], "variant");
    num("tau_d", c.tau_d);
    num("b_d", c.b_d);
    positive("b_d", c.b_d);
    if (j.contains("thickness"))
        c.thickness = detail::with_field<HybridThickness>(
            "thickness", [&] { return parse_hybrid_thickness(get_string(j["thickness"], "thickness")); });
    if (j.contains("targets")) {
        if (!j["targets"].is_array()) throw ConfigError("targets", "expected a list of objects");
        for (std::size_t i = 0; i < j["targets"].size(); ++i) c.targets.push_back(detail::parse_target(j["targets"][i], i, c.s));
    }

    if (c.comb == "shaped" && c.m % 2 == 0)
        throw ConfigError("M", "shaped comb needs an odd number of targets M, got M=" + std::to_string(c.m));
    if (c.comb == "hybrid" && c.variant)
        detail::with_field<HybridVariant>("variant", [&] { return parse_hybrid_variant(*c.variant); });
    if (c.comb == "doppler" && c.variant)
        detail::with_field<DopplerVariant>("variant", [&] { return parse_doppler_variant(*c.variant); });
    if (c.comb == "targets" && c.targets.empty()) throw ConfigError("targets", "required when comb is 'targets'");

    if (j.contains("grid")) {
        const auto& g = j["grid"];
        if (g.is_string()) {
            if (g.get<std::string>() != "auto") throw ConfigError("grid", "expected \"auto\" or an object");
        } else if (g.is_object()) {
            for (auto it = g.begin(); it != g.end(); ++it)
                if (it.key() != "t0" && it.key() != "t1" && it.key() != "dt" && it.key() != "nz")
                    throw ConfigError("grid." + it.key(), "unknown key");
            for (const char* key : {"t1", "dt"})
                if (!g.contains(key)) throw ConfigError(std::string("grid.") + key, "required");
            Grid gr;
            if (g.contains("t0")) gr.t0 = get_number(g["t0"], "grid.t0");
            gr.t1 = get_number(g["t1"], "grid.t1");
            gr.dt = get_number(g["dt"], "grid.dt");
            if (g.contains("nz")) gr.nz = get_int(g["nz"], "grid.nz");
            if (!(gr.dt > 0.0)) throw ConfigError("grid.dt", "must be positive");
            if (gr.nz < 1) throw ConfigError("grid.nz", "must be >= 1");
            if (!(gr.t1 > gr.t0)) throw ConfigError("grid.t1", "must exceed grid.t0");
            c.grid = gr;
        } else {
            throw ConfigError("grid", "expected \"auto\" or an object");
        }
    }
    if (j.contains("window")) {
        const auto& w = j["window"];
        if (!w.is_array() || w.size() != 2) throw ConfigError("window", "expected [t1, t2]");
        EchoWindow ew{get_number(w[0], "window[0]"), get_number(w[1], "window[1]")};
        if (!(ew.t1 < ew.t2)) throw ConfigError("window", "needs t1 < t2");
        c.window = ew;
    }
    if (j.contains("shift_mode"))
        c.shift_mode = detail::with_field<ShiftMode>(
            "shift_mode", [&] { return parse_shift_mode(get_string(j["shift_mode"], "shift_mode")); });

    num("series_tol", c.series_tol);
    if (!(c.series_tol > 0.0 && c.series_tol < 1.0)) throw ConfigError("series_tol", "must lie in (0, 1)");
    if (j.contains("half_period_T")) {
        c.half_period_T = get_number(j["half_period_T"], "half_period_T");
        positive("half_period_T", *c.half_period_T);
    }

    num("k_min", c.k_min);
    num("k_max", c.k_max);
    num("k_step", c.k_step);
    num("xi_min", c.xi_min);
    num("xi_max", c.xi_max);
    num("xi_step", c.xi_step);
    positive("k_step", c.k_step);
    positive("xi_step", c.xi_step);
    if (c.k_min < 0.0) throw ConfigError("k_min", "must be non-negative");
    if (c.k_max < c.k_min) throw ConfigError("k_max", "must not be below k_min");
    if (c.xi_min < 0.0) throw ConfigError("xi_min", "must be non-negative");
    if (c.xi_max < c.xi_min) throw ConfigError("xi_max", "must not be below xi_min");
    if (j.contains("m_list")) {
        const auto& ml = j["m_list"];
        if (!ml.is_array() || ml.empty()) throw ConfigError("m_list", "expected a non-empty list of odd integers");
        c.m_list.clear();
        for (std::size_t i = 0; i < ml.size(); ++i) {
            const std::string f = "m_list[" + std::to_string(i) + "]";
            const int m = get_int(ml[i], f);
            if (m < 1 || m % 2 == 0) throw ConfigError(f, "M must be odd and positive, got " + std::to_string(m));
            c.m_list.push_back(m);
        }
    }
    if (j.contains("xi_bar_min")) c.xi_bar_min = get_number(j["xi_bar_min"], "xi_bar_min");
    if (j.contains("xi_bar_max")) c.xi_bar_max = get_number(j["xi_bar_max"], "xi_bar_max");
    if (j.contains("xi_bar_step")) {
        c.xi_bar_step = get_number(j["xi_bar_step"], "xi_bar_step");
        positive("xi_bar_step", *c.xi_bar_step);
    }
    if (c.xi_bar_min && *c.xi_bar_min < 0.0) throw ConfigError("xi_bar_min", "must be non-negative");
    if (c.xi_bar_max.value_or(15.0) < c.xi_bar_min.value_or(0.0))
        throw ConfigError("xi_bar_max", "must not be below xi_bar_min");
    num("tau_i_min", c.tau_i_min);
    num("tau_i_max", c.tau_i_max);
    num("tau_i_step", c.tau_i_step);
    positive("tau_i_step", c.tau_i_step);
    if (c.tau_i_max < c.tau_i_min) throw ConfigError("tau_i_max", "must not be below tau_i_min");

    num("tolerance", c.tolerance);
    positive("tolerance", c.tolerance);
    if (j.contains("max_levels")) c.max_levels = get_int(j["max_levels"], "max_levels");
    if (c.max_levels < 1) throw ConfigError("max_levels", "must be >= 1");

    if (j.contains("out")) c.out = get_string(j["out"], "out");
    if (c.out.empty()) throw ConfigError("out", "must not be empty");
    if (j.contains("threads")) c.threads = get_int(j["threads"], "threads");
    if (c.threads < 1) throw ConfigError("threads", "must be >= 1");
    return c;
}

inline RunConfig parse_config_text(std::string_view text, std::optional<Mode> mode_hint = std::nullopt) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j, mode_hint);
}

inline nlohmann::ordered_json serialize(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["mode"] = std::string(to_string(c.mode));
    if (c.scenario) j["scenario"] = *c.scenario;
    j["omega0"] = c.omega0;
    if (c.tau_i) j["tau_i"] = *c.tau_i;
    if (c.tau_p) j["tau_p"] = *c.tau_p;
    j["comb"] = c.comb;
    j["S"] = c.s;
    j["M"] = c.m;
    j["k"] = c.k;
    if (c.xi_bar) j["xi_bar"] = *c.xi_bar;
    if (c.xi_total) j["xi"] = *c.xi_total;
    if (c.variant) j["variant"] = *c.variant;
    j["tau_d"] = c.tau_d;
    j["b_d"] = c.b_d;
    j["thickness"] = std::string(to_string(c.thickness));
    if (!c.targets.empty()) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& t : c.targets)
            arr.push_back({{"xi", t.xi},
                           {"hyperfine", t.hyperfine},
                           {"doppler_static", t.doppler_static},
                           {"epsilon", t.motion.epsilon},
                           {"tau_d", t.motion.tau_d},
                           {"b_d", t.motion.b_d}});
        j["targets"] = arr;
    }
    if (c.grid)
        j["grid"] = {{"t0", c.grid->t0}, {"t1", c.grid->t1}, {"dt", c.grid->dt}, {"nz", c.grid->nz}};
    else
        j["grid"] = "auto";
    if (c.window) j["window"] = {c.window->t1, c.window->t2};
    if (c.shift_mode) j["shift_mode"] = std::string(to_string(*c.shift_mode));
    j["series_tol"] = c.series_tol;
    if (c.half_period_T) j["half_period_T"] = *c.half_period_T;
    j["k_min"] = c.k_min;
    j["k_max"] = c.k_max;
    j["k_step"] = c.k_step;
    j["xi_min"] = c.xi_min;
    j["xi_max"] = c.xi_max;
    j["xi_step"] = c.xi_step;
    j["m_list"] = c.m_list;
    if (c.xi_bar_min) j["xi_bar_min"] = *c.xi_bar_min;
    if (c.xi_bar_max) j["xi_bar_max"] = *c.xi_bar_max;
    if (c.xi_bar_step) j["xi_bar_step"] = *c.xi_bar_step;
    j["tau_i_min"] = c.tau_i_min;
    j["tau_i_max"] = c.tau_i_max;
    j["tau_i_step"] = c.tau_i_step;
    j["tolerance"] = c.tolerance;
    j["max_levels"] = c.max_levels;
    j["out"] = c.out;
    j["threads"] = c.threads;
    return j;
}

/// Applies "key=value" to a config object. The value is read as JSON when it
/// parses, otherwise as a string; "a.b=v" sets key b of object a.
inline void apply_override(nlohmann::json& j, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ConfigError("--set", "expected key=value, got '" + std::string(assignment) + "'");
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
        value = text;
    }
    if (!j.is_object()) j = nlohmann::json::object();
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
        j[key] = value;
        return;
    }
    const std::string outer = key.substr(0, dot), inner = key.substr(dot + 1);
    if (!j.contains(outer) || !j[outer].is_object()) j[outer] = nlohmann::json::object();
    j[outer][inner] = value;
}

/// The comb described by the config's builder keys.
inline CombSystem build_comb(const RunConfig& c, const PhysConstants& pc = fe57()) {
    const double tau_p = resolved_tau_p(c);
    auto need_xi = [&]() -> double {
        if (c.xi_bar) return *c.xi_bar * c.m;
        if (c.xi_total) return *c.xi_total;
        throw ConfigError("xi_bar", "required for a " + c.comb + " comb (or give xi)");
    };
    return detail::with_field<CombSystem>("comb", [&]() -> CombSystem {
        if (c.comb == "flat") return build_flat_comb(c.m, c.s, need_xi() / c.m);
        if (c.comb == "shaped") return build_shaped_comb(c.m, c.s, c.k, tau_p, need_xi(), pc);
        if (c.comb == "hybrid")
            return build_dynamical_hybrid(parse_hybrid_variant(c.variant.value_or("M6")), c.s, c.xi_bar.value_or(11.2),
                                          c.tau_d, c.b_d, c.thickness);
        if (c.comb == "doppler")
            return build_dynamical_doppler(parse_doppler_variant(c.variant.value_or("M10")), c.s,
                                           c.xi_bar.value_or(5.6), c.tau_d, c.b_d);
        CombSystem cs;
        cs.spacing = c.s;
        cs.targets = c.targets;
        return cs;
    });
}

/// Scenario overrides carried by a config.
inline ScenarioParams scenario_params(const RunConfig& c) {
    ScenarioParams p;
    p.tau_p = resolved_tau_p(c);
    p.s = c.s;
    p.xi_bar = c.xi_bar;
    p.tau_d = c.tau_d;
    p.b_d = c.b_d;
    p.tau_i = c.tau_i;
    p.tau_i_grid = resolved_tau_i_grid(c);
    p.shift_mode = resolved_shift_mode(c);
    p.thickness = c.thickness;
    p.grid = c.grid;
    p.window = c.window;
    return p;
}

} // namespace nfc
