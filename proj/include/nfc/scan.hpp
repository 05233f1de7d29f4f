// scan.hpp - parameter scans, named scenarios and tau_i calibration.
//
// Every scan fills its cells through parallel_for, which writes each result
// into the slot of its grid index; values never depend on the worker count.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "nfc/analytic.hpp"
#include "nfc/comb_model.hpp"
#include "nfc/errors.hpp"
#include "nfc/metrics.hpp"
#include "nfc/solver.hpp"

namespace nfc {

/// Runs f(i) for i in [0, n) on up to `threads` workers. The exception of the
/// lowest failing index is rethrown.
template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::exception_ptr> errs(n);
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        f(i);
                    } catch (...) {
                        errs[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

/// Inclusive arithmetic grid; the last point is snapped to `stop`.
inline std::vector<double> linear_grid(double start, double stop, double step) {
    if (!(step > 0.0)) throw InvalidArgument("grid step must be positive");
    if (stop < start) throw InvalidArgument("grid stop must not precede start");
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = start + step * static_cast<double>(i);
    if (std::abs(g.back() - stop) < 1e-9 * std::max(1.0, std::abs(stop))) g.back() = stop;
    return g;
}

namespace detail {

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

struct Axis {
    std::string name;
    std::vector<double> values;
};

/// A named scalar evaluated outside the grid (e.g. a marked parameter set).
struct LabeledPoint {
    std::string label;
    std::vector<std::pair<std::string, double>> params;
    double efficiency = 0.0;
    double fidelity = 0.0;
};

/// Row-major over `axes`, last axis fastest.
struct ScanResult {
    std::string scenario;
    std::vector<Axis> axes;
    std::vector<double> efficiency;
    std::vector<double> fidelity;
    std::map<std::string, std::vector<double>> extra; // per-cell side columns
    std::vector<LabeledPoint> points;
    std::string grid_hash;
    std::string config_hash;

    std::size_t cells() const {
        std::size_t n = 1;
        for (const auto& a : axes) n *= a.values.size();
        return n;
    }
    /// Axis coordinates of cell i.
    std::vector<double> coords(std::size_t i) const {
        std::vector<double> c(axes.size());
        for (std::size_t a = axes.size(); a-- > 0;) {
            const std::size_t len = axes[a].values.size();
            c[a] = axes[a].values[i % len];
            i /= len;
        }
        return c;
    }
    bool well_formed() const {
        const std::size_t n = cells();
        if (efficiency.size() != n || fidelity.size() != n) return false;
        for (const auto& [k, v] : extra)
            if (v.size() != n) return false;
        for (std::size_t i = 0; i < n; ++i)
            if (!(efficiency[i] >= 0.0 && efficiency[i] <= 1.0 && fidelity[i] >= 0.0 && fidelity[i] <= 1.0 + 1e-9))
                return false;
        return true;
    }
};

namespace detail {

inline std::string hash_axes(const std::vector<Axis>& axes) {
    std::uint64_t h = fnv1a("");
    for (const auto& a : axes) {
        h = fnv1a(a.name + ":", h);
        for (double v : a.values) h = fnv1a(g17(v) + ",", h);
    }
    return hex64(h);
}

inline std::string hash_params(const std::vector<std::pair<std::string, double>>& kv, std::string_view tag) {
    std::uint64_t h = fnv1a(tag);
    for (const auto& [k, v] : kv) h = fnv1a(k + "=" + g17(v) + ";", h);
    return hex64(h);
}

struct EF {
    double e = 0.0;
    double f = 0.0;
};

inline EF analytic_ef(const PulseSpec& pulse, const CombSystem& comb, const PhysConstants& pc) {
    if (comb.total_xi() == 0.0) return {};
    const auto run = analytic_run(pulse, comb, std::nullopt, std::nullopt, pc);
    try {
        const auto r = report(run.input, run.output, pulse, comb, {}, pc);
        return {r.efficiency, r.fidelity};
    } catch (const NoEchoDetected&) {
        return {};
    }
}

} // namespace detail

/// A marked (k, total xi, M) parameter set at one pulse width.
struct ReferencePoint {
    std::string label;
    double tau_p;
    int m;
    double k;
    double total_xi;
};

/// Flat and shaped combs of equal performance at 1 ns and 5 ns.
inline const std::vector<ReferencePoint>& reference_points() {
    static const std::vector<ReferencePoint> pts{
        {"flat_1ns", 1.0, 21, 0.0, 166.0},
        {"shaped_1ns", 1.0, 21, 0.6, 129.0},
        {"flat_5ns", 5.0, 9, 0.0, 64.0},
        {"shaped_5ns", 5.0, 9, 0.5, 30.0},
    };
    return pts;
}

inline LabeledPoint evaluate_reference_point(const ReferencePoint& rp, double s, const PhysConstants& pc = fe57()) {
    const PulseSpec pulse{1.0, 5.0 * rp.tau_p, rp.tau_p};
    const auto ef = detail::analytic_ef(pulse, build_shaped_comb(rp.m, s, rp.k, rp.tau_p, rp.total_xi, pc), pc);
    return {rp.label, {{"tau_p", rp.tau_p}, {"M", rp.m}, {"k", rp.k}, {"xi", rp.total_xi}}, ef.e, ef.f};
}

/// E and F of shaped combs over (k, total xi). Reference points sharing the
/// pulse width and M are appended to `points`.
inline ScanResult scan_k_xi(const PulseSpec& pulse, double s, int m, const std::vector<double>& k_grid,
                            const std::vector<double>& xi_grid, int threads = 1,
                            const PhysConstants& pc = fe57()) {
    if (k_grid.empty() || xi_grid.empty()) throw InvalidArgument("scan_k_xi: empty grid");
    ScanResult r;
    r.scenario = "scan_k_xi";
    r.axes = {{"k", k_grid}, {"xi", xi_grid}};
    const std::size_t n = r.cells();
    r.efficiency.assign(n, 0.0);
    r.fidelity.assign(n, 0.0);
    parallel_for(n, threads, [&](std::size_t i) {
        const auto c = r.coords(i);
        const auto ef = detail::analytic_ef(pulse, build_shaped_comb(m, s, c[0], pulse.tau_p, c[1], pc), pc);
        r.efficiency[i] = ef.e;
        r.fidelity[i] = ef.f;
    });
    for (const auto& rp : reference_points())
        if (std::abs(rp.tau_p - pulse.tau_p) < 1e-12 && rp.m == m) r.points.push_back(evaluate_reference_point(rp, s, pc));
    r.grid_hash = detail::hash_axes(r.axes);
    r.config_hash = detail::hash_params(
        {{"tau_p", pulse.tau_p}, {"tau_i", pulse.tau_i}, {"omega0", pulse.omega0}, {"S", s}, {"M", m}}, r.scenario);
    return r;
}

/// For each M, the largest E over the xi_bar grid and F at the maximizer.
/// extra["boundary"] is 1 when the maximizer is the last grid point.
inline ScanResult scan_m(const PulseSpec& pulse, double s, double k, const std::vector<int>& m_list,
                         double xi_lo = 0.0, double xi_hi = 15.0, double xi_step = 0.05, int threads = 1,
                         const PhysConstants& pc = fe57()) {
    if (m_list.empty()) throw InvalidArgument("scan_m: empty M list");
    for (int m : m_list)
        if (m < 1 || m % 2 == 0) throw InvalidArgument("scan_m: M must be odd and positive, got " + std::to_string(m));
    const auto xs = xi_hi > xi_lo ? linear_grid(xi_lo, xi_hi, xi_step) : std::vector<double>{xi_lo};

    ScanResult r;
    r.scenario = "scan_m";
    std::vector<double> ms(m_list.begin(), m_list.end());
    r.axes = {{"M", ms}};
    const std::size_t nm = m_list.size(), nx = xs.size();
    std::vector<detail::EF> cell(nm * nx);
    parallel_for(nm * nx, threads, [&](std::size_t i) {
        const int m = m_list[i / nx];
        const double xi_bar = xs[i % nx];
        cell[i] = detail::analytic_ef(pulse, build_shaped_comb(m, s, k, pulse.tau_p, m * xi_bar, pc), pc);
    });

    r.efficiency.assign(nm, 0.0);
    r.fidelity.assign(nm, 0.0);
    r.extra["xi_bar_opt"].assign(nm, 0.0);
    r.extra["boundary"].assign(nm, 0.0);
    for (std::size_t a = 0; a < nm; ++a) {
        std::size_t best = 0;
        for (std::size_t b = 1; b < nx; ++b)
            if (cell[a * nx + b].e > cell[a * nx + best].e) best = b;
        r.efficiency[a] = cell[a * nx + best].e;
        r.fidelity[a] = cell[a * nx + best].f;
        r.extra["xi_bar_opt"][a] = xs[best];
        r.extra["boundary"][a] = (nx > 1 && best == nx - 1 && r.efficiency[a] > 0.0) ? 1.0 : 0.0;
    }
    r.grid_hash = detail::hash_axes({{"M", ms}, {"xi_bar", xs}});
    r.config_hash = detail::hash_params(
        {{"tau_p", pulse.tau_p}, {"tau_i", pulse.tau_i}, {"omega0", pulse.omega0}, {"S", s}, {"k", k}}, r.scenario);
    return r;
}

// ---------------------------------------------------------------------------
// Dynamical scenarios

enum class ScenarioId { Hybrid6, Doppler10, Hybrid4, Doppler6, Doppler4, RefPoints };

inline const std::vector<std::pair<ScenarioId, std::string_view>>& scenario_names() {
    static const std::vector<std::pair<ScenarioId, std::string_view>> names{
        {ScenarioId::Hybrid6, "fig3e_hybrid6"},   {ScenarioId::Doppler10, "fig3e_doppler10"},
        {ScenarioId::Hybrid4, "fig3e_hybrid4"},   {ScenarioId::Doppler6, "fig3e_doppler6"},
        {ScenarioId::Doppler4, "fig3f_doppler4"}, {ScenarioId::RefPoints, "fig2_refpoints"},
    };
    return names;
}

inline std::string_view to_string(ScenarioId id) {
    for (const auto& [k, v] : scenario_names())
        if (k == id) return v;
    return "?";
}

inline ScenarioId parse_scenario_id(std::string_view s) {
    for (const auto& [k, v] : scenario_names())
        if (v == s) return k;
    std::string known;
    for (const auto& [k, v] : scenario_names()) known += (known.empty() ? "" : ", ") + std::string(v);
    throw InvalidArgument("unknown scenario '" + std::string(s) + "' (known: " + known + ")");
}

inline bool is_hybrid(ScenarioId id) { return id == ScenarioId::Hybrid6 || id == ScenarioId::Hybrid4; }

inline std::vector<double> default_tau_i_grid() { return linear_grid(10.0, 58.0, 2.0); }

/// Unset optionals resolve to the scenario defaults.
struct ScenarioParams {
    double tau_p = 7.0;
    double s = 50.0;
    std::optional<double> xi_bar;  // 11.2 hybrid, 5.6 Doppler
    double tau_d = 60.0;
    double b_d = 100.0;
    std::optional<double> tau_i;   // calibrated when unset
    std::vector<double> tau_i_grid = default_tau_i_grid();
    ShiftMode shift_mode = ShiftMode::Optimize;
    HybridThickness thickness = HybridThickness::LineMatched;
    std::optional<Grid> grid;      // auto_grid when unset
    std::optional<EchoWindow> window;

    bool operator==(const ScenarioParams&) const = default;
};

inline double default_xi_bar(ScenarioId id) { return is_hybrid(id) ? 11.2 : 5.6; }

inline CombSystem scenario_comb(ScenarioId id, const ScenarioParams& p) {
    const double xi = p.xi_bar.value_or(default_xi_bar(id));
    switch (id) {
    case ScenarioId::Hybrid6: return build_dynamical_hybrid(HybridVariant::M6, p.s, xi, p.tau_d, p.b_d, p.thickness);
    case ScenarioId::Hybrid4: return build_dynamical_hybrid(HybridVariant::M4, p.s, xi, p.tau_d, p.b_d, p.thickness);
    case ScenarioId::Doppler10: return build_dynamical_doppler(DopplerVariant::M10, p.s, xi, p.tau_d, p.b_d);
    case ScenarioId::Doppler6: return build_dynamical_doppler(DopplerVariant::M6, p.s, xi, p.tau_d, p.b_d);
    case ScenarioId::Doppler4: return build_dynamical_doppler(DopplerVariant::M4, p.s, xi, p.tau_d, p.b_d);
    case ScenarioId::RefPoints: break;
    }
    throw InvalidArgument("scenario '" + std::string(to_string(id)) + "' has no single comb");
}

struct NumericRun {
    Grid grid;
    std::vector<FieldTrace> traces;
    EchoReport report;
};

/// One numerical run with report; window and shift mode from `opts`.
inline NumericRun run_numeric(const CombSystem& comb, const PulseSpec& pulse, std::optional<Grid> grid,
                              const ReportOptions& opts, const PhysConstants& pc = fe57()) {
    NumericRun r;
    r.grid = grid ? *grid : auto_grid(comb, pulse, pc);
    r.traces = simulate_chain(comb, pulse, r.grid, pc);
    r.report = report(r.traces.front(), r.traces.back(), pulse, comb, opts, pc);
    return r;
}

struct TauCalibration {
    double tau_i = 0.0;
    std::vector<double> grid;
    std::vector<double> efficiency; // 0 where no echo was found
};

namespace detail {

inline std::string calibration_key(const CombSystem& comb, double tau_p, const std::vector<double>& grid,
                                   const std::optional<Grid>& g, const ReportOptions& opts) {
    std::string k = g17(tau_p) + "|" + g17(comb.spacing) + "|";
    for (const auto& t : comb.targets)
        k += g17(t.xi) + "," + g17(t.hyperfine) + "," + g17(t.doppler_static) + "," +
             std::to_string(t.motion.epsilon) + "," + g17(t.motion.tau_d) + "," + g17(t.motion.b_d) + ";";
    k += "|";
    for (double v : grid) k += g17(v) + ",";
    if (g) k += "|" + g17(g->t0) + "," + g17(g->t1) + "," + g17(g->dt) + "," + std::to_string(g->nz);
    if (opts.window) k += "|w" + g17(opts.window->t1) + "," + g17(opts.window->t2);
    return k;
}

struct CalibrationCache {
    std::mutex mu;
    std::map<std::string, TauCalibration> entries;
};

inline CalibrationCache& calibration_cache() {
    static CalibrationCache c;
    return c;
}

} // namespace detail

/// tau_i on `grid` maximizing E; the first of equal maxima wins. Results are
/// cached per (comb, tau_p, grid, solver grid).
inline TauCalibration calibrate_tau_i(const CombSystem& comb, double tau_p, const std::vector<double>& grid,
                                      std::optional<Grid> solver_grid = std::nullopt, const ReportOptions& opts = {},
                                      int threads = 1, const PhysConstants& pc = fe57()) {
    if (grid.empty()) throw InvalidArgument("calibrate_tau_i: empty tau_i grid");
    const auto key = detail::calibration_key(comb, tau_p, grid, solver_grid, opts);
    auto& cache = detail::calibration_cache();
    {
        std::lock_guard lk(cache.mu);
        if (auto it = cache.entries.find(key); it != cache.entries.end()) return it->second;
    }
    TauCalibration cal;
    cal.grid = grid;
    cal.efficiency.assign(grid.size(), 0.0);
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        const PulseSpec pulse{1.0, grid[i], tau_p};
        try {
            cal.efficiency[i] = run_numeric(comb, pulse, solver_grid, opts, pc).report.efficiency;
        } catch (const NoEchoDetected&) {
            cal.efficiency[i] = 0.0;
        }
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (cal.efficiency[i] > cal.efficiency[best]) best = i;
    cal.tau_i = grid[best];
    std::lock_guard lk(cache.mu);
    cache.entries.emplace(key, cal);
    return cal;
}

struct ScenarioRun {
    std::string label;
    std::string method; // "numeric" or "analytic"
    CombSystem comb;
    PulseSpec pulse;
    std::optional<Grid> grid;
    EchoReport report;
    std::vector<FieldTrace> traces; // boundaries; analytic runs hold input and output
};

struct ScenarioResult {
    ScenarioId id{};
    ScenarioParams params; // resolved: xi_bar and tau_i set
    std::optional<TauCalibration> calibration;
    std::vector<ScenarioRun> runs;
};

inline ScenarioResult run_scenario(ScenarioId id, const ScenarioParams& overrides = {}, int threads = 1,
                                   const PhysConstants& pc = fe57()) {
    ScenarioResult res;
    res.id = id;
    res.params = overrides;

    if (id == ScenarioId::RefPoints) {
        for (const auto& rp : reference_points()) {
            ScenarioRun run;
            run.label = rp.label;
            run.method = "analytic";
            run.pulse = PulseSpec{1.0, 5.0 * rp.tau_p, rp.tau_p};
            run.comb = build_shaped_comb(rp.m, res.params.s, rp.k, rp.tau_p, rp.total_xi, pc);
            const auto a = analytic_run(run.pulse, run.comb, std::nullopt, std::nullopt, pc);
            ReportOptions o;
            o.window = res.params.window;
            run.report = report(a.input, a.output, run.pulse, run.comb, o, pc);
            run.traces = {a.input, a.output};
            res.runs.push_back(std::move(run));
        }
        return res;
    }

    if (!res.params.xi_bar) res.params.xi_bar = default_xi_bar(id);
    const auto comb = scenario_comb(id, res.params);
    ReportOptions opts{res.params.window, res.params.shift_mode};
    if (!res.params.tau_i) {
        res.calibration = calibrate_tau_i(comb, res.params.tau_p, res.params.tau_i_grid, res.params.grid, opts, threads, pc);
        res.params.tau_i = res.calibration->tau_i;
    }
    ScenarioRun run;
    run.label = std::string(to_string(id));
    run.method = "numeric";
    run.comb = comb;
    run.pulse = PulseSpec{1.0, *res.params.tau_i, res.params.tau_p};
    auto nr = run_numeric(comb, run.pulse, res.params.grid, opts, pc);
    run.grid = nr.grid;
    run.report = nr.report;
    run.traces = std::move(nr.traces);
    res.runs.push_back(std::move(run));
    return res;
}

inline ScenarioResult run_scenario(std::string_view id, const ScenarioParams& overrides = {}, int threads = 1,
                                   const PhysConstants& pc = fe57()) {
    return run_scenario(parse_scenario_id(id), overrides, threads, pc);
}

/// E and F versus xi_bar for the six-tooth Doppler comb (with_outer_pair) or
/// its four-tooth pruning. tau_i is held fixed across the grid; when unset it
/// is calibrated once on the six-tooth comb at its default thickness.
inline ScanResult scan_dynamical_xi(const std::vector<double>& xi_grid, bool with_outer_pair,
                                    const ScenarioParams& base = {}, int threads = 1,
                                    const PhysConstants& pc = fe57()) {
    if (xi_grid.empty()) throw InvalidArgument("scan_dynamical_xi: empty xi_bar grid");
    ScenarioParams p = base;
    ReportOptions opts{p.window, p.shift_mode};
    if (!p.tau_i) {
        ScenarioParams ref = p;
        ref.xi_bar = ref.xi_bar.value_or(default_xi_bar(ScenarioId::Doppler6));
        p.tau_i = calibrate_tau_i(scenario_comb(ScenarioId::Doppler6, ref), p.tau_p, p.tau_i_grid, p.grid, opts,
                                  threads, pc)
                      .tau_i;
    }
    const PulseSpec pulse{1.0, *p.tau_i, p.tau_p};
    const auto variant = with_outer_pair ? DopplerVariant::M6 : DopplerVariant::M4;

    ScanResult r;
    r.scenario = with_outer_pair ? "scan_dyn_with_outer" : "scan_dyn_without_outer";
    r.axes = {{"xi_bar", xi_grid}};
    r.efficiency.assign(xi_grid.size(), 0.0);
    r.fidelity.assign(xi_grid.size(), 0.0);
    parallel_for(xi_grid.size(), threads, [&](std::size_t i) {
        const auto comb = build_dynamical_doppler(variant, p.s, xi_grid[i], p.tau_d, p.b_d);
        if (comb.total_xi() == 0.0) return;
        try {
            const auto nr = run_numeric(comb, pulse, p.grid, opts, pc);
            r.efficiency[i] = nr.report.efficiency;
            r.fidelity[i] = nr.report.fidelity;
        } catch (const NoEchoDetected&) {
        }
    });
    r.grid_hash = detail::hash_axes(r.axes);
    r.config_hash = detail::hash_params({{"tau_p", p.tau_p},
                                         {"tau_i", *p.tau_i},
                                         {"S", p.s},
                                         {"tau_d", p.tau_d},
                                         {"b_d", p.b_d},
                                         {"shift_mode", static_cast<double>(p.shift_mode)}},
                                        r.scenario);
    return r;
}

} // namespace nfc
