// solver.hpp - time-domain integration of the two-transition Bloch equations
// coupled to the propagating field, target by target.
//
// The field equation is taken in the retarded frame, so within a target
//     dOmega/dz = i * 6 Gamma xi * a * (rho31 + rho42),   z in [0, 1]
//     drho/dt   = -(Gamma/2 + i Delta(t)) rho + i (a/4) Omega
// The coherences are advanced with an exponential integrator whose drive is
// the linear interpolant of Omega between samples; z is marched with Heun's
// predictor-corrector. Both steps are second order.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "nfc/comb_model.hpp"
#include "nfc/errors.hpp"
#include "nfc/field_trace.hpp"
#include "nfc/metrics.hpp"

namespace nfc {

struct Grid {
    double t0 = 0.0;
    double t1 = 0.0;
    double dt = 0.0;
    int nz = 32;

    std::size_t samples() const {
        return static_cast<std::size_t>(std::floor((t1 - t0) / dt + 1e-9)) + 1;
    }
    bool operator==(const Grid&) const = default;
};

inline void validate(const Grid& g, const PulseSpec& pulse) {
    if (!(g.dt > 0.0)) throw InvalidArgument("grid dt must be positive");
    if (g.nz < 1) throw InvalidArgument("grid nz must be >= 1");
    if (!(g.t1 > g.t0)) throw InvalidArgument("grid window must satisfy t1 > t0");
    if (!(pulse.tau_p / g.dt >= 16.0))
        throw SolverRefusal("grid too coarse: need at least 16 samples per tau_p (dt=" +
                            std::to_string(g.dt) + " ns, tau_p=" + std::to_string(pulse.tau_p) + " ns)");
}

inline FieldTrace sample_pulse(const PulseSpec& p, const Grid& g) {
    return sample_pulse(p, g.t0, g.dt, g.samples());
}

namespace detail {

// phi1(x) = (1 - e^-x)/x and phi2(x) = (1 - e^-x (1 + x))/x^2
inline void phi12(cplx x, cplx& e, cplx& p1, cplx& p2) {
    e = std::exp(-x);
    if (std::abs(x) < 1e-2) {
        const cplx x2 = x * x, x3 = x2 * x, x4 = x2 * x2;
        p1 = 1.0 - x / 2.0 + x2 / 6.0 - x3 / 24.0 + x4 / 120.0;
        p2 = 0.5 - x / 3.0 + x2 / 8.0 - x3 / 30.0 + x4 / 144.0;
    } else {
        p1 = (1.0 - e) / x;
        p2 = (1.0 - e * (1.0 + x)) / (x * x);
    }
}

/// Per-step propagator of one transition: rho_{n+1} = e rho_n + wa Om_n + wb Om_{n+1}.
struct StepCoefs {
    std::vector<cplx> e, wa, wb;
};

template <class DetuningFn>
StepCoefs step_coefs(const FieldTrace& tr, DetuningFn delta, double drive, const PhysConstants& pc) {
    const std::size_t n = tr.size();
    StepCoefs c;
    c.e.resize(n);
    c.wa.resize(n);
    c.wb.resize(n);
    const double h = tr.dt;
    const cplx k(0.0, drive * h); // i (a/4) dt
    cplx prev(std::nan(""), 0.0);
    cplx e{}, p1{}, p2{};
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double tm = tr.time(i) + 0.5 * h;
        const cplx x = cplx(0.5, delta(tm)) * (pc.gamma * h);
        if (x != prev) {
            phi12(x, e, p1, p2);
            prev = x;
        }
        c.e[i] = e;
        c.wa[i] = k * p2;        // weight of Omega_n
        c.wb[i] = k * (p1 - p2); // weight of Omega_{n+1}
    }
    return c;
}

inline void sweep(const StepCoefs& c, const std::vector<cplx>& om, std::vector<cplx>& rho) {
    const std::size_t n = om.size();
    rho.assign(n, cplx{});
    for (std::size_t i = 0; i + 1 < n; ++i)
        rho[i + 1] = c.e[i] * rho[i] + c.wa[i] * om[i] + c.wb[i] * om[i + 1];
}

} // namespace detail

/// Field at the exit face of one target. The input trace defines the time grid.
inline FieldTrace propagate_target(const FieldTrace& input, const TargetSpec& target, const Grid& grid,
                                   const PhysConstants& pc = fe57()) {
    if (!input.all_finite()) throw InvalidArgument("propagate_target: non-finite input samples");
    if (std::abs(input.dt - grid.dt) > 1e-12 * grid.dt)
        throw InvalidArgument("propagate_target: input not sampled on the grid");
    if (grid.nz < 1) throw InvalidArgument("grid nz must be >= 1");
    if (!(target.xi >= 0.0)) throw InvalidArgument("xi must be non-negative");
    if (!target.motion.valid()) throw InvalidArgument("invalid motion profile");

    const double dmax = target.max_abs_detuning() * pc.gamma; // rad/ns
    if (dmax > 0.0 && 2.0 * std::numbers::pi / dmax < 8.0 * grid.dt)
        throw SolverRefusal("grid too coarse: fewer than 8 samples per detuning period (|Delta|max=" +
                            std::to_string(target.max_abs_detuning()) + " Gamma, dt=" +
                            std::to_string(grid.dt) + " ns)");

    if (target.xi == 0.0 || input.size() < 2) return input;

    const double a = pc.cg;
    const double drive = a / 4.0;
    const cplx coupling(0.0, 6.0 * pc.gamma * target.xi * a); // i eta L a
    const double h = 1.0 / grid.nz;
    const bool degenerate = target.is_single_line();

    const auto c31 = detail::step_coefs(input, [&](double t) { return target.delta31(t); }, drive, pc);
    detail::StepCoefs c42;
    if (!degenerate) c42 = detail::step_coefs(input, [&](double t) { return target.delta42(t); }, drive, pc);

    const std::size_t n = input.size();
    std::vector<cplx> r31, r42;
    auto source = [&](const std::vector<cplx>& om, std::vector<cplx>& s) {
        detail::sweep(c31, om, r31);
        if (degenerate) {
            for (std::size_t i = 0; i < n; ++i) s[i] = coupling * (2.0 * r31[i]);
        } else {
            detail::sweep(c42, om, r42);
            for (std::size_t i = 0; i < n; ++i) s[i] = coupling * (r31[i] + r42[i]);
        }
    };

    std::vector<cplx> om = input.samples, pred(n), s0(n), s1(n);
    source(om, s0);
    for (int j = 0; j < grid.nz; ++j) {
        for (std::size_t i = 0; i < n; ++i) pred[i] = om[i] + h * s0[i];
        source(pred, s1);
        for (std::size_t i = 0; i < n; ++i) om[i] += 0.5 * h * (s0[i] + s1[i]);
        if (j + 1 < grid.nz) source(om, s0);
    }
    return FieldTrace{input.t_start, input.dt, std::move(om)};
}

/// Boundary traces: [0] is the sampled input, [n] the exit of target n.
inline std::vector<FieldTrace> simulate_chain(const CombSystem& comb, const PulseSpec& pulse,
                                              const Grid& grid, const PhysConstants& pc = fe57()) {
    validate(grid, pulse);
    std::vector<FieldTrace> traces;
    traces.reserve(comb.size() + 1);
    traces.push_back(sample_pulse(pulse, grid));
    for (const auto& t : comb.targets) traces.push_back(propagate_target(traces.back(), t, grid, pc));
    return traces;
}

/// Default window end: the latest of the third static echo and the end of the
/// acceleration ramp, plus a guard band.
inline double default_window_end(const CombSystem& comb, const PulseSpec& pulse,
                                 const PhysConstants& pc = fe57()) {
    double end = pulse.tau_i + 6.0 * pulse.tau_p;
    if (comb.spacing > 0.0) end += 3.0 * 2.0 * std::numbers::pi / (comb.spacing * pc.gamma);
    for (const auto& t : comb.targets)
        if (!t.is_static())
            end = std::max(end, 2.0 * t.motion.tau_d + t.motion.b_d - pulse.tau_i + 6.0 * pulse.tau_p);
    return end;
}

/// dt = min(tau_p/40, 2 pi / (16 |Delta|max Gamma)); nz = max(32, 8 xi_max).
inline Grid auto_grid(const CombSystem& comb, const PulseSpec& pulse, const PhysConstants& pc = fe57()) {
    Grid g;
    g.t0 = 0.0;
    g.t1 = default_window_end(comb, pulse, pc);
    g.dt = pulse.tau_p / 40.0;
    const double dmax = comb.max_abs_detuning();
    if (dmax > 0.0) g.dt = std::min(g.dt, 2.0 * std::numbers::pi / (16.0 * dmax * pc.gamma));
    double xmax = 0.0;
    for (const auto& t : comb.targets) xmax = std::max(xmax, t.xi);
    g.nz = std::max(32, static_cast<int>(std::ceil(8.0 * xmax)));
    return g;
}

struct ConvergenceLevel {
    Grid grid;
    double efficiency = 0.0;
    double fidelity = 0.0;
    bool echo = false; // false: efficiency is the total transmission
};

struct ConvergenceOptions {
    double tolerance = 1e-3;
    int max_levels = 6;
    int min_levels = 0; // levels to run even after convergence
    ReportOptions report{};
};

struct ConvergenceReport {
    std::vector<ConvergenceLevel> levels;
    Grid converged{};
    int converged_level = -1;

    /// (E1 - E0) / (E2 - E1) over the last three levels; NaN below three.
    double richardson_ratio() const {
        const std::size_t n = levels.size();
        if (n < 3) return std::nan("");
        const double d0 = levels[n - 2].efficiency - levels[n - 3].efficiency;
        const double d1 = levels[n - 1].efficiency - levels[n - 2].efficiency;
        return d0 / d1;
    }
};

/// Halves dt and doubles nz from `base` until E moves by less than the
/// tolerance between consecutive levels.
inline ConvergenceReport convergence_study(const CombSystem& comb, const PulseSpec& pulse, const Grid& base,
                                           const ConvergenceOptions& opts = {},
                                           const PhysConstants& pc = fe57()) {
    validate(base, pulse);
    if (opts.max_levels < 1) throw InvalidArgument("convergence_study: max_levels must be >= 1");
    if (!(opts.tolerance > 0.0)) throw InvalidArgument("convergence_study: tolerance must be positive");

    ConvergenceReport rep;
    Grid g = base;
    for (int level = 0; level < opts.max_levels; ++level) {
        const auto traces = simulate_chain(comb, pulse, g, pc);
        ConvergenceLevel lv;
        lv.grid = g;
        try {
            const auto r = report(traces.front(), traces.back(), pulse, comb, opts.report, pc);
            lv.efficiency = r.efficiency;
            lv.fidelity = r.fidelity;
            lv.echo = true;
        } catch (const NoEchoDetected&) {
            lv.efficiency = energy(traces.back()) / energy(traces.front());
        }
        rep.levels.push_back(lv);

        if (rep.converged_level < 0) {
            const bool passive = comb.total_xi() == 0.0;
            const std::size_t n = rep.levels.size();
            if (passive || (n >= 2 && std::abs(rep.levels[n - 1].efficiency - rep.levels[n - 2].efficiency) <
                                          opts.tolerance)) {
                rep.converged_level = level;
                rep.converged = g;
            }
        }
        if (rep.converged_level >= 0 && level + 1 >= opts.min_levels) return rep;

        g.dt *= 0.5;
        g.nz *= 2;
    }
    if (rep.converged_level >= 0) return rep;
    std::string last = "n/a";
    if (rep.levels.size() >= 2)
        last = std::to_string(std::abs(rep.levels.back().efficiency - rep.levels[rep.levels.size() - 2].efficiency));
    throw ConvergenceFailure("E did not settle within " + std::to_string(opts.tolerance) + " after " +
                             std::to_string(opts.max_levels) + " levels (last change " + last + ")");
}

} // namespace nfc
