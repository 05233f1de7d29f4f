// Acceptance suite: one PASS/FAIL line per criterion.
//
// Criteria listed in kKnownDeviations are reported as FAIL when they fail but
// do not change the exit status; any other failure exits with 1.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nfc/nfc.hpp"

using namespace nfc;

namespace {

const std::set<int> kKnownDeviations{2, 4, 5};

int threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void within(const char* what, double v, double target, double tol) {
        const bool pass = std::abs(v - target) <= tol;
        ok = ok && pass;
        detail << ' ' << what << '=' << fmt(v) << (pass ? "" : "!") << "[" << fmt(target) << "+/-" << fmt(tol) << "]";
    }
    void below(const char* what, double v, double limit) {
        const bool pass = v < limit;
        ok = ok && pass;
        detail << ' ' << what << '=' << fmt(v) << (pass ? "" : "!") << "[<" << fmt(limit) << "]";
    }
    void at_least(const char* what, double v, double limit) {
        const bool pass = v >= limit;
        ok = ok && pass;
        detail << ' ' << what << '=' << fmt(v) << (pass ? "" : "!") << "[>=" << fmt(limit) << "]";
    }
    void truth(const char* what, bool pass) {
        ok = ok && pass;
        detail << ' ' << what << '=' << (pass ? "ok" : "no!");
    }
    static std::string fmt(double v) {
        char b[32];
        std::snprintf(b, sizeof b, "%.4g", v);
        return b;
    }
};

// |Omega| of both traces, relative L2 over the common grid.
double envelope_l2(const FieldTrace& a, const FieldTrace& b) {
    FieldTrace ea = a, eb = b;
    for (auto& s : ea.samples) s = std::abs(s);
    for (auto& s : eb.samples) s = std::abs(s);
    return relative_l2(ea, eb);
}

// Calibrated tau_i, then E and F on the converged grid.
struct DynResult {
    double tau_i;
    Grid grid;
    NumericRun run;
};

DynResult converged_dynamical(ScenarioId id, double tau_p) {
    ScenarioParams p;
    p.tau_p = tau_p;
    p.xi_bar = default_xi_bar(id);
    const auto comb = scenario_comb(id, p);
    const ReportOptions opts{std::nullopt, p.shift_mode};
    const auto cal = calibrate_tau_i(comb, tau_p, p.tau_i_grid, std::nullopt, opts, threads());
    const PulseSpec pulse{1.0, cal.tau_i, tau_p};
    ConvergenceOptions co;
    co.report = opts;
    const auto conv = convergence_study(comb, pulse, auto_grid(comb, pulse), co);
    return {cal.tau_i, conv.converged, run_numeric(comb, pulse, conv.converged, opts)};
}

// ---------------------------------------------------------------------------

Check criterion1() {
    Check c;
    c.within("E(8,50)", closed_form_efficiency(8.0, 50.0), 0.477, 0.001);
    double prev = 0.0;
    bool mono = true;
    for (double s : {1e3, 1e4, 1e5}) {
        const double e = closed_form_efficiency(s / (2.0 * std::numbers::pi), s);
        mono = mono && e > prev;
        prev = e;
    }
    c.truth("monotone", mono);
    c.within("sup(1e5)", prev, 0.541, 0.001);
    return c;
}

Check criterion2() {
    Check c;
    const PulseSpec p{1.0, 5.0, 1.0};
    const auto comb = build_flat_comb(21, 50.0, 8.0);
    const auto run = analytic_run(p, comb);
    const auto r = report(run.input, run.output, p, comb);
    c.within("E", r.efficiency, 0.477, 0.02);
    c.within("peak-tau_i", r.echo_peak - p.tau_i, echo_delay(50.0), run.output.dt);
    return c;
}

Check criterion3() {
    Check c;
    const PulseSpec p{1.0, 5.0, 1.0};
    c.within("E(k=0,xi=80)", analytic_efficiency(p, build_shaped_comb(21, 50.0, 0.0, 1.0, 80.0)), 0.30, 0.03);
    c.within("E(k=1,xi=80)", analytic_efficiency(p, build_shaped_comb(21, 50.0, 1.0, 1.0, 80.0)), 0.44, 0.03);
    return c;
}

Check criterion4() {
    Check c;
    const PulseSpec p{1.0, 25.0, 5.0};
    c.at_least("E(k=0,xi=60)", analytic_efficiency(p, build_shaped_comb(9, 50.0, 0.0, 5.0, 60.0)), 0.50);
    c.at_least("E(k=0.5,xi=26)", analytic_efficiency(p, build_shaped_comb(9, 50.0, 0.5, 5.0, 26.0)), 0.50);
    c.below("E(k=0,xi=26)", analytic_efficiency(p, build_shaped_comb(9, 50.0, 0.0, 5.0, 26.0)), 0.50);
    return c;
}

Check criterion5() {
    Check c;
    const auto r = scan_m(PulseSpec{1.0, 25.0, 5.0}, 50.0, 0.0, {3}, 0.0, 15.0, 0.05, threads());
    c.within("E", r.efficiency[0], 0.51, 0.02);
    c.within("F", r.fidelity[0], 0.99, 0.01);
    c.detail << " xi_bar_opt=" << Check::fmt(r.extra.at("xi_bar_opt")[0]);
    return c;
}

Check criterion6() {
    Check c;
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const int m = 1 + static_cast<int>(9.0 * u(rng)) % 9;
        const double s = 30.0 + 50.0 * u(rng);
        const double tau_p = 1.0 + 6.0 * u(rng);
        const double xi_bar = 10.0 * u(rng);
        CombSystem comb;
        comb.spacing = s;
        for (int n = 1; n <= m; ++n) {
            TargetSpec t;
            t.xi = xi_bar * (0.5 + u(rng));
            t.doppler_static = tooth_offset(static_cast<std::size_t>(n), static_cast<std::size_t>(m)) * s;
            comb.targets.push_back(t);
        }
        const PulseSpec pulse{1.0, 5.0 * tau_p, tau_p};
        ConvergenceOptions co;
        co.tolerance = 1e-4;
        Grid g = auto_grid(comb, pulse);
        try {
            g = convergence_study(comb, pulse, g, co).converged;
        } catch (const NoEchoDetected&) {
        }
        const auto tr = simulate_chain(comb, pulse, g);
        const double span = g.t1 - g.t0;
        const auto cfg = make_series_config(pulse, s, 1e-12, span + kTailLifetimes / fe57().gamma);
        const auto series = EchoSeries(pulse, comb, cfg).sample(g.t0, g.dt, tr.back().size());
        worst = std::max(worst, relative_l2(tr.back(), series));
    }
    c.below("max relL2", worst, 1e-2);
    return c;
}

Check criterion7() {
    Check c;
    const auto h6 = converged_dynamical(ScenarioId::Hybrid6, 7.0);
    c.within("hyb6 E", h6.run.report.efficiency, 0.67, 0.03);
    c.within("hyb6 F", h6.run.report.fidelity, 0.96, 0.02);
    c.detail << " tau_i=" << Check::fmt(h6.tau_i);

    ScenarioParams p;
    p.xi_bar = default_xi_bar(ScenarioId::Doppler10);
    const auto d10 = simulate_chain(scenario_comb(ScenarioId::Doppler10, p), PulseSpec{1.0, h6.tau_i, 7.0}, h6.grid);
    c.below("dop10~hyb6 L2", envelope_l2(d10.back(), h6.run.traces.back()), 0.05);

    const auto d4 = converged_dynamical(ScenarioId::Doppler4, 7.0);
    c.within("dop4 E", d4.run.report.efficiency, 0.66, 0.03);
    c.within("dop4 F", d4.run.report.fidelity, 0.95, 0.02);

    const auto h5 = converged_dynamical(ScenarioId::Hybrid6, 5.0);
    c.within("5ns E", h5.run.report.efficiency, 0.65, 0.03);
    c.within("5ns F", h5.run.report.fidelity, 0.87, 0.03);
    return c;
}

Check criterion8() {
    Check c;
    auto xs = linear_grid(2.0, 15.0, 0.4);
    if (xs.back() < 15.0) xs.push_back(15.0);
    ScenarioParams p;
    const auto with = scan_dynamical_xi(xs, true, p, threads());
    const auto without = scan_dynamical_xi(xs, false, p, threads());
    double de = 0.0, df = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        de = std::max(de, std::abs(with.efficiency[i] - without.efficiency[i]));
        df = std::max(df, std::abs(with.fidelity[i] - without.fidelity[i]));
    }
    c.truth("all echoes", std::all_of(with.efficiency.begin(), with.efficiency.end(), [](double e) { return e > 0.0; }));
    c.below("max|dE|", de, 0.03 + 1e-12);
    c.below("max|dF|", df, 0.03 + 1e-12);
    return c;
}

Check criterion9() {
    Check c;
    bool weights = true;
    for (int m : {1, 3, 9, 21})
        for (double k : {0.0, 0.5, 1.0}) {
            const auto w = shaped_weights(m, k, 1.0, 50.0);
            double sum = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                sum += w[i];
                weights = weights && w[i] == w[w.size() - 1 - i];
            }
            weights = weights && std::abs(sum - 1.0) < 1e-14;
        }
    c.truth("weights", weights);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    bool passive = true;
    for (int trial = 0; trial < 20; ++trial) {
        CombSystem comb;
        comb.spacing = 30.0 + 50.0 * u(rng);
        const int m = 1 + static_cast<int>(6.0 * u(rng));
        for (int n = 0; n < m; ++n) {
            TargetSpec t;
            t.xi = 10.0 * u(rng);
            t.doppler_static = (u(rng) - 0.5) * 4.0 * comb.spacing;
            if (u(rng) < 0.3) t.hyperfine = comb.spacing * u(rng);
            if (u(rng) < 0.3) t.motion = {u(rng) < 0.5 ? 1 : -1, 60.0, 100.0, comb.spacing};
            comb.targets.push_back(t);
        }
        const PulseSpec p{1.0, 30.0, 1.0 + 6.0 * u(rng)};
        const auto tr = simulate_chain(comb, p, auto_grid(comb, p));
        passive = passive && energy(tr.back()) <= energy(tr.front()) * (1.0 + 1e-12);
    }
    c.truth("passivity", passive);

    {
        const auto comb = build_dynamical_doppler(DopplerVariant::M6, 50.0, 5.6, 60.0, 100.0);
        const PulseSpec p1{1.0, 50.0, 7.0}, p2{-2.5, 50.0, 7.0};
        const Grid g = auto_grid(comb, p1);
        const ReportOptions o{std::nullopt, ShiftMode::Optimize};
        const auto a = run_numeric(comb, p1, g, o), b = run_numeric(comb, p2, g, o);
        c.truth("linearity", std::abs(a.report.efficiency - b.report.efficiency) < 1e-12 &&
                                 std::abs(a.report.fidelity - b.report.fidelity) < 1e-12);
    }
    {
        const PulseSpec p{1.0, 25.0, 5.0};
        const auto comb = build_shaped_comb(7, 50.0, 0.5, 5.0, 40.0);
        auto perm = comb;
        std::mt19937_64 prng(3);
        std::shuffle(perm.targets.begin(), perm.targets.end(), prng);
        const Grid g = auto_grid(comb, p);
        c.truth("permutation", relative_l2(simulate_chain(perm, p, g).back(), simulate_chain(comb, p, g).back()) < 1e-9);
    }
    {
        const PulseSpec p{1.0, 25.0, 5.0};
        const Grid g{0.0, 120.0, 0.05, 1};
        const auto in = sample_pulse(p, g);
        FieldTrace out = in;
        const auto shift = static_cast<std::ptrdiff_t>(std::llround(echo_delay(50.0) / g.dt));
        std::fill(out.samples.begin(), out.samples.end(), cplx{});
        for (std::size_t i = 0; i + shift < in.size(); ++i) out.samples[i + shift] = cplx(0.3, -0.7) * in.samples[i];
        c.truth("fidelity copy", std::abs(fidelity(in, out, EchoWindow{5.0, 115.0}, shift * g.dt) - 1.0) < 1e-12);
    }
    {
        const PulseSpec p{1.0, 25.0, 5.0};
        const auto comb = build_flat_comb(3, 50.0, 8.0);
        ConvergenceOptions co;
        co.tolerance = 1e-2;
        co.max_levels = 3;
        co.min_levels = 3;
        double ratio = NAN;
        try {
            ratio = convergence_study(comb, p, auto_grid(comb, p), co).richardson_ratio();
        } catch (const ConvergenceFailure&) {
        }
        c.within("richardson", ratio, 4.0, 1.0);
    }
    return c;
}

} // namespace

int main() {
    const std::vector<std::function<Check()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9};
    int unexpected = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        const auto t0 = std::chrono::steady_clock::now();
        Check c;
        try {
            c = criteria[i]();
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail << " exception: " << e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool known = kKnownDeviations.count(id) > 0;
        std::printf("criterion %d: %s%s (%.1fs)%s\n", id, c.ok ? "PASS" : "FAIL", c.detail.str().c_str(), secs,
                    !c.ok && known ? " [known deviation]" : "");
        std::fflush(stdout);
        if (!c.ok && !known) ++unexpected;
    }
    std::printf("%s\n", unexpected == 0 ? "acceptance: no unexpected failures" : "acceptance: unexpected failures");
    return unexpected == 0 ? 0 : 1;
}
