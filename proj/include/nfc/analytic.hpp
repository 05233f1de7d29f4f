// analytic.hpp - frequency-domain solution for static single-line combs.
//
// The Gaussian input is expanded in a Fourier series of period 2T; each
// harmonic at angular detuning -l pi / T is multiplied by the transfer factor
// of every target, and the series is summed back in time.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "nfc/comb_model.hpp"
#include "nfc/errors.hpp"
#include "nfc/field_trace.hpp"
#include "nfc/metrics.hpp"

namespace nfc {

struct SeriesConfig {
    double half_period_T = 0.0; // ns
    int l_max = 0;
    double truncation_tol = 1e-12;
};

/// End of the sampled span: three echo delays and six pulse durations past tau_i.
inline double observation_end(const PulseSpec& pulse, double s, const PhysConstants& pc = fe57()) {
    return pulse.tau_i + 3.0 * echo_delay(s, pc) + 6.0 * pulse.tau_p;
}

/// Lifetimes of free decay kept between the sampled span and its periodic image.
inline constexpr double kTailLifetimes = 12.0;

/// Series parameters for a pulse; T defaults to the observation span plus
/// kTailLifetimes natural lifetimes, so the wrapped decay tail is below 1e-6 in E.
inline SeriesConfig make_series_config(const PulseSpec& pulse, double s, double tol = 1e-12,
                                       std::optional<double> half_period = std::nullopt,
                                       const PhysConstants& pc = fe57()) {
    if (!(pulse.tau_p > 0.0)) throw InvalidArgument("tau_p must be positive");
    if (!(tol > 0.0 && tol < 1.0)) throw InvalidArgument("truncation_tol must lie in (0, 1)");
    SeriesConfig c;
    c.truncation_tol = tol;
    c.half_period_T = half_period ? *half_period
                                  : observation_end(pulse, s, pc) + kTailLifetimes / pc.gamma;
    if (!(c.half_period_T > 0.0)) throw InvalidArgument("series half period T must be positive");
    c.l_max = static_cast<int>(std::ceil(2.0 * c.half_period_T / (std::numbers::pi * pulse.tau_p) *
                                         std::sqrt(std::log(1.0 / tol))));
    return c;
}

/// E = 16 pi^2 xi^2 exp[-2 pi (2 xi + 1) / S] / S^2 for a flat comb.
inline double closed_form_efficiency(double xi_bar, double s) {
    if (!(xi_bar >= 0.0)) throw InvalidArgument("xi_bar must be non-negative");
    if (!(s > 0.0)) throw InvalidArgument("comb spacing S must be positive");
    constexpr double pi = std::numbers::pi;
    return 16.0 * pi * pi * xi_bar * xi_bar * std::exp(-2.0 * pi * (2.0 * xi_bar + 1.0) / s) / (s * s);
}

/// Exponent -2i xi / (omega - delta + i/2) of one target's transfer factor.
inline cplx target_exponent(double omega, double xi, double delta) {
    return cplx(0.0, -2.0 * xi) / cplx(omega - delta, 0.5);
}

/// Single-target transfer factor; omega and delta in units of Gamma.
inline cplx target_transfer(double omega, double xi, double delta) {
    if (!(xi >= 0.0)) throw InvalidArgument("xi must be non-negative");
    return std::exp(target_exponent(omega, xi, delta));
}

namespace detail {

inline void require_analytic(const CombSystem& comb) {
    if (!comb.is_static())
        throw InvalidArgument("analytic series covers static combs only (accelerated target present)");
    if (!comb.is_single_line())
        throw InvalidArgument("analytic series covers single-line targets only (magnetized target present)");
    for (const auto& t : comb.targets)
        if (!(t.xi >= 0.0)) throw InvalidArgument("xi must be non-negative");
}

} // namespace detail

/// Precomputed harmonic amplitudes c_l, l = -l_max..l_max, so that
/// Omega(t) = sum_l c_l exp(i l pi (t - tau_i) / T).
class EchoSeries {
public:
    EchoSeries(const PulseSpec& pulse, const CombSystem& comb, const SeriesConfig& cfg,
               const PhysConstants& pc = fe57())
        : tau_i_(pulse.tau_i), T_(cfg.half_period_T), l_max_(cfg.l_max) {
        detail::require_analytic(comb);
        if (!(T_ > 0.0) || l_max_ < 0) throw InvalidArgument("invalid series configuration");
        constexpr double pi = std::numbers::pi;
        const double pref = pulse.omega0 * std::sqrt(pi) * pulse.tau_p / (2.0 * T_);
        coef_.resize(2 * static_cast<std::size_t>(l_max_) + 1);
        for (int l = -l_max_; l <= l_max_; ++l) {
            const double g = l * pi * pulse.tau_p / (2.0 * T_);
            const double omega = -l * pi / T_ / pc.gamma;
            cplx expo(-g * g, 0.0);
            for (const auto& t : comb.targets) expo += target_exponent(omega, t.xi, t.doppler_static);
            coef_[static_cast<std::size_t>(l + l_max_)] = pref * std::exp(expo);
        }
    }

    cplx operator()(double t) const {
        const cplx z = std::polar(1.0, std::numbers::pi * (t - tau_i_) / T_);
        const cplx zc = std::conj(z);
        cplx acc = coef_[static_cast<std::size_t>(l_max_)];
        cplx up = 1.0, dn = 1.0;
        for (int l = 1; l <= l_max_; ++l) {
            up *= z;
            dn *= zc;
            acc += coef_[static_cast<std::size_t>(l_max_ + l)] * up +
                   coef_[static_cast<std::size_t>(l_max_ - l)] * dn;
        }
        return acc;
    }

    /// Samples the series on [t_start, t_start + (n-1) dt].
    FieldTrace sample(double t_start, double dt, std::size_t n) const {
        FieldTrace tr{t_start, dt, std::vector<cplx>(n)};
        for (std::size_t i = 0; i < n; ++i) tr.samples[i] = (*this)(tr.time(i));
        return tr;
    }

    double half_period() const { return T_; }

private:
    double tau_i_;
    double T_;
    int l_max_;
    std::vector<cplx> coef_;
};

/// Output field of the comb at time t, 0 <= t < 2T.
inline cplx echo_field_series(double t, const PulseSpec& pulse, const CombSystem& comb,
                              const SeriesConfig& cfg, const PhysConstants& pc = fe57()) {
    return EchoSeries(pulse, comb, cfg, pc)(t);
}

/// Default sampling step for analytic traces.
inline double analytic_dt(const PulseSpec& pulse) { return pulse.tau_p / 40.0; }

struct AnalyticRun {
    FieldTrace input;
    FieldTrace output;
    SeriesConfig cfg;
};

/// Input and series output sampled on [0, min(2T, observation_end)).
inline AnalyticRun analytic_run(const PulseSpec& pulse, const CombSystem& comb,
                                std::optional<SeriesConfig> cfg = std::nullopt,
                                std::optional<double> dt = std::nullopt,
                                const PhysConstants& pc = fe57()) {
    AnalyticRun run;
    run.cfg = cfg ? *cfg : make_series_config(pulse, comb.spacing, 1e-12, std::nullopt, pc);
    const double h = dt ? *dt : analytic_dt(pulse);
    const double span = std::min(2.0 * run.cfg.half_period_T, observation_end(pulse, comb.spacing, pc));
    const auto n = static_cast<std::size_t>(std::floor(span / h));
    run.input = sample_pulse(pulse, 0.0, h, n);
    run.output = EchoSeries(pulse, comb, run.cfg, pc).sample(0.0, h, n);
    return run;
}

/// Windowed efficiency of the series output for one comb; 0 when no echo.
inline double analytic_efficiency(const PulseSpec& pulse, const CombSystem& comb,
                                  const PhysConstants& pc = fe57()) {
    if (comb.total_xi() == 0.0) return 0.0;
    const auto run = analytic_run(pulse, comb, std::nullopt, std::nullopt, pc);
    try {
        return report(run.input, run.output, pulse, comb, {}, pc).efficiency;
    } catch (const NoEchoDetected&) {
        return 0.0;
    }
}

/// E over a (k, total xi) grid of shaped combs; rows follow k_grid.
inline std::vector<std::vector<double>> efficiency_map(const std::vector<double>& k_grid,
                                                       const std::vector<double>& xi_grid,
                                                       const PulseSpec& pulse, double s, int m,
                                                       const PhysConstants& pc = fe57()) {
    if (k_grid.empty() || xi_grid.empty()) throw InvalidArgument("efficiency_map: empty grid");
    std::vector<std::vector<double>> out(k_grid.size(), std::vector<double>(xi_grid.size()));
    for (std::size_t a = 0; a < k_grid.size(); ++a)
        for (std::size_t b = 0; b < xi_grid.size(); ++b)
            out[a][b] = analytic_efficiency(
                pulse, build_shaped_comb(m, s, k_grid[a], pulse.tau_p, xi_grid[b], pc), pc);
    return out;
}

} // namespace nfc
