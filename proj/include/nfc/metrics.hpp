// metrics.hpp - echo window detection, efficiency, fidelity and echo timing.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nfc/comb_model.hpp"
#include "nfc/errors.hpp"
#include "nfc/field_trace.hpp"

namespace nfc {

struct EchoWindow {
    double t1 = 0.0;
    double t2 = 0.0;
    bool operator==(const EchoWindow&) const = default;
};

struct EchoReport {
    double efficiency = 0.0;
    double fidelity = 0.0;
    EchoWindow window{};
    double echo_peak = 0.0;
    double input_energy = 0.0;
    double echo_energy = 0.0;
    double shift_used = 0.0;
};

/// Rephasing delay 2 pi / (S Gamma) of a static comb, ns.
inline double echo_delay(double s, const PhysConstants& pc = fe57()) {
    return 2.0 * std::numbers::pi / (s * pc.gamma);
}

inline double expected_echo_time(double tau_i, double s, const PhysConstants& pc = fe57()) {
    if (!(s > 0.0)) throw InvalidArgument("comb spacing S must be positive");
    if (std::isinf(s)) return tau_i;
    return tau_i + echo_delay(s, pc);
}

namespace detail {
// Local maxima below this fraction of the trace's peak intensity are noise.
inline constexpr double kEchoFloor = 1e-10;
// A minimum closes the echo only when it falls below this fraction of the
// echo peak; shallower dips are structure inside one echo.
inline constexpr double kCloseFraction = 0.1;
} // namespace detail

/// Brackets the strongest echo that follows the transmitted pulse.
///
/// The peak search starts at the first intensity minimum after tau_i (the
/// trailing edge of the transmitted pulse), at the latest at tau_i + 4 tau_p
/// and, with a hint, at the latest halfway to the hinted echo time. t1 is the
/// intensity minimum between tau_i and the peak; t2 is the first local minimum
/// after the peak that drops below 10% of the peak intensity or the first
/// sample where the tail falls below the noise floor, else the deepest local
/// minimum after the peak, else peak + (peak - tau_i) / 2.
inline EchoWindow detect_window(const FieldTrace& trace, double tau_i, double tau_p,
                                std::optional<double> hint_echo_time = std::nullopt) {
    const std::size_t n = trace.size();
    if (n < 3) throw NoEchoDetected("trace too short");

    std::vector<double> inten(n);
    double imax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        inten[i] = std::norm(trace.samples[i]);
        imax = std::max(imax, inten[i]);
    }
    auto is_local_min = [&](std::size_t i) { return inten[i] <= inten[i - 1] && inten[i] < inten[i + 1]; };

    double latest = tau_i + 4.0 * tau_p;
    if (hint_echo_time && *hint_echo_time > tau_i)
        latest = std::min(latest, tau_i + 0.5 * (*hint_echo_time - tau_i));
    std::size_t first = std::max<std::size_t>(trace.index_of(latest), 1);
    for (std::size_t i = std::max<std::size_t>(trace.index_of(tau_i), 1); i + 1 < n && i < first; ++i) {
        if (is_local_min(i)) {
            first = i;
            break;
        }
    }

    std::size_t peak = 0;
    double best = 0.0;
    for (std::size_t i = first; i + 1 < n; ++i) {
        if (inten[i] >= inten[i - 1] && inten[i] > inten[i + 1] && inten[i] > best) {
            best = inten[i];
            peak = i;
        }
    }
    if (peak == 0 || !(best > detail::kEchoFloor * imax))
        throw NoEchoDetected("no local maximum after the transmitted pulse");

    const std::size_t lo = std::min(trace.index_of(tau_i), peak);
    std::size_t i1 = lo;
    for (std::size_t i = lo; i <= peak; ++i)
        if (inten[i] < inten[i1]) i1 = i;

    const double peak_t = trace.time(peak);
    std::size_t i2 = 0;
    std::size_t deepest = 0;
    for (std::size_t i = peak + 1; i + 1 < n; ++i) {
        // monotone tail: close once it is negligible
        if (inten[i] <= detail::kEchoFloor * best) {
            i2 = i;
            break;
        }
        if (!is_local_min(i)) continue;
        if (deepest == 0 || inten[i] < inten[deepest]) deepest = i;
        if (inten[i] < detail::kCloseFraction * best) {
            i2 = i;
            break;
        }
    }
    if (i2 == 0) i2 = deepest != 0 ? deepest : trace.index_of(peak_t + 0.5 * (peak_t - tau_i));
    return {trace.time(i1), trace.time(i2)};
}

/// Windowed output energy over total input energy.
inline double efficiency(const FieldTrace& input, const FieldTrace& output, const EchoWindow& w) {
    const double ein = energy(input);
    if (!(ein > 0.0)) throw InvalidArgument("efficiency: input energy is zero");
    return energy(output, output.index_of(w.t1), output.index_of(w.t2)) / ein;
}

/// Normalized overlap of the echo with the input delayed by `shift`.
inline double fidelity(const FieldTrace& input, const FieldTrace& output, const EchoWindow& w,
                       double shift) {
    if (!std::isfinite(shift)) throw InvalidArgument("fidelity: shift must be finite");
    const std::size_t i0 = output.index_of(w.t1);
    const std::size_t i1 = output.index_of(w.t2);
    const double ein = energy(input);
    const double eout = energy(output, i0, i1);
    if (!(ein > 0.0) || !(eout > 0.0)) throw InvalidArgument("fidelity: zero denominator");

    // integer sample shifts on a shared grid use the samples directly
    const double steps = (shift + output.t_start - input.t_start) / input.dt;
    const bool aligned = std::abs(input.dt - output.dt) <= 1e-12 * input.dt &&
                         std::abs(steps - std::round(steps)) < 1e-9;
    const auto k = static_cast<long long>(std::llround(steps));
    auto shifted_input = [&](std::size_t i) -> cplx {
        if (aligned) {
            const long long j = static_cast<long long>(i) - k;
            if (j < 0 || j >= static_cast<long long>(input.size())) return {};
            return input.samples[static_cast<std::size_t>(j)];
        }
        return input.at(output.time(i) - shift);
    };

    cplx acc{};
    for (std::size_t i = i0; i <= i1 && i < output.size(); ++i) {
        const double wgt = (i == i0 || i == i1) ? 0.5 : 1.0;
        acc += wgt * std::conj(shifted_input(i)) * output.samples[i];
    }
    acc *= output.dt;
    return std::norm(acc) / (ein * eout);
}

enum class ShiftMode {
    Auto,     // expected echo delay for static combs, detected peak otherwise
    Expected, // 2 pi / (S Gamma)
    Peak,     // detected echo peak - tau_i
    Optimize, // maximize F over +/- 2 tau_p around the Auto choice
};

inline std::string_view to_string(ShiftMode m) {
    switch (m) {
    case ShiftMode::Auto: return "auto";
    case ShiftMode::Expected: return "expected";
    case ShiftMode::Peak: return "peak";
    case ShiftMode::Optimize: return "optimize";
    }
    return "auto";
}

inline ShiftMode parse_shift_mode(std::string_view s) {
    if (s == "auto") return ShiftMode::Auto;
    if (s == "expected") return ShiftMode::Expected;
    if (s == "peak") return ShiftMode::Peak;
    if (s == "optimize") return ShiftMode::Optimize;
    throw InvalidArgument("unknown fidelity shift mode '" + std::string(s) + "'");
}

struct ReportOptions {
    std::optional<EchoWindow> window;
    ShiftMode shift_mode = ShiftMode::Auto;
    bool operator==(const ReportOptions&) const = default;
};

inline EchoReport report(const FieldTrace& input, const FieldTrace& output, const PulseSpec& pulse,
                         const CombSystem& comb, const ReportOptions& opts = {},
                         const PhysConstants& pc = fe57()) {
    const bool stat = comb.is_static();
    std::optional<double> hint;
    if (stat && comb.spacing > 0.0) hint = expected_echo_time(pulse.tau_i, comb.spacing, pc);

    EchoReport r;
    r.window = opts.window ? *opts.window : detect_window(output, pulse.tau_i, pulse.tau_p, hint);
    if (!(r.window.t1 < r.window.t2)) throw InvalidArgument("echo window must satisfy t1 < t2");

    const std::size_t i0 = output.index_of(r.window.t1);
    const std::size_t i1 = output.index_of(r.window.t2);
    std::size_t ipk = i0;
    for (std::size_t i = i0; i <= i1 && i < output.size(); ++i)
        if (std::norm(output.samples[i]) > std::norm(output.samples[ipk])) ipk = i;
    r.echo_peak = output.time(ipk);

    r.input_energy = energy(input);
    r.echo_energy = energy(output, i0, i1);
    r.efficiency = efficiency(input, output, r.window);
    if (!(r.echo_energy > 0.0)) throw NoEchoDetected("zero energy inside the echo window");

    const double peak_shift = r.echo_peak - pulse.tau_i;
    const double expected_shift = comb.spacing > 0.0 ? echo_delay(comb.spacing, pc) : peak_shift;
    switch (opts.shift_mode) {
    case ShiftMode::Auto:
    case ShiftMode::Optimize: r.shift_used = stat ? expected_shift : peak_shift; break;
    case ShiftMode::Expected: r.shift_used = expected_shift; break;
    case ShiftMode::Peak: r.shift_used = peak_shift; break;
    }
    r.fidelity = fidelity(input, output, r.window, r.shift_used);

    if (opts.shift_mode == ShiftMode::Optimize) {
        const double base = r.shift_used;
        const auto steps = static_cast<long long>(std::ceil(2.0 * pulse.tau_p / output.dt));
        for (long long j = -steps; j <= steps; ++j) {
            const double s = base + static_cast<double>(j) * output.dt;
            const double f = fidelity(input, output, r.window, s);
            if (f > r.fidelity) {
                r.fidelity = f;
                r.shift_used = s;
            }
        }
    }
    return r;
}

} // namespace nfc
