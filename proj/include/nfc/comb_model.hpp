// comb_model.hpp - physical constants, target/comb/pulse value types, the
// Gaussian tooth-weight distribution, acceleration profiles and the builders
// for every comb layout used by the scenarios.
//
// Units: time in ns, detunings and rates in units of Gamma unless noted.

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "nfc/errors.hpp"

namespace nfc {

struct PhysConstants {
    double gamma = 1.0 / 141.1;                 // decay rate, 1/ns
    double cg = std::sqrt(2.0 / 3.0);           // Clebsch-Gordan coefficient
    double c_light = 299792458.0;               // m/s
    // 14.4125 keV line of Fe-57: E / hbar, rad/s
    double omega_transition = 14412.5 / 6.582119569e-16;
};

inline const PhysConstants& fe57() {
    static const PhysConstants c{};
    return c;
}

/// Tanh-shaped acceleration ramp of one target. epsilon = +1 drives a blue
/// (positive) Doppler shift, -1 a red one, 0 leaves the target at rest.
struct MotionProfile {
    int epsilon = 0;
    double tau_d = 0.0;   // ns, middle of the ramp
    double b_d = 0.0;     // ns, rise time
    double s_units = 0.0; // terminal shift |epsilon| * S in units of Gamma

    bool valid() const {
        if (epsilon < -1 || epsilon > 1) return false;
        if (epsilon != 0 && !(b_d > 0.0)) return false;
        return std::isfinite(tau_d) && std::isfinite(s_units);
    }
    bool operator==(const MotionProfile&) const = default;
};

/// Time-dependent Doppler shift of an accelerated target, in units of Gamma.
inline double doppler_shift_at(double t, const MotionProfile& m) {
    if (m.epsilon == 0) return 0.0;
    return 0.5 * m.epsilon * m.s_units * (1.0 + std::tanh((t - m.tau_d) / (0.25 * m.b_d)));
}

/// One absorber. `hyperfine` is Delta_g + Delta_e; both transitions share the
/// Doppler terms and sit at +/- hyperfine around them.
struct TargetSpec {
    double xi = 0.0;
    double hyperfine = 0.0;
    double doppler_static = 0.0;
    MotionProfile motion{};

    double delta31(double t) const { return hyperfine + doppler_static + doppler_shift_at(t, motion); }
    double delta42(double t) const { return -hyperfine + doppler_static + doppler_shift_at(t, motion); }

    bool is_static() const { return motion.epsilon == 0; }
    bool is_single_line() const { return hyperfine == 0.0; }

    /// Largest |detuning| reached by either transition over all time.
    double max_abs_detuning() const {
        const double base = std::abs(hyperfine);
        const double d0 = doppler_static;
        const double d1 = doppler_static + motion.epsilon * motion.s_units;
        return base + std::max(std::abs(d0), std::abs(d1));
    }

    bool operator==(const TargetSpec&) const = default;
};

struct CombSystem {
    std::vector<TargetSpec> targets;
    double spacing = 0.0; // S
    double shape_k = 0.0; // k

    std::size_t size() const { return targets.size(); }

    double total_xi() const {
        return std::accumulate(targets.begin(), targets.end(), 0.0,
                               [](double acc, const TargetSpec& t) { return acc + t.xi; });
    }

    double mean_xi() const { return targets.empty() ? 0.0 : total_xi() / targets.size(); }

    bool is_static() const {
        for (const auto& t : targets)
            if (!t.is_static()) return false;
        return true;
    }
    bool is_single_line() const {
        for (const auto& t : targets)
            if (!t.is_single_line()) return false;
        return true;
    }
    double max_abs_detuning() const {
        double m = 0.0;
        for (const auto& t : targets) m = std::max(m, t.max_abs_detuning());
        return m;
    }

    bool operator==(const CombSystem&) const = default;
};

/// Gaussian input envelope omega0 * exp[-(t - tau_i)^2 / tau_p^2].
struct PulseSpec {
    double omega0 = 1.0;
    double tau_i = 25.0; // ns
    double tau_p = 5.0;  // ns

    double envelope(double t) const {
        const double x = (t - tau_i) / tau_p;
        return omega0 * std::exp(-x * x);
    }
    /// Integral of |envelope|^2 over the real line.
    double energy() const { return omega0 * omega0 * tau_p * std::sqrt(std::numbers::pi / 2.0); }

    bool operator==(const PulseSpec&) const = default;
};

/// Offset of tooth n (1-based) from the comb center, in tooth indices.
inline double tooth_offset(std::size_t n, std::size_t m) {
    return static_cast<double>(n) - 0.5 * static_cast<double>(m + 1);
}

/// Normalized Gaussian tooth weights P(n, k), n = 1..M, M odd.
inline std::vector<double> shaped_weights(int m, double k, double tau_p, double s,
                                          const PhysConstants& pc = fe57()) {
    if (m < 1 || m % 2 == 0)
        throw InvalidArgument("shaped comb needs an odd number of targets M >= 1, got M=" + std::to_string(m));
    if (!(tau_p > 0.0)) throw InvalidArgument("tau_p must be positive");
    if (!(s > 0.0)) throw InvalidArgument("comb spacing S must be positive");
    if (!(k >= 0.0)) throw InvalidArgument("shape parameter k must be non-negative");

    const auto mm = static_cast<std::size_t>(m);
    std::vector<double> w(mm);
    // fill symmetric pairs from the same expression so P(n) == P(M+1-n) exactly
    for (std::size_t n = 1; n <= (mm + 1) / 2; ++n) {
        const double x = 0.5 * k * tau_p * tooth_offset(n, mm) * s * pc.gamma;
        w[n - 1] = std::exp(-x * x);
        w[mm - n] = w[n - 1];
    }
    // pairwise outer-in summation keeps the sum order symmetric as well
    double sum = w[mm / 2];
    for (std::size_t n = 0; n < mm / 2; ++n) sum += 2.0 * w[n];
    for (auto& v : w) v /= sum;
    return w;
}

/// Terminal velocity c * S * Gamma / omega in m/s.
inline double terminal_velocity(double s, const PhysConstants& pc = fe57()) {
    const double gamma_si = pc.gamma * 1e9; // 1/ns -> 1/s
    return pc.c_light * s * gamma_si / pc.omega_transition;
}

inline CombSystem build_flat_comb(int m, double s, double xi_bar) {
    if (m < 1) throw InvalidArgument("flat comb needs M >= 1, got M=" + std::to_string(m));
    if (!(xi_bar >= 0.0)) throw InvalidArgument("xi_bar must be non-negative");
    CombSystem c;
    c.spacing = s;
    c.shape_k = 0.0;
    const auto mm = static_cast<std::size_t>(m);
    for (std::size_t n = 1; n <= mm; ++n) {
        TargetSpec t;
        t.xi = xi_bar;
        t.doppler_static = tooth_offset(n, mm) * s;
        c.targets.push_back(t);
    }
    return c;
}

inline CombSystem build_shaped_comb(int m, double s, double k, double tau_p, double total_xi,
                                    const PhysConstants& pc = fe57()) {
    if (!(total_xi >= 0.0)) throw InvalidArgument("total_xi must be non-negative");
    const auto w = shaped_weights(m, k, tau_p, s, pc);
    CombSystem c;
    c.spacing = s;
    c.shape_k = k;
    for (std::size_t n = 1; n <= w.size(); ++n) {
        TargetSpec t;
        t.xi = total_xi * w[n - 1];
        t.doppler_static = tooth_offset(n, w.size()) * s;
        c.targets.push_back(t);
    }
    return c;
}

enum class HybridVariant { M4, M6 };
enum class DopplerVariant { M4, M6, M10 };

/// How hybrid builders assign thickness to unmagnetized members.
/// LineMatched gives them xi_bar / 2 so that every comb line, magnetized or
/// not, carries xi_bar / 2; Uniform gives every target xi_bar.
enum class HybridThickness { LineMatched, Uniform };

inline HybridVariant parse_hybrid_variant(std::string_view v) {
    if (v == "M4") return HybridVariant::M4;
    if (v == "M6") return HybridVariant::M6;
    throw InvalidArgument("unknown hybrid variant '" + std::string(v) + "' (expected M4 or M6)");
}

inline DopplerVariant parse_doppler_variant(std::string_view v) {
    if (v == "M4") return DopplerVariant::M4;
    if (v == "M6") return DopplerVariant::M6;
    if (v == "M10") return DopplerVariant::M10;
    throw InvalidArgument("unknown Doppler variant '" + std::string(v) + "' (expected M4, M6 or M10)");
}

inline HybridThickness parse_hybrid_thickness(std::string_view v) {
    if (v == "line_matched") return HybridThickness::LineMatched;
    if (v == "uniform") return HybridThickness::Uniform;
    throw InvalidArgument("unknown hybrid thickness mode '" + std::string(v) +
                          "' (expected line_matched or uniform)");
}

inline std::string_view to_string(HybridThickness h) {
    return h == HybridThickness::Uniform ? "uniform" : "line_matched";
}

namespace detail {

// (shift in units of S, epsilon)
struct ToothSpec {
    double shift;
    int epsilon;
};

inline CombSystem build_dynamical(const std::vector<ToothSpec>& layout, bool magnetized, double s,
                                  double xi_bar, double tau_d, double b_d,
                                  HybridThickness thick = HybridThickness::Uniform) {
    if (!(xi_bar >= 0.0)) throw InvalidArgument("xi_bar must be non-negative");
    if (!(b_d > 0.0)) throw InvalidArgument("b_d must be positive for accelerated targets");
    CombSystem c;
    c.spacing = s;
    for (const auto& ts : layout) {
        TargetSpec t;
        t.xi = xi_bar;
        if (magnetized) {
            t.hyperfine = ts.shift * s;
            if (ts.shift == 0.0 && thick == HybridThickness::LineMatched) t.xi = 0.5 * xi_bar;
        } else {
            t.doppler_static = ts.shift * s;
        }
        t.motion = MotionProfile{ts.epsilon, tau_d, b_d, s};
        c.targets.push_back(t);
    }
    return c;
}

} // namespace detail

// Chain order for accelerated combs runs from the outermost teeth to the
// center. The order matters once teeth move: with the center pair placed
// first, the stored light is re-absorbed by the side teeth on its way out.

/// Magnetized + accelerated targets. M4 is a1..a4: a1, a2 carry hyperfine
/// splitting S; a1, a3 accelerate with epsilon = +1, a2, a4 with -1.
inline CombSystem build_dynamical_hybrid(HybridVariant v, double s, double xi_bar, double tau_d,
                                         double b_d,
                                         HybridThickness thick = HybridThickness::LineMatched) {
    using detail::ToothSpec;
    std::vector<ToothSpec> layout;
    switch (v) {
    case HybridVariant::M4:
        layout = {{1, +1}, {1, -1}, {0, +1}, {0, -1}};
        break;
    case HybridVariant::M6:
        layout = {{2, +1}, {2, -1}, {1, +1}, {1, -1}, {0, +1}, {0, -1}};
        break;
    }
    return detail::build_dynamical(layout, true, s, xi_bar, tau_d, b_d, thick);
}

/// Unmagnetized targets with static plus accelerated Doppler shift, listed
/// as (static shift, epsilon). M6 holds (S,-1), (-S,+1), (S,+1), (-S,-1),
/// (0,-1), (0,+1) in chain order; (S,+1) and (-S,-1) are b1 and b4, the
/// teeth that drift outward and never cross another tooth. M4 drops them.
inline CombSystem build_dynamical_doppler(DopplerVariant v, double s, double xi_bar, double tau_d,
                                          double b_d) {
    using detail::ToothSpec;
    std::vector<ToothSpec> layout;
    switch (v) {
    case DopplerVariant::M4:
        layout = {{1, -1}, {-1, +1}, {0, -1}, {0, +1}};
        break;
    case DopplerVariant::M6:
        layout = {{1, -1}, {-1, +1}, {1, +1}, {-1, -1}, {0, -1}, {0, +1}};
        break;
    case DopplerVariant::M10:
        layout = {{2, -1}, {2, +1}, {-2, -1}, {-2, +1}, {1, -1},
                  {1, +1}, {-1, -1}, {-1, +1}, {0, -1}, {0, +1}};
        break;
    }
    return detail::build_dynamical(layout, false, s, xi_bar, tau_d, b_d);
}

} // namespace nfc
