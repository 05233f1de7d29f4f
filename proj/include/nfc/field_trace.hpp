// field_trace.hpp - uniformly sampled complex envelope and quadrature helpers.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "nfc/comb_model.hpp"
#include "nfc/errors.hpp"

namespace nfc {

using cplx = std::complex<double>;

struct FieldTrace {
    double t_start = 0.0;
    double dt = 1.0;
    std::vector<cplx> samples;

    std::size_t size() const { return samples.size(); }
    double time(std::size_t i) const { return t_start + dt * static_cast<double>(i); }
    double t_end() const { return samples.empty() ? t_start : time(samples.size() - 1); }

    bool all_finite() const {
        for (const auto& s : samples)
            if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) return false;
        return true;
    }

    /// Nearest sample index to time t, clamped to the trace.
    std::size_t index_of(double t) const {
        if (samples.empty()) return 0;
        const double x = std::round((t - t_start) / dt);
        if (x <= 0.0) return 0;
        const auto i = static_cast<std::size_t>(x);
        return std::min(i, samples.size() - 1);
    }

    /// Catmull-Rom interpolation, zero outside the sampled span.
    cplx at(double t) const {
        const std::size_t n = samples.size();
        if (n == 0) return {};
        const double x = (t - t_start) / dt;
        if (x < 0.0 || x > static_cast<double>(n - 1)) return {};
        const auto i = std::min(static_cast<std::size_t>(x), n - 1);
        const double f = x - static_cast<double>(i);
        if (f == 0.0 || i + 1 >= n) return samples[i];
        const cplx p0 = i > 0 ? samples[i - 1] : cplx{};
        const cplx p1 = samples[i];
        const cplx p2 = samples[i + 1];
        const cplx p3 = i + 2 < n ? samples[i + 2] : cplx{};
        const double f2 = f * f, f3 = f2 * f;
        return 0.5 * ((2.0 * p1) + (-p0 + p2) * f + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * f2 +
                      (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * f3);
    }

    FieldTrace scaled(cplx alpha) const {
        FieldTrace out = *this;
        for (auto& s : out.samples) s *= alpha;
        return out;
    }
};

/// Samples the pulse envelope on n points starting at t_start.
inline FieldTrace sample_pulse(const PulseSpec& p, double t_start, double dt, std::size_t n) {
    FieldTrace tr{t_start, dt, std::vector<cplx>(n)};
    for (std::size_t i = 0; i < n; ++i) tr.samples[i] = p.envelope(tr.time(i));
    return tr;
}

/// Trapezoidal integral of |f|^2 over samples [i0, i1].
inline double energy(const FieldTrace& tr, std::size_t i0, std::size_t i1) {
    if (tr.samples.empty() || i1 <= i0) return 0.0;
    i1 = std::min(i1, tr.samples.size() - 1);
    double acc = 0.5 * (std::norm(tr.samples[i0]) + std::norm(tr.samples[i1]));
    for (std::size_t i = i0 + 1; i < i1; ++i) acc += std::norm(tr.samples[i]);
    return acc * tr.dt;
}

inline double energy(const FieldTrace& tr) {
    return tr.samples.empty() ? 0.0 : energy(tr, 0, tr.samples.size() - 1);
}

/// ||a - b|| / ||b|| over the common sample range. Grids must match.
inline double relative_l2(const FieldTrace& a, const FieldTrace& b) {
    if (std::abs(a.dt - b.dt) > 1e-12 * b.dt || std::abs(a.t_start - b.t_start) > 1e-9)
        throw InvalidArgument("relative_l2: traces are on different grids");
    const std::size_t n = std::min(a.size(), b.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += std::norm(a.samples[i] - b.samples[i]);
        den += std::norm(b.samples[i]);
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : INFINITY;
    return std::sqrt(num / den);
}

} // namespace nfc
