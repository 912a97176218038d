#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "paces/common.hpp"

namespace paces {

// ===========================================================================
// Linear absorption from the real-time dipole signal: exponential lifetime
// damping followed by a half-sided discrete Fourier transform. The damping is
// the window; no additional windowing is applied.
// ===========================================================================

/// One sample of the dipole autocorrelation <mu(t) mu(0)>.
struct SignalSample {
    double t = 0;
    cplx amplitude{0, 0};
};

struct SpectrumConfig {
    /// Damping lifetime in units of 1/omega0; infinity disables damping.
    double tau = std::numeric_limits<double>::infinity();
    int pad_factor = 4;          ///< zero-padding factor refining the frequency grid
    double omega_min = -5.0;     ///< window relative to the reference transition
    double omega_max = 5.0;
    bool per_chromophore = false;
    std::size_t chromophores = 1;

    void validate() const {
        if (!(tau > 0)) throw Error("spectrum: lifetime tau must be > 0");
        if (pad_factor < 1) throw Error("spectrum: pad factor must be >= 1");
        if (!(omega_max > omega_min)) throw Error("spectrum: empty frequency window");
        if (per_chromophore && chromophores == 0) throw Error("spectrum: chromophore count must be >= 1");
    }
};

/// amplitude(t_l) <- amplitude(t_l) * exp(-t_l / tau); identity for infinite tau.
inline void damp_signal(std::vector<SignalSample>& samples, double tau) {
    if (!(tau > 0)) throw Error("damp_signal: tau must be > 0");
    if (std::isinf(tau)) return;
    for (auto& s : samples) s.amplitude *= std::exp(-s.t / tau);
}

struct SpectrumPoint {
    double omega = 0;  ///< relative to the reference transition, units of omega0
    double a = 0;      ///< absorption, arbitrary units
};

/// A(omega_k) = Re[ dt * sum_l S(t_l) exp(i omega_k t_l) ] with the l = 0
/// sample half-weighted (rectangle rule on the half-open time axis), on the
/// zero-padded frequency grid restricted to the configured window.
inline std::vector<SpectrumPoint> transform(const std::vector<SignalSample>& samples,
                                            const SpectrumConfig& cfg) {
    cfg.validate();
    if (samples.size() < 2) throw Error("spectrum: need at least 2 samples");
    const double dt = samples[1].t - samples[0].t;
    if (!(dt > 0)) throw Error("spectrum: samples must be uniformly increasing in t");
    for (std::size_t l = 1; l < samples.size(); ++l) {
        if (std::abs(samples[l].t - samples[0].t - double(l) * dt) > 1e-9 * dt * double(l + 1))
            throw Error("spectrum: nonuniform sampling");
    }

    const std::size_t n_pad = samples.size() * std::size_t(cfg.pad_factor);
    const double bin = 2.0 * M_PI / (double(n_pad) * dt);
    const auto k_min = static_cast<std::int64_t>(std::ceil(cfg.omega_min / bin - 1e-12));
    const auto k_max = static_cast<std::int64_t>(std::floor(cfg.omega_max / bin + 1e-12));

    std::vector<SpectrumPoint> out(static_cast<std::size_t>(std::max<std::int64_t>(0, k_max - k_min + 1)));
#pragma omp parallel for schedule(static)
    for (std::int64_t k = k_min; k <= k_max; ++k) {
        const double omega = double(k) * bin;
        const cplx rot = std::exp(cplx(0, omega * dt));
        cplx phase = 1;
        cplx acc = 0.5 * samples[0].amplitude;
        for (std::size_t l = 1; l < samples.size(); ++l) {
            phase *= rot;
            acc += samples[l].amplitude * phase;
        }
        double a = dt * acc.real();
        if (cfg.per_chromophore) a /= double(cfg.chromophores);
        out[static_cast<std::size_t>(k - k_min)] = {omega, a};
    }
    return out;
}

/// Frequency spacing of the transform grid for a given sample set.
inline double frequency_bin(std::size_t n_samples, double dt, int pad_factor) {
    return 2.0 * M_PI / (double(n_samples) * double(pad_factor) * dt);
}

}  // namespace paces
