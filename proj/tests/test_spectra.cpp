#include "paces/spectra.hpp"

#include <gtest/gtest.h>

#include "paces/oracle.hpp"

using namespace paces;

namespace {

std::vector<SignalSample> lorentzian_signal(double omega_c, double tau, double dt, double t_max) {
    std::vector<SignalSample> s;
    for (double t = 0; t <= t_max + 1e-12; t += dt)
        s.push_back({t, std::exp(cplx(0, -omega_c * t)) * std::exp(-t / tau)});
    return s;
}

double peak_omega(const std::vector<SpectrumPoint>& spec) {
    double best = spec[0].omega, amax = spec[0].a;
    for (const auto& p : spec)
        if (p.a > amax) {
            amax = p.a;
            best = p.omega;
        }
    return best;
}

// local maxima above a relative threshold, in ascending omega
std::vector<double> peak_positions(const std::vector<SpectrumPoint>& spec, double rel_thresh) {
    double amax = 0;
    for (const auto& p : spec) amax = std::max(amax, p.a);
    std::vector<double> peaks;
    for (std::size_t i = 1; i + 1 < spec.size(); ++i)
        if (spec[i].a > spec[i - 1].a && spec[i].a >= spec[i + 1].a && spec[i].a > rel_thresh * amax)
            peaks.push_back(spec[i].omega);
    return peaks;
}

// dipole signal of a model from exact dense evolution of the optical state
std::vector<SignalSample> oracle_dipole_signal(const HamiltonianTermSet& ts, double dt, double t_max) {
    auto sys = dense_build(ts);
    auto prop = dense_diagonalize(sys);
    const std::uint32_t n = ts.lattice_sites();
    Eigen::VectorXcd opt = Eigen::VectorXcd::Zero(sys.dimension());
    std::vector<std::uint32_t> occ(ts.layout.site_count(), 0);
    for (std::uint32_t j = 0; j < n; ++j) {
        occ[0] = j;
        opt[occupation_index(ts.layout, occ)] = 1.0 / std::sqrt(double(n));
    }
    std::vector<SignalSample> sig;
    for (double t = 0; t <= t_max + 1e-12; t += dt) {
        Eigen::VectorXcd psi = dense_evolve(prop, opt, t);
        sig.push_back({t, opt.dot(psi)});  // Eigen: conjugates the left factor
    }
    return sig;
}

}  // namespace

TEST(Spectra, DampIdentityForInfiniteLifetime) {
    auto s = lorentzian_signal(1.0, 1e9, 0.1, 5.0);
    auto copy = s;
    damp_signal(copy, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(copy[i].amplitude, s[i].amplitude);
}

TEST(Spectra, DampConstantSignal) {
    const double tau = 2.5;
    std::vector<SignalSample> s{{0.0, 1.0}, {tau, 1.0}};
    damp_signal(s, tau);
    EXPECT_DOUBLE_EQ(s[0].amplitude.real(), 1.0);
    EXPECT_NEAR(s[1].amplitude.real(), std::exp(-1.0), 1e-15);
    EXPECT_THROW(damp_signal(s, -1.0), Error);
}

TEST(Spectra, LorentzianLineCenterAndWidth) {
    const double omega_c = 0.8, tau = 17.331, dt = 0.05, t_max = 400.0;
    auto s = lorentzian_signal(omega_c, tau, dt, t_max);
    SpectrumConfig cfg;
    cfg.pad_factor = 4;
    cfg.omega_min = 0.0;
    cfg.omega_max = 2.0;
    auto spec = transform(s, cfg);
    const double bin = frequency_bin(s.size(), dt, cfg.pad_factor);
    EXPECT_LE(std::abs(peak_omega(spec) - omega_c), bin);

    // half-maximum crossings: FWHM = 2 / tau
    double amax = 0;
    for (const auto& p : spec) amax = std::max(amax, p.a);
    double lo = 0, hi = 0;
    for (std::size_t i = 1; i < spec.size(); ++i) {
        if (spec[i - 1].a < amax / 2 && spec[i].a >= amax / 2) lo = spec[i].omega;
        if (spec[i - 1].a >= amax / 2 && spec[i].a < amax / 2) hi = spec[i - 1].omega;
    }
    EXPECT_NEAR(hi - lo, 2.0 / tau, 3 * bin);
}

TEST(Spectra, Linearity) {
    auto s1 = lorentzian_signal(0.5, 10.0, 0.1, 100.0);
    auto s2 = lorentzian_signal(-0.7, 10.0, 0.1, 100.0);
    std::vector<SignalSample> mix(s1.size());
    const double a = 0.3, b = -1.7;
    for (std::size_t i = 0; i < s1.size(); ++i)
        mix[i] = {s1[i].t, a * s1[i].amplitude + b * s2[i].amplitude};
    SpectrumConfig cfg;
    cfg.omega_min = -2;
    cfg.omega_max = 2;
    auto t1 = transform(s1, cfg), t2 = transform(s2, cfg), tm = transform(mix, cfg);
    for (std::size_t i = 0; i < tm.size(); ++i)
        EXPECT_NEAR(tm[i].a, a * t1[i].a + b * t2[i].a, 1e-10);
}

TEST(Spectra, PeakStableUnderTimestepRefinement) {
    const double omega_c = 1.3, tau = 20.0, t_max = 200.0;
    auto coarse = lorentzian_signal(omega_c, tau, 0.05, t_max);
    auto fine = lorentzian_signal(omega_c, tau, 0.025, t_max);
    SpectrumConfig cfg;
    cfg.omega_min = 0.5;
    cfg.omega_max = 2.0;
    const double coarse_bin = frequency_bin(coarse.size(), 0.05, cfg.pad_factor);
    EXPECT_LT(std::abs(peak_omega(transform(coarse, cfg)) - peak_omega(transform(fine, cfg))), coarse_bin);
}

TEST(Spectra, TooFewSamplesRejected) {
    std::vector<SignalSample> s{{0.0, 1.0}};
    EXPECT_THROW(transform(s, SpectrumConfig{}), Error);
}

TEST(Spectra, ElectronicDimerLinesAtPlusMinusJ) {
    // H-type dimer absorbs at +J, J-type at -J (from the dense oracle signal)
    const double j = 0.55, dt = 0.05, t_max = 100.0, tau = 1.0 / 0.0577;
    for (double sign : {+1.0, -1.0}) {
        ModelSpec s;
        s.kind = ModelKind::tight_binding;
        s.geometry = LatticeGeometry({2});
        s.holstein.eps = {0.0};
        s.holstein.hop_j = {sign * j};
        auto ts = build_model(s);
        auto sig = oracle_dipole_signal(ts, dt, t_max);
        damp_signal(sig, tau);
        SpectrumConfig cfg;
        cfg.omega_min = -2;
        cfg.omega_max = 2;
        auto spec = transform(sig, cfg);
        const double bin = frequency_bin(sig.size(), dt, cfg.pad_factor);
        EXPECT_LE(std::abs(peak_omega(spec) - sign * j), bin) << "sign " << sign;
    }
}

TEST(Spectra, VibronicMonomerProgression) {
    // zero-phonon line red-shifted by g^2 (units of omega0), spacing omega0
    const double g = 0.71, dt = 0.05, t_max = 100.0, tau = 1.0 / 0.0577;
    ModelSpec s;
    s.kind = ModelKind::holstein;
    s.geometry = LatticeGeometry({1});
    s.holstein.eps = {0.0};
    s.holstein.omega = {1.0};
    s.holstein.g = {g};
    s.holstein.d_pho = 16;
    auto ts = build_model(s);
    auto sig = oracle_dipole_signal(ts, dt, t_max);
    damp_signal(sig, tau);
    SpectrumConfig cfg;
    cfg.omega_min = -1.5;
    cfg.omega_max = 3.0;
    auto spec = transform(sig, cfg);
    const double bin = frequency_bin(sig.size(), dt, cfg.pad_factor);
    auto peaks = peak_positions(spec, 0.02);
    ASSERT_GE(peaks.size(), 3u);
    EXPECT_LE(std::abs(peaks[0] - (-g * g)), bin);  // 0.5041 red shift
    for (std::size_t k = 1; k < std::min<std::size_t>(peaks.size(), 4); ++k)
        EXPECT_LE(std::abs(peaks[k] - peaks[k - 1] - 1.0), bin);
}
