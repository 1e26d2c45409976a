#pragma once

// Physical device description: a quarter-wavelength resonator terminated by a
// flux-tunable SQUID. Energies are carried as angular frequencies (E/hbar)
// throughout, so no Planck constant ever enters the arithmetic. The module
// computes the static working point, the eigenmode spectrum from
//   kd * tan(kd) = 1/gamma,
// and the mode-SQUID couplings beta_n.

#include <cmath>
#include <string>
#include <vector>

#include "pmsim/errors.hpp"

namespace pmsim {

inline constexpr double kVonKlitzingOhm = 25812.80745; // h/e^2

struct DeviceParams {
    double e_plus = 0;      // (E_J1+E_J2)/2 as angular frequency
    double e_minus = 0;     // (E_J1-E_J2)/2, zero for a symmetric SQUID
    double z0 = 50.0;       // characteristic line impedance, ohm
    double el_cav = 0;      // cavity inductive energy scale, angular frequency
    double static_flux = 0; // F = 2*pi*Phi_dc/Phi_0, radians
    int n_modes = 1;

    void validate() const {
        if (!(e_plus > 0)) throw InvalidParameter("DeviceParams: e_plus must be > 0");
        if (!(std::abs(e_minus) < e_plus))
            throw InvalidParameter("DeviceParams: |e_minus| must be < e_plus");
        if (!(z0 > 0)) throw InvalidParameter("DeviceParams: z0 must be > 0");
        if (!(el_cav > 0)) throw InvalidParameter("DeviceParams: el_cav must be > 0");
        if (n_modes < 1) throw InvalidParameter("DeviceParams: n_modes must be >= 1");
        if (std::abs(std::cos(static_flux / 2)) <= 1e-6)
            throw FluxSingularity("DeviceParams: cos(F/2) vanishes; gamma diverges at this flux");
    }
};

struct Mode {
    int index = 0;     // 1-based; mode index lies in ((index-1)*pi, (2*index-1)*pi/2)
    double kd = 0;     // dimensionless wavenumber k_n d
    double omega = 0;  // kd * frequency_scale
    double beta = 0;   // gamma * sqrt(8*pi*Z0*kd/R_K)
    double residual = 0; // |kd*tan(kd) - 1/gamma| as evaluated in double precision
};

struct ModeSpectrum {
    double gamma = 0;  // SQUID participation ratio E_L,cav / (2 E+ cos(F/2))
    double frequency_scale = 0; // v/d, angular frequency per unit kd
    std::vector<Mode> modes;
};

// Differential SQUID inductance normalized to its zero-flux value,
// L_SQ/L_SQ0 = 1 / (cos(f/2)cos(phi) - (E-/E+) sin(f/2)sin(phi)).
inline double squid_inductance(double phi, double f, const DeviceParams& params) {
    const double ratio = params.e_minus / params.e_plus;
    const double den = std::cos(f / 2) * std::cos(phi) - ratio * std::sin(f / 2) * std::sin(phi);
    if (std::abs(den) < 1e-12)
        throw DivergentInductance("squid_inductance: operating at a flux/phase singularity");
    return 1.0 / den;
}

// Static phase at the SQUID edge, tan(phi0) = -(E-/E+) tan(F/2).
inline double static_phase(const DeviceParams& params) {
    const double half = params.static_flux / 2;
    // distance to the nearest tan pole
    const double wrapped = std::remainder(half - M_PI / 2, M_PI);
    if (std::abs(wrapped) < 1e-6)
        throw FluxSingularity("static_phase: F/2 too close to pi/2 + k*pi");
    return std::atan(-(params.e_minus / params.e_plus) * std::tan(half));
}

inline double participation_ratio(const DeviceParams& params) {
    return params.el_cav / (2 * params.e_plus * std::cos(params.static_flux / 2));
}

namespace detail {

// One root of kd*tan(kd) = 1/gamma inside ((n-1)pi, (2n-1)pi/2). The function
// is monotone on the bracket (0 at the left edge, +inf at the pole), so
// bisection cannot fail; Newton plus a neighboring-double sweep then pushes
// the residual to the double-precision floor.
inline double spectral_root(int n, double inv_gamma) {
    auto f = [inv_gamma](double x) { return x * std::tan(x) - inv_gamma; };
    auto df = [](double x) {
        const double t = std::tan(x);
        return t + x * (1 + t * t);
    };

    const double left = (n - 1) * M_PI;
    const double pole = (2 * n - 1) * M_PI / 2;
    double lo = left + 1e-9 * M_PI;
    // inset from the pole small enough that f(hi) > 0: tan(pole-u) ~ 1/u
    double hi = pole - std::min(1e-3, 0.5 * pole / inv_gamma);
    if (!(f(lo) < 0) || !(f(hi) > 0))
        throw RootBracketFailure("solve_spectrum: bracket does not change sign for mode " +
                                 std::to_string(n));

    for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0 ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 50; ++it) {
        const double fx = f(x);
        const double step = fx / df(x);
        double xn = x - step;
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi); // fall back to bisection
        (f(xn) < 0 ? lo : hi) = xn;
        if (xn == x || std::abs(step) < 1e-17 * x) break;
        x = xn;
    }
    // pick the best of the adjacent representable values
    double best = x, best_f = std::abs(f(x));
    for (double cand : {std::nextafter(x, 0.0), std::nextafter(x, 8.0 * pole),
                        std::nextafter(std::nextafter(x, 0.0), 0.0),
                        std::nextafter(std::nextafter(x, 8.0 * pole), 8.0 * pole)}) {
        const double fc = std::abs(f(cand));
        if (fc < best_f) { best = cand; best_f = fc; }
    }
    return best;
}

} // namespace detail

// Solves the first n_modes branches of the spectral equation and attaches
// frequencies and couplings. frequency_scale is v/d as an angular frequency;
// only the products kd and omega_n = kd * v/d enter the dynamics.
inline ModeSpectrum solve_spectrum(const DeviceParams& params, double frequency_scale) {
    params.validate();
    const double gamma = participation_ratio(params);
    if (!(gamma > 0) || !(gamma < 1))
        throw GammaOutOfRange("solve_spectrum: gamma = " + std::to_string(gamma) +
                              " outside (0, 1)");
    if (!(frequency_scale > 0))
        throw InvalidParameter("solve_spectrum: frequency_scale must be > 0");

    ModeSpectrum spec;
    spec.gamma = gamma;
    spec.frequency_scale = frequency_scale;
    spec.modes.reserve(params.n_modes);
    for (int n = 1; n <= params.n_modes; ++n) {
        Mode m;
        m.index = n;
        m.kd = detail::spectral_root(n, 1.0 / gamma);
        m.omega = m.kd * frequency_scale;
        m.beta = gamma * std::sqrt(8 * M_PI * params.z0 * m.kd / kVonKlitzingOhm);
        m.residual = std::abs(m.kd * std::tan(m.kd) - 1.0 / gamma);
        spec.modes.push_back(m);
    }
    return spec;
}

} // namespace pmsim
