#pragma once

// Reduced slow-amplitude model for flux pumping at n times the fundamental
// mode. The equation of motion for the quasiclassical amplitude a(t) in the
// frame rotating at the measurement frequency omega = omega_1 + delta is
//
//   da/dt = i (delta + i*Gamma1 + alpha*|a|^2) a + i*eps_n (a*)^(n-1)
//           + i*zeta*exp(-i*Delta*t)                       [optional probe]
//
// The pump term uses the fundamental-mode amplitude: the n stationary states
// r*exp(i(theta0 + 2*pi*m/n)) only close under that convention.

#include <cmath>
#include <complex>
#include <optional>

#include "pmsim/device.hpp"
#include "pmsim/errors.hpp"

namespace pmsim {

using Complex = std::complex<double>;

struct PumpConfig {
    int n = 2;              // multiplication order, 2..5
    double delta_f0 = 0;    // flux modulation amplitude 2*pi*Phi_ac/Phi_0, radians
    double pump_phase = 0;  // phase of the flux modulation
    double delta = 0;       // detuning delta = omega - omega_1
    // Flux prefactor of the even pump coefficient. cos(F/2) matches the
    // parametric-resonance convention used here; an alternative derivation of
    // the pump potential gives sin(F/2), selectable for comparison.
    bool flux_factor_sin = false;

    void validate() const {
        if (n < 2 || n > 5) throw UnsupportedOrder("PumpConfig: n must be in {2,3,4,5}");
        if (!(delta_f0 >= 0)) throw InvalidParameter("PumpConfig: delta_f0 must be >= 0");
    }
    bool beyond_linear_pump() const { return delta_f0 > 0.5; }
};

// Spectator-mode response entering the odd pump coefficients: either the
// complex amplitude directly, or a steady-state linear susceptibility
// a = drive / (detuning + i*damping) for a mode driven at the pump frequency
// (through the SQUID asymmetry or through pump-line crosstalk).
struct HigherModeDrive {
    double amplitude = 0; // drive strength, angular frequency
    double detuning = 0;  // n*omega - omega_mode
    double damping = 0;   // mode linewidth, > 0
};

struct HigherModeConfig {
    std::optional<Complex> amplitude;
    std::optional<HigherModeDrive> drive;

    Complex response() const {
        if (amplitude) return *amplitude;
        if (drive) {
            if (!(drive->damping > 0))
                throw InvalidParameter("HigherModeConfig: drive damping must be > 0");
            return drive->amplitude / Complex(drive->detuning, drive->damping);
        }
        throw MissingHigherMode("HigherModeConfig: neither amplitude nor drive given");
    }
    bool empty() const { return !amplitude && !drive; }
};

struct ProbeConfig {
    Complex amplitude = 0; // drive strength zeta, angular frequency
    double detuning = 0;   // Delta relative to the measurement frequency
};

struct RwaModel {
    int n = 2;
    double delta = 0;
    double gamma1 = 0; // fundamental-mode damping rate, >= 0 (0 = lossless)
    double alpha = 0;  // Duffing coefficient
    Complex epsilon = 0;
    std::optional<ProbeConfig> probe;

    void validate() const {
        if (n < 2 || n > 5) throw UnsupportedOrder("RwaModel: n must be in {2,3,4,5}");
        if (!(gamma1 >= 0)) throw InvalidParameter("RwaModel: gamma1 must be >= 0");
        if (!std::isfinite(delta) || !std::isfinite(alpha) || !std::isfinite(epsilon.real()) ||
            !std::isfinite(epsilon.imag()))
            throw InvalidParameter("RwaModel: coefficients must be finite");
    }
    bool probe_active() const { return probe && std::abs(probe->amplitude) > 0; }
};

namespace detail {
// conj(a)^k for small integer k
inline Complex conj_pow(Complex a, int k) {
    Complex c = std::conj(a);
    Complex r = 1;
    for (int i = 0; i < k; ++i) r *= c;
    return r;
}
} // namespace detail

// alpha = E+ cos(F/2) beta1^4
inline double duffing_coefficient(const DeviceParams& params, const ModeSpectrum& spectrum) {
    if (spectrum.modes.empty()) throw InvalidParameter("duffing_coefficient: empty spectrum");
    const double b1 = spectrum.modes.front().beta;
    return params.e_plus * std::cos(params.static_flux / 2) * b1 * b1 * b1 * b1;
}

// |eps_2| = E+ cos(F/2) beta1^2 df0, eps_4 = -eps_2 * beta1^2/2; the pump
// phase multiplies the coefficient. Even orders exist for a symmetric SQUID.
inline Complex pump_coefficient_even(const DeviceParams& params, const ModeSpectrum& spectrum,
                                     const PumpConfig& pump) {
    if (pump.n != 2 && pump.n != 4)
        throw UnsupportedOrder("pump_coefficient_even: n must be 2 or 4");
    if (spectrum.modes.empty()) throw InvalidParameter("pump_coefficient_even: empty spectrum");
    const double half = params.static_flux / 2;
    const double flux_factor = pump.flux_factor_sin ? std::sin(half) : std::cos(half);
    const double b1 = spectrum.modes.front().beta;
    const Complex phase = std::polar(1.0, pump.pump_phase);
    Complex eps = params.e_plus * flux_factor * b1 * b1 * pump.delta_f0 * phase;
    if (pump.n == 4) eps *= -b1 * b1 / 2;
    return eps;
}

namespace detail {
// The eigenmode driven at the pump frequency n*omega. For the quarter-wave
// spectrum (omega_m ~ (2m-1) omega_1) this is mode (n+1)/2.
inline const Mode& spectator_mode(const ModeSpectrum& spectrum, const PumpConfig& pump) {
    const double target = pump.n * (spectrum.modes.front().omega + pump.delta);
    const Mode* best = nullptr;
    double best_d = 0;
    for (const Mode& m : spectrum.modes) {
        const double d = std::abs(m.omega - target);
        if (!best || d < best_d) { best = &m; best_d = d; }
    }
    if (best->index == 1 || best_d > 0.25 * target)
        throw InvalidParameter("pump_coefficient_odd: spectrum has no mode near the pump "
                               "frequency; increase n_modes");
    return *best;
}
} // namespace detail

// eps_3 = (E-/2) beta1^3 df0 / cos(F/2)  +  E+ cos(F/2) beta1^2 beta_s a_s
// where a_s is the response of the mode near 3*omega. The first term needs an
// asymmetric SQUID; the second also exists for a symmetric one. eps_5 carries
// the same structure scaled by beta1^2, with the coupling of the mode near
// 5*omega.
inline Complex pump_coefficient_odd(const DeviceParams& params, const ModeSpectrum& spectrum,
                                    const PumpConfig& pump,
                                    const std::optional<HigherModeConfig>& higher_mode) {
    if (pump.n != 3 && pump.n != 5)
        throw UnsupportedOrder("pump_coefficient_odd: n must be 3 or 5");
    if (spectrum.modes.empty()) throw InvalidParameter("pump_coefficient_odd: empty spectrum");

    const bool have_mode = higher_mode && !higher_mode->empty();
    if (!have_mode && params.e_minus == 0)
        throw MissingHigherMode("pump_coefficient_odd: symmetric SQUID with no higher-mode "
                                "response; the pump coefficient would vanish identically");

    const double half = params.static_flux / 2;
    const double cf = std::cos(half);
    const double b1 = spectrum.modes.front().beta;

    Complex eps = (params.e_minus / 2) * b1 * b1 * b1 * pump.delta_f0 / cf;
    if (have_mode) {
        const Mode& spect = detail::spectator_mode(spectrum, pump);
        eps += params.e_plus * cf * b1 * b1 * spect.beta * higher_mode->response();
    }
    if (pump.n == 5) eps *= b1 * b1;
    return eps * std::polar(1.0, pump.pump_phase);
}

inline Complex pump_coefficient(const DeviceParams& params, const ModeSpectrum& spectrum,
                                const PumpConfig& pump,
                                const std::optional<HigherModeConfig>& higher_mode) {
    return (pump.n % 2 == 0) ? pump_coefficient_even(params, spectrum, pump)
                             : pump_coefficient_odd(params, spectrum, pump, higher_mode);
}

inline RwaModel build_rwa_model(const DeviceParams& params, const ModeSpectrum& spectrum,
                                const PumpConfig& pump, double gamma1,
                                const std::optional<HigherModeConfig>& higher_mode = {},
                                const std::optional<ProbeConfig>& probe = {}) {
    pump.validate();
    RwaModel m;
    m.n = pump.n;
    m.delta = pump.delta;
    m.gamma1 = gamma1;
    m.alpha = duffing_coefficient(params, spectrum);
    m.epsilon = pump_coefficient(params, spectrum, pump, higher_mode);
    m.probe = probe;
    m.validate();
    return m;
}

// Right-hand side of the slow-amplitude equation.
inline Complex eom_rhs(Complex a, double t, const RwaModel& m) {
    const Complex i(0, 1);
    Complex rhs = i * (Complex(m.delta, m.gamma1) + m.alpha * std::norm(a)) * a +
                  i * m.epsilon * detail::conj_pow(a, m.n - 1);
    if (m.probe)
        rhs += i * m.probe->amplitude * std::exp(Complex(0, -m.probe->detuning * t));
    return rhs;
}

// Conserved function of the lossless (Gamma1 = 0, no probe) flow:
//   H = delta |a|^2 + (alpha/2)|a|^4 + (2/n) Re(eps (a*)^n).
// Used to validate the integrator; da/dt = i dH/da*.
inline double hamiltonian_value(Complex a, const RwaModel& m) {
    const double n2 = std::norm(a);
    const Complex pump_term = m.epsilon * detail::conj_pow(a, m.n);
    return m.delta * n2 + 0.5 * m.alpha * n2 * n2 + (2.0 / m.n) * pump_term.real();
}

} // namespace pmsim
