#pragma once

// Euler-Maruyama simulation of the slow-amplitude equation with additive
// complex white noise of variance 2*Gamma1*(n_th + 1/2)*dt, plus IQ readout
// and dwell/switching statistics over labeled attractors.

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstddef>
#include <random>
#include <vector>

#include "pmsim/errors.hpp"
#include "pmsim/parallel.hpp"
#include "pmsim/rng.hpp"
#include "pmsim/rwa.hpp"

namespace pmsim {

struct NoiseConfig {
    double n_th = 0;                 // thermal occupation of the mode bath
    std::uint64_t seed = 1;
    double measurement_sigma = 0;    // added readout noise per quadrature
    double noise_scale = 1;          // multiplies the Langevin amplitude; 0 = deterministic

    void validate() const {
        if (!(n_th >= 0)) throw InvalidParameter("NoiseConfig: n_th must be >= 0");
        if (!(measurement_sigma >= 0))
            throw InvalidParameter("NoiseConfig: measurement_sigma must be >= 0");
        if (!(noise_scale >= 0)) throw InvalidParameter("NoiseConfig: noise_scale must be >= 0");
    }
};

inline Complex sde_step(Complex a, double t, double dt, const RwaModel& m,
                        const NoiseConfig& noise, std::mt19937_64& rng) {
    if (!(dt > 0)) throw InvalidParameter("sde_step: dt must be > 0");
    if (dt * m.gamma1 >= 0.1) throw StepTooLarge("sde_step: dt*gamma1 must stay below 0.1");
    Complex next = a + eom_rhs(a, t, m) * dt;
    const double amp =
        noise.noise_scale * std::sqrt(2 * m.gamma1 * (noise.n_th + 0.5) * dt);
    if (amp > 0) {
        std::normal_distribution<double> gauss;
        const double xi1 = gauss(rng);
        const double xi2 = gauss(rng);
        next += amp / std::sqrt(2.0) * Complex(xi1, xi2);
    }
    return next;
}

struct EnsembleOptions {
    int n_traj = 0;
    double t_total = 0;
    double dt = 0;
    double t_transient = 0;
    int stride = 1;            // record every stride-th step past the transient
    double kick_amplitude = 0; // initial |a| per trajectory, phase uniform in [0, 2*pi)

    void validate() const {
        if (n_traj < 0) throw InvalidParameter("EnsembleOptions: n_traj must be >= 0");
        if (!(dt > 0)) throw InvalidParameter("EnsembleOptions: dt must be > 0");
        if (!(t_total > 0)) throw InvalidParameter("EnsembleOptions: t_total must be > 0");
        if (!(t_transient >= 0 && t_transient < t_total))
            throw InvalidParameter("EnsembleOptions: need 0 <= t_transient < t_total");
        if (stride < 1) throw InvalidParameter("EnsembleOptions: stride must be >= 1");
        if (!(kick_amplitude >= 0))
            throw InvalidParameter("EnsembleOptions: kick_amplitude must be >= 0");
    }
};

struct EnsembleResult {
    std::vector<std::vector<Complex>> trajectories; // post-transient samples per trajectory
    double sample_dt = 0;                           // dt * stride
    double t_first_sample = 0;

    std::size_t sample_count() const {
        std::size_t n = 0;
        for (const auto& tr : trajectories) n += tr.size();
        return n;
    }
    std::vector<Complex> flattened() const {
        std::vector<Complex> out;
        out.reserve(sample_count());
        for (const auto& tr : trajectories) out.insert(out.end(), tr.begin(), tr.end());
        return out;
    }
};

// Independent trajectories from a = kick (or 0), each on its own RNG
// substream; samples recorded every stride-th step once k*dt reaches
// t_transient. Parallel over trajectories, reproducible bit-for-bit.
inline EnsembleResult simulate_ensemble(const RwaModel& m, const NoiseConfig& noise,
                                        const EnsembleOptions& opts) {
    m.validate();
    noise.validate();
    opts.validate();
    if (opts.dt * m.gamma1 >= 0.1)
        throw StepTooLarge("simulate_ensemble: dt*gamma1 must stay below 0.1");

    const auto n_steps = std::uint64_t(std::llround(opts.t_total / opts.dt));
    std::uint64_t k_start = std::uint64_t(std::ceil(opts.t_transient / opts.dt - 1e-9));
    if (k_start < 1) k_start = 1;

    EnsembleResult result;
    result.sample_dt = opts.dt * opts.stride;
    result.t_first_sample = double(k_start) * opts.dt;
    result.trajectories.assign(std::size_t(opts.n_traj), {});

    parallel_for(std::size_t(opts.n_traj), [&](std::size_t tr) {
        auto rng = substream_engine(noise.seed, RngStream::trajectory, tr);
        Complex a = 0;
        if (opts.kick_amplitude > 0) {
            auto kick_rng = substream_engine(noise.seed, RngStream::kick, tr);
            std::uniform_real_distribution<double> uni(0.0, 1.0);
            a = std::polar(opts.kick_amplitude, 2 * M_PI * uni(kick_rng));
        }
        std::vector<Complex>& samples = result.trajectories[tr];
        if (n_steps >= k_start)
            samples.reserve(std::size_t((n_steps - k_start) / std::uint64_t(opts.stride)) + 1);
        for (std::uint64_t k = 1; k <= n_steps; ++k) {
            a = sde_step(a, double(k - 1) * opts.dt, opts.dt, m, noise, rng);
            if (k >= k_start && (k - k_start) % std::uint64_t(opts.stride) == 0)
                samples.push_back(a);
        }
    });
    return result;
}

struct IQ {
    double i = 0;
    double q = 0;
};

// I + iQ = gain * sqrt(2*Gamma1) * a + measurement_sigma * (eta1 + i*eta2)
inline IQ sample_output_quadratures(Complex a, const RwaModel& m, const NoiseConfig& noise,
                                    double gain, std::mt19937_64& rng) {
    if (!(gain > 0)) throw InvalidParameter("sample_output_quadratures: gain must be > 0");
    Complex out = gain * std::sqrt(2 * m.gamma1) * a;
    if (noise.measurement_sigma > 0) {
        std::normal_distribution<double> gauss;
        const double eta1 = gauss(rng);
        const double eta2 = gauss(rng);
        out += noise.measurement_sigma * Complex(eta1, eta2);
    }
    return {out.real(), out.imag()};
}

// Readout applied to a whole ensemble, one measurement substream per
// trajectory, samples in trajectory-major order.
inline std::vector<Complex> output_samples(const EnsembleResult& ens, const RwaModel& m,
                                           const NoiseConfig& noise, double gain) {
    std::vector<Complex> out(ens.sample_count());
    std::vector<std::size_t> offsets(ens.trajectories.size() + 1, 0);
    for (std::size_t tr = 0; tr < ens.trajectories.size(); ++tr)
        offsets[tr + 1] = offsets[tr] + ens.trajectories[tr].size();
    parallel_for(ens.trajectories.size(), [&](std::size_t tr) {
        auto rng = substream_engine(noise.seed, RngStream::measurement, tr);
        std::size_t at = offsets[tr];
        for (Complex a : ens.trajectories[tr]) {
            const IQ s = sample_output_quadratures(a, m, noise, gain, rng);
            out[at++] = Complex(s.i, s.q);
        }
    });
    return out;
}

struct SwitchingStats {
    std::vector<std::vector<double>> dwell_times;        // per state, in time units
    std::vector<std::vector<std::uint64_t>> transitions; // [from][to], distinct states only
    std::uint64_t transit_samples = 0;

    std::size_t n_states() const { return dwell_times.size(); }
    std::uint64_t departures(std::size_t from) const {
        std::uint64_t n = 0;
        for (std::uint64_t c : transitions[from]) n += c;
        return n;
    }
};

// Nearest-state labeling within capture_radius (otherwise "transit"). A dwell
// is a contiguous run of samples in one state; a transition is recorded when
// the next labeled state differs from the previous one, transit interludes
// ignored.
inline SwitchingStats switching_statistics(const std::vector<Complex>& stream, double sample_dt,
                                           const std::vector<Complex>& states,
                                           double capture_radius) {
    if (states.empty()) throw InvalidParameter("switching_statistics: need >= 1 state");
    if (!(capture_radius > 0))
        throw InvalidParameter("switching_statistics: capture_radius must be > 0");
    if (!(sample_dt > 0)) throw InvalidParameter("switching_statistics: sample_dt must be > 0");

    SwitchingStats st;
    st.dwell_times.assign(states.size(), {});
    st.transitions.assign(states.size(), std::vector<std::uint64_t>(states.size(), 0));

    int cur = -1;           // state of the ongoing residence, -1 in transit
    std::uint64_t run = 0;
    int prev_state = -1;    // most recent labeled state
    for (Complex z : stream) {
        int lab = -1;
        double best = capture_radius;
        for (std::size_t k = 0; k < states.size(); ++k) {
            const double d = std::abs(z - states[k]);
            if (d <= best) {
                best = d;
                lab = int(k);
            }
        }
        if (lab < 0) {
            ++st.transit_samples;
            if (cur >= 0) {
                st.dwell_times[std::size_t(cur)].push_back(double(run) * sample_dt);
                cur = -1;
                run = 0;
            }
            continue;
        }
        if (lab == cur) {
            ++run;
            continue;
        }
        if (cur >= 0) st.dwell_times[std::size_t(cur)].push_back(double(run) * sample_dt);
        if (prev_state >= 0 && lab != prev_state)
            ++st.transitions[std::size_t(prev_state)][std::size_t(lab)];
        cur = lab;
        run = 1;
        prev_state = lab;
    }
    if (cur >= 0) st.dwell_times[std::size_t(cur)].push_back(double(run) * sample_dt);
    return st;
}

inline SwitchingStats merge_switching(const SwitchingStats& a, const SwitchingStats& b) {
    if (a.n_states() != b.n_states())
        throw InvalidParameter("merge_switching: state counts differ");
    SwitchingStats out = a;
    for (std::size_t s = 0; s < b.n_states(); ++s) {
        out.dwell_times[s].insert(out.dwell_times[s].end(), b.dwell_times[s].begin(),
                                  b.dwell_times[s].end());
        for (std::size_t t = 0; t < b.n_states(); ++t)
            out.transitions[s][t] += b.transitions[s][t];
    }
    out.transit_samples += b.transit_samples;
    return out;
}

// Per-trajectory statistics merged in trajectory order, so no spurious
// transitions appear across trajectory boundaries.
inline SwitchingStats ensemble_switching(const EnsembleResult& ens,
                                         const std::vector<Complex>& states,
                                         double capture_radius) {
    SwitchingStats total;
    total.dwell_times.assign(states.size(), {});
    total.transitions.assign(states.size(), std::vector<std::uint64_t>(states.size(), 0));
    for (const auto& tr : ens.trajectories)
        total = merge_switching(
            total, switching_statistics(tr, ens.sample_dt, states, capture_radius));
    return total;
}

} // namespace pmsim
