#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "pmsim/integrate.hpp"
#include "pmsim/stochastic.hpp"

using namespace pmsim;

namespace {

RwaModel model(int n, double delta, double gamma1, double alpha, Complex eps) {
    RwaModel m;
    m.n = n;
    m.delta = delta;
    m.gamma1 = gamma1;
    m.alpha = alpha;
    m.epsilon = eps;
    return m;
}

} // namespace

TEST_CASE("zero noise reduces to the Euler step") {
    const RwaModel m = model(3, -1.1, 0.4, 0.7, Complex(0.3, 0.1));
    NoiseConfig noise;
    noise.noise_scale = 0.0;
    auto rng = substream_engine(1, RngStream::trajectory, 0);
    const Complex a(0.6, -0.2);
    const double dt = 0.01, t = 2.5;
    CHECK(sde_step(a, t, dt, m, noise, rng) == a + eom_rhs(a, t, m) * dt);
}

TEST_CASE("step size guard") {
    const RwaModel m = model(2, 0.0, 1.0, 0.0, 0.0);
    NoiseConfig noise;
    auto rng = substream_engine(1, RngStream::trajectory, 0);
    CHECK_THROWS_AS(sde_step(0.0, 0.0, 0.1, m, noise, rng), StepTooLarge);
    CHECK_THROWS_AS(sde_step(0.0, 0.0, 0.0, m, noise, rng), InvalidParameter);
    CHECK_NOTHROW(sde_step(0.0, 0.0, 0.099, m, noise, rng));

    EnsembleOptions opts;
    opts.n_traj = 1;
    opts.t_total = 1.0;
    opts.dt = 0.1;
    CHECK_THROWS_AS(simulate_ensemble(m, noise, opts), StepTooLarge);
}

TEST_CASE("deterministic limit converges at first order") {
    const RwaModel m = model(3, -3.0, 1.0, 1.0, 2.0);
    NoiseConfig noise;
    noise.noise_scale = 0.0;
    auto rng = substream_engine(1, RngStream::trajectory, 0);
    const Complex a0(1.5, 0.5);
    const double t_final = 1.0;
    const Complex ref = integrate_final(a0, m, t_final, 1e-12);

    auto em_error = [&](double dt) {
        Complex a = a0;
        const auto steps = std::llround(t_final / dt);
        for (long long k = 0; k < steps; ++k) a = sde_step(a, k * dt, dt, m, noise, rng);
        return std::abs(a - ref);
    };
    const double e1 = em_error(1e-3);
    const double e2 = em_error(5e-4);
    const double e3 = em_error(2.5e-4);
    CHECK(e1 / e2 == Catch::Approx(2.0).epsilon(0.15));
    CHECK(e2 / e3 == Catch::Approx(2.0).epsilon(0.15));
}

TEST_CASE("stationary occupation of the damped linear mode") {
    // <|a|^2> -> n_th + 1/2; discrete Euler-Maruyama bias at dt*gamma1 = 5e-3
    // is (gamma1^2 + delta^2) dt / (2 gamma1) = 0.74 percent
    const RwaModel m = model(2, 0.7, 0.5, 0.0, 0.0);
    NoiseConfig noise;
    noise.n_th = 1.3;
    noise.seed = 99;
    auto rng = substream_engine(noise.seed, RngStream::trajectory, 0);
    const double dt = 0.01;
    Complex a = 0;
    const int burn = 20000, keep = 1000000;
    for (int k = 0; k < burn; ++k) a = sde_step(a, 0.0, dt, m, noise, rng);
    double acc = 0;
    for (int k = 0; k < keep; ++k) {
        a = sde_step(a, 0.0, dt, m, noise, rng);
        acc += std::norm(a);
    }
    const double mean = acc / keep;
    CHECK(mean == Catch::Approx(1.8).epsilon(0.05));
    CHECK(mean == Catch::Approx(1.8134193028410236).epsilon(0.05));
}

TEST_CASE("ensembles are reproducible bit for bit") {
    const RwaModel m = model(3, -3.0, 1.0, 0.01, 0.2);
    NoiseConfig noise;
    noise.seed = 4242;
    EnsembleOptions opts;
    opts.n_traj = 8;
    opts.t_total = 2.0;
    opts.dt = 0.01;
    opts.t_transient = 1.0;
    opts.stride = 5;
    opts.kick_amplitude = 29.8;

    const EnsembleResult r1 = simulate_ensemble(m, noise, opts);
    const EnsembleResult r2 = simulate_ensemble(m, noise, opts);
    REQUIRE(r1.trajectories.size() == r2.trajectories.size());
    for (std::size_t tr = 0; tr < r1.trajectories.size(); ++tr)
        CHECK(r1.trajectories[tr] == r2.trajectories[tr]);

    // distinct substreams and seeds decorrelate trajectories
    CHECK(r1.trajectories[0] != r1.trajectories[1]);
    noise.seed = 4243;
    const EnsembleResult r3 = simulate_ensemble(m, noise, opts);
    CHECK(r1.trajectories[0] != r3.trajectories[0]);
}

TEST_CASE("sampling grid respects transient and stride") {
    const RwaModel m = model(2, 0.0, 0.2, 0.0, 0.0);
    NoiseConfig noise;
    EnsembleOptions opts;
    opts.n_traj = 2;
    opts.t_total = 1.0;
    opts.dt = 0.1;
    opts.t_transient = 0.5;
    opts.stride = 2;
    const EnsembleResult r = simulate_ensemble(m, noise, opts);
    // steps k = 1..10, first sample at k = 5, then every 2nd: k = 5, 7, 9
    CHECK(r.t_first_sample == Catch::Approx(0.5));
    CHECK(r.sample_dt == Catch::Approx(0.2));
    for (const auto& tr : r.trajectories) CHECK(tr.size() == 3);
    CHECK(r.sample_count() == 6);
    CHECK(r.flattened().size() == 6);
}

TEST_CASE("readout maps amplitude to quadratures") {
    const RwaModel m = model(2, 0.0, 0.5, 0.0, 0.0);
    NoiseConfig noise;
    noise.measurement_sigma = 0.0;
    auto rng = substream_engine(1, RngStream::measurement, 0);
    const Complex a(1.2, -0.7);
    const IQ s = sample_output_quadratures(a, m, noise, 2.0, rng);
    CHECK(s.i == Catch::Approx((2.0 * a * std::sqrt(1.0)).real()));
    CHECK(s.q == Catch::Approx((2.0 * a * std::sqrt(1.0)).imag()));
    CHECK_THROWS_AS(sample_output_quadratures(a, m, noise, 0.0, rng), InvalidParameter);

    noise.measurement_sigma = 3.0;
    // same substream, same draws: output_samples is reproducible
    const EnsembleResult ens{{{a, a * 2.0}, {a * 3.0}}, 0.1, 0.5};
    const auto s1 = output_samples(ens, m, noise, 2.0);
    const auto s2 = output_samples(ens, m, noise, 2.0);
    CHECK(s1 == s2);
    CHECK(s1.size() == 3);
}

TEST_CASE("switching statistics on a hand-built stream") {
    const std::vector<Complex> states = {Complex(0, 0), Complex(4, 0)};
    const std::vector<Complex> stream = {
        {0.1, 0.0}, {0.2, 0.1},             // state 0, run of 2
        {4.1, 0.0}, {3.8, 0.2},             // state 1, run of 2
        {2.0, 0.0},                         // transit
        {0.3, 0.0}, {0.2, 0.0},             // state 0 again (via transit)
    };
    const double dt = 0.5;
    const SwitchingStats st = switching_statistics(stream, dt, states, 1.0);
    REQUIRE(st.n_states() == 2);
    REQUIRE(st.dwell_times[0].size() == 2);
    CHECK(st.dwell_times[0][0] == Catch::Approx(1.0));
    CHECK(st.dwell_times[0][1] == Catch::Approx(1.0)); // censored tail dwell
    REQUIRE(st.dwell_times[1].size() == 1);
    CHECK(st.dwell_times[1][0] == Catch::Approx(1.0));
    CHECK(st.transitions[0][1] == 1);
    CHECK(st.transitions[1][0] == 1); // transit interlude ignored
    CHECK(st.transit_samples == 1);
    CHECK(st.departures(0) == 1);
}

TEST_CASE("no transition is recorded without a state change") {
    const std::vector<Complex> states = {Complex(0, 0), Complex(4, 0)};
    const std::vector<Complex> stream = {
        {0.1, 0.0}, {2.0, 0.0}, {0.1, 0.0}, {2.0, 0.0}, {0.2, 0.0},
    };
    const SwitchingStats st = switching_statistics(stream, 1.0, states, 1.0);
    CHECK(st.transitions[0][1] == 0);
    CHECK(st.transitions[1][0] == 0);
    CHECK(st.transitions[0][0] == 0);
    CHECK(st.dwell_times[0].size() == 3);
    CHECK(st.transit_samples == 2);
}

TEST_CASE("ensemble switching never crosses trajectory boundaries") {
    const std::vector<Complex> states = {Complex(0, 0), Complex(4, 0)};
    EnsembleResult ens;
    ens.sample_dt = 1.0;
    ens.trajectories = {{Complex(0.1, 0), Complex(0.2, 0)},
                        {Complex(4.0, 0), Complex(4.1, 0)}};
    const SwitchingStats st = ensemble_switching(ens, states, 1.0);
    CHECK(st.transitions[0][1] == 0);
    CHECK(st.transitions[1][0] == 0);
    CHECK(st.dwell_times[0].size() == 1);
    CHECK(st.dwell_times[1].size() == 1);
}

TEST_CASE("switching validation") {
    const std::vector<Complex> states = {Complex(0, 0)};
    CHECK_THROWS_AS(switching_statistics({}, 1.0, {}, 1.0), InvalidParameter);
    CHECK_THROWS_AS(switching_statistics({}, 1.0, states, 0.0), InvalidParameter);
    CHECK_THROWS_AS(switching_statistics({}, 0.0, states, 1.0), InvalidParameter);
    SwitchingStats a, b;
    a.dwell_times.assign(1, {});
    a.transitions.assign(1, std::vector<std::uint64_t>(1, 0));
    b.dwell_times.assign(2, {});
    b.transitions.assign(2, std::vector<std::uint64_t>(2, 0));
    CHECK_THROWS_AS(merge_switching(a, b), InvalidParameter);
}

TEST_CASE("noise configuration validation") {
    NoiseConfig noise;
    noise.n_th = -0.1;
    CHECK_THROWS_AS(noise.validate(), InvalidParameter);
    noise = NoiseConfig{};
    noise.measurement_sigma = -1;
    CHECK_THROWS_AS(noise.validate(), InvalidParameter);
    noise = NoiseConfig{};
    noise.noise_scale = -1;
    CHECK_THROWS_AS(noise.validate(), InvalidParameter);
}
