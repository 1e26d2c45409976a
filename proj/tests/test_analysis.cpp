#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "pmsim/analysis.hpp"

using namespace pmsim;

namespace {

// four gaussian blobs at radius 5, quarter-turn spacing, uneven weights
std::vector<Complex> synthetic_quadruplet(bool with_central, double rotate = 0.0) {
    std::mt19937_64 rng(314159);
    std::normal_distribution<double> gauss(0.0, 0.3);
    const int counts[4] = {30000, 28000, 26000, 24000};
    std::vector<Complex> samples;
    for (int k = 0; k < 4; ++k) {
        const Complex c = std::polar(5.0, 0.3 + k * M_PI / 2 + rotate);
        for (int i = 0; i < counts[k]; ++i)
            samples.push_back(c + Complex(gauss(rng), gauss(rng)));
    }
    if (with_central)
        for (int i = 0; i < 20000; ++i) samples.push_back(Complex(gauss(rng), gauss(rng)));
    return samples;
}

RwaModel triplet_model() {
    RwaModel m;
    m.n = 3;
    m.delta = -3.0;
    m.gamma1 = 1.0;
    m.alpha = 0.01;
    m.epsilon = 0.2;
    return m;
}

} // namespace

TEST_CASE("quadruplet detection and symmetry metrics") {
    const Histogram2D h = accumulate_histogram(synthetic_quadruplet(false), 8.0, 101);
    const ClusterReport rep = detect_clusters(h);
    REQUIRE(rep.clusters.size() == 4);
    CHECK_FALSE(rep.central_present);
    CHECK(rep.clusters[0].count >= rep.clusters[3].count); // sorted by count

    const MultipletMetrics mm = multiplet_symmetry_metric(rep, 4);
    CHECK(mm.spacing_error < 0.02);
    CHECK(mm.radius_spread < 0.02);
    // the threshold trims a larger fraction of the lighter blobs, so the
    // spread lands above the raw 6000/27000 count imbalance
    CHECK(mm.weight_spread > 0.18);
    CHECK(mm.weight_spread < 0.38);

    for (const Cluster& c : rep.clusters) {
        CHECK(c.radius() == Catch::Approx(5.0).margin(0.1));
        CHECK(c.rms_radius < 1.0);
        CHECK(c.bins >= 4);
    }
}

TEST_CASE("central blob is reported separately") {
    const Histogram2D h = accumulate_histogram(synthetic_quadruplet(true), 8.0, 101);
    const ClusterReport rep = detect_clusters(h);
    REQUIRE(rep.clusters.size() == 5);
    CHECK(rep.central_present);
    CHECK(rep.non_central().size() == 4);
    CHECK_NOTHROW(multiplet_symmetry_metric(rep, 4));
    CHECK_THROWS_AS(multiplet_symmetry_metric(rep, 5), WrongMultiplicity);
}

TEST_CASE("cluster metrics are rotation invariant") {
    const double rot = 0.9;
    const ClusterReport a =
        detect_clusters(accumulate_histogram(synthetic_quadruplet(false), 8.0, 101));
    const ClusterReport b =
        detect_clusters(accumulate_histogram(synthetic_quadruplet(false, rot), 8.0, 101));
    const MultipletMetrics ma = multiplet_symmetry_metric(a, 4);
    const MultipletMetrics mb = multiplet_symmetry_metric(b, 4);
    CHECK(ma.spacing_error == Catch::Approx(mb.spacing_error).margin(0.01));
    CHECK(ma.radius_spread == Catch::Approx(mb.radius_spread).margin(0.01));
    CHECK(ma.weight_spread == Catch::Approx(mb.weight_spread).margin(0.01));
    for (std::size_t k = 0; k < a.angular_spacings.size(); ++k)
        CHECK(a.angular_spacings[k] == Catch::Approx(b.angular_spacings[k]).margin(0.01));
}

TEST_CASE("speckle and empty histograms are rejected") {
    Histogram2D empty(1.0, 11);
    CHECK_THROWS_AS(detect_clusters(empty), InvalidParameter);

    // all mass in one bin: below the minimum component size
    Histogram2D point(1.0, 11);
    for (int i = 0; i < 100; ++i) point.add(0.0, 0.0);
    CHECK_THROWS_AS(detect_clusters(point), NoClusters);

    Histogram2D h(1.0, 11);
    h.add(0.0, 0.0);
    CHECK_THROWS_AS(detect_clusters(h, 0.0), InvalidParameter);
    CHECK_THROWS_AS(detect_clusters(h, 1.0), InvalidParameter);
}

TEST_CASE("histogram extent tracks the stable states and the noise floor") {
    std::vector<FixedPoint> fps(2);
    fps[0].r = 0.0;
    fps[0].stability = Stability::stable;
    fps[1].r = 10.0;
    fps[1].stability = Stability::stable;
    NoiseConfig noise;
    noise.measurement_sigma = 1.0;
    CHECK(auto_histogram_extent(fps, 2.0, 0.5, noise) ==
          Catch::Approx(1.5 * 2.0 * 1.0 * 10.0));
    // unstable radii are ignored
    fps[1].stability = Stability::saddle;
    CHECK(auto_histogram_extent(fps, 2.0, 0.5, noise) ==
          Catch::Approx(6 * (2.0 * std::sqrt(0.5) + 1.0)));
}

TEST_CASE("pump-detuning sweep recovers the doublet phase boundaries") {
    RwaModel base;
    base.n = 2;
    base.gamma1 = 0.3;
    base.alpha = 1.0;
    base.epsilon = 1.0;
    // delta = -1.5: ground only below eps = gamma1, coexistence up to
    // sqrt(delta^2 + gamma1^2) = 1.5297, excited only above.
    const SweepResult res =
        sweep_pump_detuning(base, {0.1, 0.9, 2.0}, {-1.5, 1.0});
    CHECK(res.region_at(0, 0) == int(RegionType::ground_only));
    CHECK(res.region_at(1, 0) == int(RegionType::coexistence));
    CHECK(res.region_at(2, 0) == int(RegionType::excited_only));
    // positive detuning never coexists for n = 2
    CHECK(res.region_at(0, 1) == int(RegionType::ground_only));
    CHECK(res.region_at(1, 1) == int(RegionType::ground_only));
    CHECK(res.region_at(2, 1) == int(RegionType::excited_only));
    CHECK(res.n_stable[0] == 1);
}

TEST_CASE("triplet sweep has no excited-only region and a monotone boundary") {
    RwaModel base = triplet_model();
    base.alpha = 1.0;
    std::vector<double> eps, deltas;
    for (int i = 0; i < 12; ++i) eps.push_back(0.1 * i);
    for (int j = 0; j < 9; ++j) deltas.push_back(-2.0 + 0.3 * j);
    const SweepResult res = sweep_pump_detuning(base, eps, deltas);
    for (std::size_t j = 0; j < deltas.size(); ++j) {
        bool seen_coexistence = false;
        for (std::size_t i = 0; i < eps.size(); ++i) {
            const int r = res.region_at(i, j);
            CHECK((r == int(RegionType::ground_only) || r == int(RegionType::coexistence)));
            if (r == int(RegionType::coexistence)) seen_coexistence = true;
            else CHECK_FALSE(seen_coexistence); // boundary crossed once per column
        }
    }
    CHECK_THROWS_AS(sweep_pump_detuning(base, {}, {0.0}), InvalidParameter);
    CHECK_THROWS_AS(sweep_pump_detuning(base, {-0.1}, {0.0}), InvalidParameter);
}

TEST_CASE("probe scan measures occupancy against the unprobed multiplet") {
    const RwaModel m = triplet_model();
    NoiseConfig noise;
    noise.seed = 7;
    noise.measurement_sigma = 3.0;

    ProbeScanOptions opts;
    opts.amplitudes = {0.0, 2.0};
    opts.sim.n_traj = 100;
    opts.sim.t_total = 3.0;
    opts.sim.dt = 0.005;
    opts.sim.t_transient = 1.5;
    opts.sim.stride = 50;
    opts.sim.kick_amplitude = 29.8;
    opts.gain = 1.0;

    const ProbeScan scan = probe_response_scan(m, noise, opts);
    REQUIRE(scan.reference.size() == 3);
    REQUIRE(scan.points.size() == 2);
    for (const ProbePoint& pt : scan.points) {
        std::uint64_t total = 0;
        for (std::uint64_t o : pt.occupancy) total += o;
        CHECK(total > 0);
        CHECK(pt.asymmetry >= 0.0);
        CHECK(pt.asymmetry <= 1.0);
        CHECK(pt.mean_angular_extent >= 0.0);
        CHECK(pt.histogram.total + pt.histogram.discards == total);
    }
    // a strong probe biases the occupancy more than no probe at all
    CHECK(scan.points[1].asymmetry >= scan.points[0].asymmetry);

    ProbeScanOptions bad = opts;
    bad.amplitudes = {1.0, 0.5};
    CHECK_THROWS_AS(probe_response_scan(m, noise, bad), InvalidParameter);

    RwaModel no_multiplet = m;
    no_multiplet.epsilon = 0.0;
    CHECK_THROWS_AS(probe_response_scan(no_multiplet, noise, opts), InvalidParameter);
}
