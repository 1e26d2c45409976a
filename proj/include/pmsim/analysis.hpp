#pragma once

// Signature extraction from simulated data: cluster detection on IQ
// histograms, multiplet symmetry metrics, probe-response scans, and
// pump-detuning stability diagrams.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstddef>
#include <vector>

#include "pmsim/dynamics.hpp"
#include "pmsim/errors.hpp"
#include "pmsim/histogram.hpp"
#include "pmsim/parallel.hpp"
#include "pmsim/rwa.hpp"
#include "pmsim/stochastic.hpp"

namespace pmsim {

struct ClusterOptions {
    double threshold_fraction = 0.2; // of the peak bin count
    int min_bins = 4;                // components smaller than this are speckle
    double central_radius = -1;      // radius calling a cluster "central"; < 0: 0.1 * extent
};

struct Cluster {
    double ci = 0, cq = 0;       // count-weighted centroid
    std::uint64_t count = 0;     // samples in the component
    double weight = 0;           // count / histogram total
    double rms_radius = 0;       // rms spread of member bins about the centroid
    int bins = 0;                // member bins

    double radius() const { return std::hypot(ci, cq); }
    double angle() const { return std::atan2(cq, ci); }
};

struct ClusterReport {
    std::vector<Cluster> clusters;        // sorted by descending count
    bool central_present = false;
    std::vector<double> angular_spacings; // circular gaps of non-central centroids, sorted
    double central_radius = 0;

    std::vector<const Cluster*> non_central() const {
        std::vector<const Cluster*> out;
        for (const Cluster& c : clusters)
            if (c.radius() > central_radius) out.push_back(&c);
        return out;
    }
};

// Threshold at threshold_fraction * peak, label 8-connected components of the
// surviving bins, report count-weighted centroids.
inline ClusterReport detect_clusters(const Histogram2D& h, const ClusterOptions& opts = {}) {
    if (h.total == 0) throw InvalidParameter("detect_clusters: histogram is empty");
    if (!(opts.threshold_fraction > 0 && opts.threshold_fraction < 1))
        throw InvalidParameter("detect_clusters: threshold_fraction must be in (0,1)");

    const std::uint64_t peak = *std::max_element(h.counts.begin(), h.counts.end());
    const double cut = opts.threshold_fraction * double(peak);

    ClusterReport rep;
    rep.central_radius = opts.central_radius < 0 ? 0.1 * h.extent : opts.central_radius;

    std::vector<char> seen(h.counts.size(), 0);
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < h.counts.size(); ++start) {
        if (seen[start] || double(h.counts[start]) < cut) continue;
        Cluster cl;
        double sx = 0, sy = 0;
        std::vector<std::size_t> member;
        stack.assign(1, start);
        seen[start] = 1;
        while (!stack.empty()) {
            const std::size_t cell = stack.back();
            stack.pop_back();
            member.push_back(cell);
            const int ix = int(cell % std::size_t(h.bins));
            const int iy = int(cell / std::size_t(h.bins));
            const std::uint64_t c = h.counts[cell];
            cl.count += c;
            ++cl.bins;
            sx += double(c) * h.center(ix);
            sy += double(c) * h.center(iy);
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int jx = ix + dx, jy = iy + dy;
                    if (jx < 0 || jy < 0 || jx >= h.bins || jy >= h.bins) continue;
                    const std::size_t j = std::size_t(jy) * h.bins + jx;
                    if (!seen[j] && double(h.counts[j]) >= cut) {
                        seen[j] = 1;
                        stack.push_back(j);
                    }
                }
        }
        if (cl.bins < opts.min_bins || cl.count == 0) continue;
        cl.ci = sx / double(cl.count);
        cl.cq = sy / double(cl.count);
        double srr = 0;
        for (std::size_t cell : member) {
            const int ix = int(cell % std::size_t(h.bins));
            const int iy = int(cell / std::size_t(h.bins));
            const double dx = h.center(ix) - cl.ci;
            const double dy = h.center(iy) - cl.cq;
            srr += double(h.counts[cell]) * (dx * dx + dy * dy);
        }
        cl.rms_radius = std::sqrt(srr / double(cl.count));
        cl.weight = double(cl.count) / double(h.total);
        rep.clusters.push_back(cl);
    }
    if (rep.clusters.empty())
        throw NoClusters("detect_clusters: no component above threshold survives the size floor");

    std::sort(rep.clusters.begin(), rep.clusters.end(),
              [](const Cluster& a, const Cluster& b) { return a.count > b.count; });
    for (const Cluster& c : rep.clusters)
        if (c.radius() <= rep.central_radius) rep.central_present = true;

    std::vector<double> angles;
    for (const Cluster& c : rep.clusters)
        if (c.radius() > rep.central_radius) angles.push_back(wrap_angle(c.angle()));
    std::sort(angles.begin(), angles.end());
    if (angles.size() >= 2) {
        for (std::size_t k = 0; k + 1 < angles.size(); ++k)
            rep.angular_spacings.push_back(angles[k + 1] - angles[k]);
        rep.angular_spacings.push_back(angles.front() + 2 * M_PI - angles.back());
        std::sort(rep.angular_spacings.begin(), rep.angular_spacings.end());
    }
    return rep;
}

inline ClusterReport detect_clusters(const Histogram2D& h, double threshold_fraction) {
    ClusterOptions opts;
    opts.threshold_fraction = threshold_fraction;
    return detect_clusters(h, opts);
}

struct MultipletMetrics {
    double spacing_error = 0; // max |gap - 2*pi/n|, radians
    double radius_spread = 0; // (max - min) / mean centroid radius
    double weight_spread = 0; // (max - min) / mean cluster weight
};

inline MultipletMetrics multiplet_symmetry_metric(const ClusterReport& rep, int n) {
    const auto members = rep.non_central();
    if (int(members.size()) != n)
        throw WrongMultiplicity("multiplet_symmetry_metric: found " +
                                std::to_string(members.size()) + " non-central clusters, want " +
                                std::to_string(n));
    MultipletMetrics mm;
    for (double gap : rep.angular_spacings)
        mm.spacing_error = std::max(mm.spacing_error, std::abs(gap - 2 * M_PI / n));
    auto spread = [](const std::vector<double>& v) {
        const double lo = *std::min_element(v.begin(), v.end());
        const double hi = *std::max_element(v.begin(), v.end());
        double mean = 0;
        for (double x : v) mean += x;
        mean /= double(v.size());
        return mean > 0 ? (hi - lo) / mean : 0.0;
    };
    std::vector<double> radii, weights;
    for (const Cluster* c : members) {
        radii.push_back(c->radius());
        weights.push_back(c->weight);
    }
    mm.radius_spread = spread(radii);
    mm.weight_spread = spread(weights);
    return mm;
}

// Histogram range: 1.5x the largest stable-state output radius, with a floor
// covering the noise blob around the origin.
inline double auto_histogram_extent(const std::vector<FixedPoint>& fixed_points, double gain,
                                    double gamma1, const NoiseConfig& noise) {
    const double out_scale = gain * std::sqrt(2 * gamma1);
    double rmax = 0;
    for (const FixedPoint& fp : fixed_points)
        if (fp.stability == Stability::stable) rmax = std::max(rmax, fp.r);
    const double blob =
        out_scale * noise.noise_scale * std::sqrt(noise.n_th + 0.5) + noise.measurement_sigma;
    return std::max({1.5 * out_scale * rmax, 6 * blob, 1e-6});
}

struct ProbeScanOptions {
    std::vector<double> amplitudes; // non-decreasing probe strengths, >= 0
    double detuning = 0;
    double probe_phase = 0;
    EnsembleOptions sim;
    double gain = 1;
    double hist_extent = 0; // 0 = auto
    int hist_bins = 101;
    ClusterOptions cluster;
};

struct ProbePoint {
    double amplitude = 0;
    std::vector<std::uint64_t> occupancy; // samples nearest each reference state
    double asymmetry = 0;                 // 1 - min/max occupancy
    std::vector<double> angular_extent;   // circular std of sample phases per state
    double mean_angular_extent = 0;       // occupancy-weighted
    ClusterReport report;                 // clusters of the IQ histogram
    Histogram2D histogram;
};

struct ProbeScan {
    std::vector<Complex> reference; // stable multiplet of the unprobed model, by phase
    std::vector<ProbePoint> points;
};

// Occupancy and azimuthal spread versus probe amplitude, always measured
// against the unprobed multiplet so locking and crescent deformation show up
// as asymmetry growth and extent growth.
inline ProbeScan probe_response_scan(const RwaModel& base, const NoiseConfig& noise,
                                     const ProbeScanOptions& opts) {
    if (opts.amplitudes.empty())
        throw InvalidParameter("probe_response_scan: need >= 1 probe amplitude");
    for (std::size_t k = 0; k < opts.amplitudes.size(); ++k) {
        if (!(opts.amplitudes[k] >= 0))
            throw InvalidParameter("probe_response_scan: amplitudes must be >= 0");
        if (k && opts.amplitudes[k] < opts.amplitudes[k - 1])
            throw InvalidParameter("probe_response_scan: amplitudes must be non-decreasing");
    }

    RwaModel unprobed = base;
    unprobed.probe.reset();
    std::vector<FixedPoint> fps = find_fixed_points(unprobed);

    ProbeScan scan;
    std::vector<FixedPoint> multiplet;
    for (const FixedPoint& fp : fps)
        if (fp.family > 0 && fp.stability == Stability::stable) multiplet.push_back(fp);
    std::sort(multiplet.begin(), multiplet.end(),
              [](const FixedPoint& a, const FixedPoint& b) { return a.theta < b.theta; });
    if (multiplet.empty())
        throw InvalidParameter("probe_response_scan: model has no stable multiplet");
    for (const FixedPoint& fp : multiplet) scan.reference.push_back(fp.a);

    const double extent = opts.hist_extent > 0
                              ? opts.hist_extent
                              : auto_histogram_extent(fps, opts.gain, base.gamma1, noise);

    for (double amp : opts.amplitudes) {
        RwaModel m = unprobed;
        if (amp > 0) {
            ProbeConfig probe;
            probe.amplitude = std::polar(amp, opts.probe_phase);
            probe.detuning = opts.detuning;
            m.probe = probe;
        }
        const EnsembleResult ens = simulate_ensemble(m, noise, opts.sim);

        ProbePoint pt;
        pt.amplitude = amp;
        pt.occupancy.assign(scan.reference.size(), 0);
        std::vector<Complex> phase_sum(scan.reference.size(), 0);
        for (const auto& tr : ens.trajectories)
            for (Complex a : tr) {
                std::size_t best = 0;
                double bd = std::abs(a - scan.reference[0]);
                for (std::size_t k = 1; k < scan.reference.size(); ++k) {
                    const double d = std::abs(a - scan.reference[k]);
                    if (d < bd) {
                        bd = d;
                        best = k;
                    }
                }
                ++pt.occupancy[best];
                const double r = std::abs(a);
                if (r > 0) phase_sum[best] += a / r;
            }

        const std::uint64_t occ_min =
            *std::min_element(pt.occupancy.begin(), pt.occupancy.end());
        const std::uint64_t occ_max =
            *std::max_element(pt.occupancy.begin(), pt.occupancy.end());
        pt.asymmetry = occ_max > 0 ? 1.0 - double(occ_min) / double(occ_max) : 0.0;

        pt.angular_extent.assign(scan.reference.size(), 0.0);
        double wsum = 0, esum = 0;
        for (std::size_t k = 0; k < scan.reference.size(); ++k) {
            if (pt.occupancy[k] == 0) continue;
            double resultant = std::abs(phase_sum[k]) / double(pt.occupancy[k]);
            resultant = std::min(resultant, 1.0);
            pt.angular_extent[k] =
                resultant < 1e-12 ? std::sqrt(-2 * std::log(1e-12))
                                  : std::sqrt(-2 * std::log(resultant));
            esum += double(pt.occupancy[k]) * pt.angular_extent[k];
            wsum += double(pt.occupancy[k]);
        }
        pt.mean_angular_extent = wsum > 0 ? esum / wsum : 0.0;

        pt.histogram = accumulate_histogram(output_samples(ens, m, noise, opts.gain), extent,
                                            opts.hist_bins);
        try {
            pt.report = detect_clusters(pt.histogram, opts.cluster);
        } catch (const NoClusters&) {
            pt.report = ClusterReport{};
        }
        scan.points.push_back(std::move(pt));
    }
    return scan;
}

enum class RegionType : int { ground_only = 0, coexistence = 1, excited_only = 2, none_stable = 3 };

inline const char* to_string(RegionType r) {
    switch (r) {
        case RegionType::ground_only: return "ground_only";
        case RegionType::coexistence: return "coexistence";
        case RegionType::excited_only: return "excited_only";
        case RegionType::none_stable: return "none_stable";
    }
    return "?";
}

struct SweepResult {
    std::vector<double> eps_values;
    std::vector<double> delta_values;
    std::vector<int> region;   // ieps * delta_values.size() + idelta, RegionType codes
    std::vector<int> n_stable; // stable fixed points per cell

    int region_at(std::size_t ieps, std::size_t idelta) const {
        return region[ieps * delta_values.size() + idelta];
    }
};

// Stability diagram over pump strength and detuning; every cell runs the
// fixed-point pipeline on a copy of the base model.
inline SweepResult sweep_pump_detuning(const RwaModel& base, std::vector<double> eps_values,
                                       std::vector<double> delta_values) {
    if (eps_values.empty() || delta_values.empty())
        throw InvalidParameter("sweep_pump_detuning: grids must be non-empty");
    for (double e : eps_values)
        if (!(e >= 0)) throw InvalidParameter("sweep_pump_detuning: pump grid must be >= 0");

    SweepResult res;
    res.eps_values = std::move(eps_values);
    res.delta_values = std::move(delta_values);
    const std::size_t cells = res.eps_values.size() * res.delta_values.size();
    res.region.assign(cells, 0);
    res.n_stable.assign(cells, 0);
    const double phase = std::arg(base.epsilon);

    parallel_for(cells, [&](std::size_t cell) {
        const std::size_t ieps = cell / res.delta_values.size();
        const std::size_t idelta = cell % res.delta_values.size();
        RwaModel m = base;
        m.probe.reset();
        m.epsilon = std::polar(res.eps_values[ieps], phase);
        m.delta = res.delta_values[idelta];
        bool ground = false, excited = false;
        int stable = 0;
        for (const FixedPoint& fp : find_fixed_points(m)) {
            if (fp.stability != Stability::stable) continue;
            ++stable;
            (fp.family == 0 ? ground : excited) = true;
        }
        RegionType region = RegionType::none_stable;
        if (ground && excited) region = RegionType::coexistence;
        else if (ground) region = RegionType::ground_only;
        else if (excited) region = RegionType::excited_only;
        res.region[cell] = int(region);
        res.n_stable[cell] = stable;
    });
    return res;
}

} // namespace pmsim
