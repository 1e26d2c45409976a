#pragma once

// Command dispatch: ingest configuration, execute a module pipeline, emit
// CSV/grid files plus a manifest that reproduces the run bit-for-bit.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "pmsim/analysis.hpp"
#include "pmsim/config.hpp"
#include "pmsim/device.hpp"
#include "pmsim/dynamics.hpp"
#include "pmsim/errors.hpp"
#include "pmsim/histogram.hpp"
#include "pmsim/io_util.hpp"
#include "pmsim/rwa.hpp"
#include "pmsim/stochastic.hpp"

namespace pmsim {

struct CliOptions {
    std::string command;
    std::optional<std::string> config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
};

inline CliOptions parse_cli(const std::vector<std::string>& args) {
    if (args.empty()) throw CommandUnknown("no command given");
    CliOptions opt;
    opt.command = args[0];
    for (std::size_t i = 1; i < args.size(); ++i) {
        const std::string& arg = args[i];
        auto value = [&]() -> const std::string& {
            if (i + 1 >= args.size())
                throw ConfigInvalid("flag " + arg + " expects a value");
            return args[++i];
        };
        if (arg == "--config") {
            opt.config_path = value();
        } else if (arg == "--set") {
            const std::string& kv = value();
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw ConfigInvalid("--set expects key=value, got '" + kv + "'");
            opt.overrides.emplace_back(trim(kv.substr(0, eq)), kv.substr(eq + 1));
        } else if (arg == "--out") {
            opt.out_dir = value();
        } else if (arg == "--seed") {
            opt.seed = std::uint64_t(parse_int(value()));
        } else {
            throw ConfigInvalid("unknown flag '" + arg + "'");
        }
    }
    return opt;
}

namespace detail {

inline std::vector<double> linspace(double lo, double hi, int points) {
    std::vector<double> v;
    v.reserve(std::size_t(points));
    if (points == 1) {
        v.push_back(lo);
        return v;
    }
    for (int i = 0; i < points; ++i) v.push_back(lo + (hi - lo) * i / (points - 1));
    return v;
}

inline double auto_capture_radius(const std::vector<FixedPoint>& states,
                                  const NoiseConfig& noise) {
    if (states.size() >= 2) {
        double dmin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < states.size(); ++i)
            for (std::size_t j = i + 1; j < states.size(); ++j)
                dmin = std::min(dmin, std::abs(states[i].a - states[j].a));
        return 0.35 * dmin;
    }
    return 3 * noise.noise_scale * std::sqrt(noise.n_th + 0.5) +
           1e-3 * (1 + std::abs(states[0].a));
}

inline EnsembleOptions ensemble_options(const RunConfig& rc) {
    EnsembleOptions opts;
    opts.n_traj = rc.sim.n_traj;
    opts.t_total = rc.sim.t_total;
    opts.dt = rc.sim.dt;
    opts.t_transient = rc.sim.t_transient;
    opts.stride = rc.sim.stride;
    opts.kick_amplitude = rc.sim.kick_amplitude;
    return opts;
}

inline std::vector<FixedPoint> stable_states(const RwaModel& model) {
    RwaModel unprobed = model;
    unprobed.probe.reset();
    std::vector<FixedPoint> states;
    for (const FixedPoint& fp : find_fixed_points(unprobed))
        if (fp.stability == Stability::stable) states.push_back(fp);
    return states;
}

class Emitter {
public:
    Emitter(std::filesystem::path dir, std::ostream& out) : dir_(std::move(dir)), out_(out) {}

    void write(const std::string& name, const std::string& text) {
        const std::filesystem::path path = dir_ / name;
        write_text_file(path, text);
        out_ << "wrote " << path.string() << "\n";
    }

private:
    std::filesystem::path dir_;
    std::ostream& out_;
};

inline void cmd_spectrum(const RunConfig& rc, Emitter& em) {
    const ModeSpectrum spectrum = build_spectrum(rc);
    std::string csv = "n,kd,omega_ghz,beta,residual\n";
    for (const Mode& m : spectrum.modes)
        csv += std::to_string(m.index) + "," + fmt_double(m.kd) + "," +
               fmt_double(m.omega / kGhzToRadUs) + "," + fmt_double(m.beta) + "," +
               fmt_double(m.residual) + "\n";
    em.write("modes.csv", csv);
}

inline void cmd_coeffs(const RunConfig& rc, Emitter& em) {
    const ModeSpectrum spectrum = build_spectrum(rc);
    const RwaModel model = build_model(rc, spectrum);
    std::string csv = "name,value\n";
    auto row = [&](const std::string& name, const std::string& value) {
        csv += name + "," + value + "\n";
    };
    row("n", std::to_string(model.n));
    row("f1_ghz", fmt_double(spectrum.modes.front().omega / kGhzToRadUs));
    row("beta1", fmt_double(spectrum.modes.front().beta));
    row("participation_gamma", fmt_double(spectrum.gamma));
    row("gamma1_rad_us", fmt_double(model.gamma1));
    row("delta_rad_us", fmt_double(model.delta));
    row("alpha_rad_us", fmt_double(model.alpha));
    row("epsilon_re_rad_us", fmt_double(model.epsilon.real()));
    row("epsilon_im_rad_us", fmt_double(model.epsilon.imag()));
    row("epsilon_abs_rad_us", fmt_double(std::abs(model.epsilon)));
    row("epsilon_arg_rad", fmt_double(std::arg(model.epsilon)));
    row("epsilon_abs_mhz", fmt_double(std::abs(model.epsilon) / kMhzToRadUs));
    em.write("coeffs.csv", csv);
}

inline std::string fixed_points_csv(const std::vector<FixedPoint>& fps) {
    std::string csv = "family,member,re,im,r,theta,stability,residual\n";
    for (const FixedPoint& fp : fps)
        csv += std::to_string(fp.family) + "," + std::to_string(fp.member) + "," +
               fmt_double(fp.a.real()) + "," + fmt_double(fp.a.imag()) + "," +
               fmt_double(fp.r) + "," + fmt_double(fp.theta) + "," + to_string(fp.stability) +
               "," + fmt_double(fp.residual) + "\n";
    return csv;
}

inline void cmd_fixed_points(const RunConfig& rc, Emitter& em) {
    const RwaModel model = build_model(rc, build_spectrum(rc));
    em.write("fixed_points.csv", fixed_points_csv(find_fixed_points(model)));
}

inline void cmd_basins(const RunConfig& rc, Emitter& em) {
    const RwaModel model = build_model(rc, build_spectrum(rc));
    double extent = rc.sim.basin_extent;
    if (extent <= 0) {
        double rmax = 0;
        for (const FixedPoint& fp : find_fixed_points(model)) rmax = std::max(rmax, fp.r);
        extent = rmax > 0 ? 1.5 * rmax : 1.0;
    }
    const BasinGrid grid = basin_sample(model, extent, rc.sim.basin_resolution, rc.sim.tol);

    std::string att = "label,re,im,r,theta,stability\n";
    for (std::size_t k = 0; k < grid.attractors.size(); ++k) {
        const FixedPoint& fp = grid.attractors[k];
        att += std::to_string(k) + "," + fmt_double(fp.a.real()) + "," +
               fmt_double(fp.a.imag()) + "," + fmt_double(fp.r) + "," + fmt_double(fp.theta) +
               "," + to_string(fp.stability) + "\n";
    }
    em.write("attractors.csv", att);

    std::string csv = "ix,iy,x,y,label\n";
    for (int iy = 0; iy < grid.resolution; ++iy)
        for (int ix = 0; ix < grid.resolution; ++ix) {
            const double x = -grid.extent + (2 * grid.extent) * (ix + 0.5) / grid.resolution;
            const double y = -grid.extent + (2 * grid.extent) * (iy + 0.5) / grid.resolution;
            csv += std::to_string(ix) + "," + std::to_string(iy) + "," + fmt_double(x) + "," +
                   fmt_double(y) + "," +
                   std::to_string(grid.labels[std::size_t(iy) * grid.resolution + ix]) + "\n";
        }
    em.write("basins.csv", csv);
}

struct SimulationData {
    RwaModel model;
    EnsembleResult ensemble;
    std::vector<Complex> iq;
    std::vector<FixedPoint> states;
    double capture_radius = 0;
    Histogram2D histogram;
};

inline SimulationData run_simulation(const RunConfig& rc) {
    SimulationData data;
    data.model = build_model(rc, build_spectrum(rc));
    data.ensemble = simulate_ensemble(data.model, rc.noise, ensemble_options(rc));
    data.iq = output_samples(data.ensemble, data.model, rc.noise, rc.gain);
    data.states = stable_states(data.model);
    if (!data.states.empty())
        data.capture_radius = rc.sim.capture_radius > 0
                                  ? rc.sim.capture_radius
                                  : auto_capture_radius(data.states, rc.noise);
    double extent = rc.sim.hist_extent;
    if (extent <= 0) {
        RwaModel unprobed = data.model;
        unprobed.probe.reset();
        extent = auto_histogram_extent(find_fixed_points(unprobed), rc.gain,
                                       data.model.gamma1, rc.noise);
    }
    data.histogram = accumulate_histogram(data.iq, extent, rc.sim.hist_bins);
    return data;
}

inline void cmd_simulate(const RunConfig& rc, Emitter& em) {
    const SimulationData data = run_simulation(rc);
    em.write("histogram.txt", to_text(data.histogram));

    if (!data.states.empty()) {
        std::vector<Complex> state_pos;
        std::string st = "state,re,im,r,theta,stability\n";
        for (std::size_t k = 0; k < data.states.size(); ++k) {
            const FixedPoint& fp = data.states[k];
            state_pos.push_back(fp.a);
            st += std::to_string(k) + "," + fmt_double(fp.a.real()) + "," +
                  fmt_double(fp.a.imag()) + "," + fmt_double(fp.r) + "," +
                  fmt_double(fp.theta) + "," + to_string(fp.stability) + "\n";
        }
        em.write("switching_states.csv", st);

        const SwitchingStats stats =
            ensemble_switching(data.ensemble, state_pos, data.capture_radius);
        std::string tr = "from,to,count\n";
        for (std::size_t i = 0; i < stats.n_states(); ++i)
            for (std::size_t j = 0; j < stats.n_states(); ++j)
                tr += std::to_string(i) + "," + std::to_string(j) + "," +
                      std::to_string(stats.transitions[i][j]) + "\n";
        em.write("transitions.csv", tr);

        std::string dw = "state,dwell_us\n";
        for (std::size_t s = 0; s < stats.n_states(); ++s)
            for (double d : stats.dwell_times[s])
                dw += std::to_string(s) + "," + fmt_double(d) + "\n";
        em.write("dwell_times.csv", dw);
    }

    if (rc.write_samples) {
        std::vector<Complex> state_pos;
        for (const FixedPoint& fp : data.states) state_pos.push_back(fp.a);
        std::string csv = "t_us,i,q,state\n";
        std::size_t flat = 0;
        for (const auto& traj : data.ensemble.trajectories) {
            for (std::size_t j = 0; j < traj.size(); ++j, ++flat) {
                const double t = data.ensemble.t_first_sample + double(j) * data.ensemble.sample_dt;
                int label = -1;
                double best = data.capture_radius;
                for (std::size_t k = 0; k < state_pos.size(); ++k) {
                    const double d = std::abs(traj[j] - state_pos[k]);
                    if (d <= best) {
                        best = d;
                        label = int(k);
                    }
                }
                csv += fmt_double(t) + "," + fmt_double(data.iq[flat].real()) + "," +
                       fmt_double(data.iq[flat].imag()) + "," + std::to_string(label) + "\n";
            }
        }
        em.write("samples.csv", csv);
    }
}

inline void cmd_histogram(const RunConfig& rc, Emitter& em) {
    const SimulationData data = run_simulation(rc);
    em.write("histogram.txt", to_text(data.histogram));

    const ClusterReport rep = detect_clusters(data.histogram, ClusterOptions{});
    std::string cs = "cluster,ci,cq,count,weight,rms_radius,radius,angle\n";
    for (std::size_t k = 0; k < rep.clusters.size(); ++k) {
        const Cluster& c = rep.clusters[k];
        cs += std::to_string(k) + "," + fmt_double(c.ci) + "," + fmt_double(c.cq) + "," +
              std::to_string(c.count) + "," + fmt_double(c.weight) + "," +
              fmt_double(c.rms_radius) + "," + fmt_double(c.radius()) + "," +
              fmt_double(c.angle()) + "\n";
    }
    em.write("clusters.csv", cs);

    std::string ms = "name,value\n";
    ms += "n_clusters," + std::to_string(rep.clusters.size()) + "\n";
    ms += "n_non_central," + std::to_string(rep.non_central().size()) + "\n";
    ms += std::string("central_present,") + (rep.central_present ? "1" : "0") + "\n";
    if (int(rep.non_central().size()) == rc.pump.n) {
        const MultipletMetrics mm = multiplet_symmetry_metric(rep, rc.pump.n);
        ms += "spacing_error_rad," + fmt_double(mm.spacing_error) + "\n";
        ms += "spacing_error_deg," + fmt_double(mm.spacing_error * 180 / M_PI) + "\n";
        ms += "radius_spread," + fmt_double(mm.radius_spread) + "\n";
        ms += "weight_spread," + fmt_double(mm.weight_spread) + "\n";
    }
    em.write("metrics.csv", ms);
}

inline void cmd_sweep(const RunConfig& rc, Emitter& em) {
    const ModeSpectrum spectrum = build_spectrum(rc);
    RwaModel base;
    base.n = rc.pump.n;
    base.delta = rc.pump.delta;
    base.gamma1 = rc.gamma1;
    base.alpha = duffing_coefficient(rc.device, spectrum);
    base.epsilon = std::polar(1.0, rc.pump.pump_phase);

    const std::vector<double> eps =
        linspace(rc.sweep.eps_min, rc.sweep.eps_max, rc.sweep.eps_points);
    const std::vector<double> del =
        linspace(rc.sweep.delta_min, rc.sweep.delta_max, rc.sweep.delta_points);
    const SweepResult res = sweep_pump_detuning(base, eps, del);

    std::string csv = "eps_mhz,delta_mhz,n_stable,region,region_name\n";
    for (std::size_t ie = 0; ie < res.eps_values.size(); ++ie)
        for (std::size_t id = 0; id < res.delta_values.size(); ++id) {
            const std::size_t cell = ie * res.delta_values.size() + id;
            csv += fmt_double(res.eps_values[ie] / kMhzToRadUs) + "," +
                   fmt_double(res.delta_values[id] / kMhzToRadUs) + "," +
                   std::to_string(res.n_stable[cell]) + "," + std::to_string(res.region[cell]) +
                   "," + to_string(RegionType(res.region[cell])) + "\n";
        }
    em.write("sweep.csv", csv);

    std::string grid = "rows=" + std::to_string(res.eps_values.size()) +
                       " cols=" + std::to_string(res.delta_values.size()) +
                       " eps_min_mhz=" + fmt_double(rc.sweep.eps_min / kMhzToRadUs) +
                       " eps_max_mhz=" + fmt_double(rc.sweep.eps_max / kMhzToRadUs) +
                       " delta_min_mhz=" + fmt_double(rc.sweep.delta_min / kMhzToRadUs) +
                       " delta_max_mhz=" + fmt_double(rc.sweep.delta_max / kMhzToRadUs) + "\n";
    for (std::size_t ie = 0; ie < res.eps_values.size(); ++ie) {
        for (std::size_t id = 0; id < res.delta_values.size(); ++id) {
            if (id) grid += ' ';
            grid += std::to_string(res.region[ie * res.delta_values.size() + id]);
        }
        grid += '\n';
    }
    em.write("sweep_grid.txt", grid);
}

inline void cmd_probe_scan(const RunConfig& rc, Emitter& em) {
    RunConfig base_rc = rc;
    base_rc.probe_enabled = false; // the scan supplies the probe
    const RwaModel base = build_model(base_rc, build_spectrum(base_rc));

    ProbeScanOptions opts;
    opts.amplitudes = linspace(rc.probe_scan.amp_min, rc.probe_scan.amp_max,
                               rc.probe_scan.points);
    opts.detuning = rc.probe_scan.detuning;
    opts.probe_phase = rc.probe_scan.phase;
    opts.sim = ensemble_options(rc);
    opts.gain = rc.gain;
    opts.hist_extent = rc.sim.hist_extent;
    opts.hist_bins = rc.sim.hist_bins;
    const ProbeScan scan = probe_response_scan(base, rc.noise, opts);

    std::string ref = "state,re,im,r,theta\n";
    for (std::size_t k = 0; k < scan.reference.size(); ++k)
        ref += std::to_string(k) + "," + fmt_double(scan.reference[k].real()) + "," +
               fmt_double(scan.reference[k].imag()) + "," +
               fmt_double(std::abs(scan.reference[k])) + "," +
               fmt_double(wrap_angle(std::arg(scan.reference[k]))) + "\n";
    em.write("probe_reference.csv", ref);

    std::string csv = "amplitude_mhz,asymmetry,mean_angular_extent_rad,n_clusters";
    for (std::size_t k = 0; k < scan.reference.size(); ++k)
        csv += ",occupancy_" + std::to_string(k);
    for (std::size_t k = 0; k < scan.reference.size(); ++k)
        csv += ",extent_" + std::to_string(k) + "_rad";
    csv += "\n";
    for (const ProbePoint& pt : scan.points) {
        csv += fmt_double(pt.amplitude / kMhzToRadUs) + "," + fmt_double(pt.asymmetry) + "," +
               fmt_double(pt.mean_angular_extent) + "," +
               std::to_string(pt.report.clusters.size());
        for (std::uint64_t occ : pt.occupancy) csv += "," + std::to_string(occ);
        for (double ext : pt.angular_extent) csv += "," + fmt_double(ext);
        csv += "\n";
    }
    em.write("probe_scan.csv", csv);
}

} // namespace detail

inline int run_command(const std::vector<std::string>& args, std::ostream& out,
                       std::ostream& err) {
    try {
        const CliOptions opt = parse_cli(args);
        if (opt.command == "config-template") {
            out << config_template();
            return 0;
        }
        const bool known = opt.command == "spectrum" || opt.command == "coeffs" ||
                           opt.command == "fixed-points" || opt.command == "basins" ||
                           opt.command == "simulate" || opt.command == "histogram" ||
                           opt.command == "sweep" || opt.command == "probe-scan";
        if (!known) throw CommandUnknown("unknown command '" + opt.command + "'");

        Config cfg;
        if (opt.config_path) cfg.apply_text(read_text_file(*opt.config_path));
        for (const auto& [key, value] : opt.overrides) cfg.set(key, value);
        if (opt.out_dir) cfg.set("output.dir", *opt.out_dir);
        if (opt.seed) cfg.set("noise.seed", std::to_string(*opt.seed));

        const RunConfig rc = to_run_config(cfg);
        const std::filesystem::path dir(rc.out_dir);
        std::filesystem::create_directories(dir);
        detail::Emitter em(dir, out);
        em.write("manifest.cfg", cfg.manifest());

        if (opt.command == "spectrum") detail::cmd_spectrum(rc, em);
        else if (opt.command == "coeffs") detail::cmd_coeffs(rc, em);
        else if (opt.command == "fixed-points") detail::cmd_fixed_points(rc, em);
        else if (opt.command == "basins") detail::cmd_basins(rc, em);
        else if (opt.command == "simulate") detail::cmd_simulate(rc, em);
        else if (opt.command == "histogram") detail::cmd_histogram(rc, em);
        else if (opt.command == "sweep") detail::cmd_sweep(rc, em);
        else if (opt.command == "probe-scan") detail::cmd_probe_scan(rc, em);
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace pmsim
