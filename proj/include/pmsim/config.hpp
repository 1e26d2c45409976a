#pragma once

// Line-oriented key = value run configuration with a fixed schema. Values are
// stored in canonical text form, so a dumped manifest reloads to an identical
// configuration. Frequencies are GHz/MHz at this boundary and angular rad/us
// internally.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pmsim/device.hpp"
#include "pmsim/errors.hpp"
#include "pmsim/io_util.hpp"
#include "pmsim/rwa.hpp"
#include "pmsim/stochastic.hpp"

namespace pmsim {

inline constexpr double kGhzToRadUs = 2000 * M_PI; // GHz -> rad/us
inline constexpr double kMhzToRadUs = 2 * M_PI;    // MHz -> rad/us

enum class ConfigKind { real, integer, boolean, text };

struct ConfigEntry {
    const char* key;
    ConfigKind kind;
    const char* value; // canonical default
    const char* comment;
};

inline const std::vector<ConfigEntry>& config_schema() {
    static const std::vector<ConfigEntry> schema = {
        {"device.e_plus_ghz", ConfigKind::real, "50", "SQUID Josephson energy sum E+/h, GHz"},
        {"device.e_minus_ghz", ConfigKind::real, "1",
         "junction-asymmetry energy E-/h, GHz (0 = symmetric SQUID)"},
        {"device.z0_ohm", ConfigKind::real, "50", "resonator characteristic impedance, ohm"},
        {"device.el_cav_ghz", ConfigKind::real, "2.7", "cavity inductive energy E_Lcav/h, GHz"},
        {"device.static_flux", ConfigKind::real, "2",
         "static flux bias F = 2*pi*Phi_dc/Phi_0, radians"},
        {"device.n_modes", ConfigKind::integer, "4", "number of eigenmodes to solve"},
        {"device.frequency_scale_ghz", ConfigKind::real, "0",
         "scale mapping kd to frequency, GHz; 0 = derive from target_f1_ghz"},
        {"device.target_f1_ghz", ConfigKind::real, "5",
         "fundamental frequency fixing the scale when frequency_scale_ghz = 0"},

        {"mode.gamma1_mhz", ConfigKind::real, "0.3", "fundamental linewidth Gamma1/2pi, MHz"},

        {"pump.n", ConfigKind::integer, "3", "period multiplication order, 2..5"},
        {"pump.delta_f0", ConfigKind::real, "0.05",
         "flux modulation amplitude 2*pi*Phi_ac/Phi_0, radians"},
        {"pump.phase", ConfigKind::real, "0", "pump phase, radians"},
        {"pump.delta_mhz", ConfigKind::real, "-0.3", "detuning (omega - omega_1)/2pi, MHz"},
        {"pump.flux_factor_sin", ConfigKind::boolean, "false",
         "use sin(F/2) instead of cos(F/2) in the even pump coefficient"},

        {"higher_mode.enabled", ConfigKind::boolean, "true",
         "include the mode near n*omega in odd-order pump coefficients"},
        {"higher_mode.source", ConfigKind::text, "drive",
         "spectator response: 'drive' (steady-state susceptibility) or 'amplitude'"},
        {"higher_mode.amplitude_re", ConfigKind::real, "0",
         "fixed spectator amplitude, real part (source = amplitude)"},
        {"higher_mode.amplitude_im", ConfigKind::real, "0",
         "fixed spectator amplitude, imaginary part"},
        {"higher_mode.drive_amplitude_mhz", ConfigKind::real, "1",
         "spectator drive strength, MHz (source = drive)"},
        {"higher_mode.drive_detuning_mhz", ConfigKind::real, "5",
         "spectator detuning n*omega - omega_mode, MHz"},
        {"higher_mode.drive_damping_mhz", ConfigKind::real, "2", "spectator linewidth, MHz"},

        {"probe.enabled", ConfigKind::boolean, "false", "add a coherent probe drive"},
        {"probe.amplitude_mhz", ConfigKind::real, "0", "probe strength, MHz"},
        {"probe.phase", ConfigKind::real, "0", "probe phase, radians"},
        {"probe.detuning_mhz", ConfigKind::real, "0",
         "probe detuning from the measurement frame, MHz"},

        {"noise.n_th", ConfigKind::real, "0", "thermal occupation of the mode bath"},
        {"noise.seed", ConfigKind::integer, "12345", "master seed for all random streams"},
        {"noise.measurement_sigma", ConfigKind::real, "3",
         "added readout noise per quadrature, output units"},
        {"noise.noise_scale", ConfigKind::real, "1",
         "scales the Langevin noise amplitude; 0 = deterministic dynamics"},

        {"readout.gain", ConfigKind::real, "1", "output gain g in I + iQ = g sqrt(2 Gamma1) a"},

        {"simulation.n_traj", ConfigKind::integer, "400", "trajectories per ensemble"},
        {"simulation.dt_us", ConfigKind::real, "0.002", "Euler-Maruyama step, microseconds"},
        {"simulation.t_total_us", ConfigKind::real, "60", "trajectory length, microseconds"},
        {"simulation.t_transient_us", ConfigKind::real, "30",
         "samples before this time are discarded"},
        {"simulation.stride", ConfigKind::integer, "25", "record every stride-th step"},
        {"simulation.kick_amplitude", ConfigKind::real, "32",
         "initial |a| per trajectory, phase uniform; 0 starts from rest"},
        {"simulation.tol", ConfigKind::real, "1e-09", "adaptive integrator tolerance"},
        {"simulation.hist_bins", ConfigKind::integer, "101", "histogram bins per axis"},
        {"simulation.hist_extent", ConfigKind::real, "0",
         "histogram half-range; 0 = 1.5x the largest stable output radius"},
        {"simulation.basin_extent", ConfigKind::real, "0",
         "basin grid half-range; 0 = 1.5x the outermost fixed point"},
        {"simulation.basin_resolution", ConfigKind::integer, "64", "basin grid cells per axis"},
        {"simulation.capture_radius", ConfigKind::real, "0",
         "switching-state capture radius; 0 = 0.35x the closest state spacing"},

        {"sweep.eps_min_mhz", ConfigKind::real, "0", "pump-coefficient grid start |eps|/2pi, MHz"},
        {"sweep.eps_max_mhz", ConfigKind::real, "0.06", "pump-coefficient grid end, MHz"},
        {"sweep.eps_points", ConfigKind::integer, "13", "pump grid points"},
        {"sweep.delta_min_mhz", ConfigKind::real, "-0.9", "detuning grid start, MHz"},
        {"sweep.delta_max_mhz", ConfigKind::real, "0.3", "detuning grid end, MHz"},
        {"sweep.delta_points", ConfigKind::integer, "13", "detuning grid points"},

        {"probe_scan.amp_min_mhz", ConfigKind::real, "0", "probe amplitude scan start, MHz"},
        {"probe_scan.amp_max_mhz", ConfigKind::real, "0.25", "probe amplitude scan end, MHz"},
        {"probe_scan.points", ConfigKind::integer, "6", "scan points"},
        {"probe_scan.detuning_mhz", ConfigKind::real, "0",
         "probe detuning for the scan, MHz (0 = locking, nonzero = crescents)"},
        {"probe_scan.phase", ConfigKind::real, "0", "probe phase for the scan, radians"},

        {"output.dir", ConfigKind::text, "out", "directory for emitted files"},
        {"output.write_samples", ConfigKind::boolean, "false",
         "write per-sample CSV (t, I, Q, state) from simulate"},
    };
    return schema;
}

class Config {
public:
    Config() {
        for (const ConfigEntry& e : config_schema()) kv_[e.key] = e.value;
    }

    static const ConfigEntry& entry(const std::string& key) {
        for (const ConfigEntry& e : config_schema())
            if (key == e.key) return e;
        throw ConfigInvalid("unknown configuration key '" + key + "'");
    }

    // Stores the canonical form; rejects unknown keys and malformed values.
    void set(const std::string& key, const std::string& raw) {
        const ConfigEntry& e = entry(key);
        const std::string value = trim(raw);
        try {
            switch (e.kind) {
                case ConfigKind::real:
                    kv_[key] = fmt_double(parse_double(value));
                    break;
                case ConfigKind::integer:
                    kv_[key] = std::to_string(parse_int(value));
                    break;
                case ConfigKind::boolean:
                    if (value != "true" && value != "false")
                        throw IoFailure("expected true or false");
                    kv_[key] = value;
                    break;
                case ConfigKind::text:
                    if (value.empty()) throw IoFailure("expected a non-empty value");
                    kv_[key] = value;
                    break;
            }
        } catch (const IoFailure& err) {
            throw ConfigInvalid("key '" + key + "': bad value '" + value + "' (" + err.what() +
                                ")");
        }
    }

    void apply_text(const std::string& text) {
        const std::vector<std::string> lines = split(text, '\n');
        for (std::size_t ln = 0; ln < lines.size(); ++ln) {
            std::string line = lines[ln];
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigInvalid("line " + std::to_string(ln + 1) +
                                    ": expected key = value, got '" + line + "'");
            try {
                set(trim(line.substr(0, eq)), line.substr(eq + 1));
            } catch (const ConfigInvalid& err) {
                throw ConfigInvalid("line " + std::to_string(ln + 1) + ": " + err.what());
            }
        }
    }

    const std::string& get(const std::string& key) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) throw ConfigInvalid("unknown configuration key '" + key + "'");
        return it->second;
    }
    double get_double(const std::string& key) const { return parse_double(get(key)); }
    long long get_int(const std::string& key) const { return parse_int(get(key)); }
    bool get_bool(const std::string& key) const { return get(key) == "true"; }

    // Sorted canonical key=value dump; reloading it reproduces this Config.
    std::string manifest() const {
        std::string out;
        for (const auto& [key, value] : kv_) out += key + " = " + value + "\n";
        return out;
    }

private:
    std::map<std::string, std::string> kv_;
};

inline std::string config_template() {
    std::string out = "# run configuration: key = value, '#' starts a comment\n";
    std::string section;
    for (const ConfigEntry& e : config_schema()) {
        const std::string key(e.key);
        const std::string sec = key.substr(0, key.find('.'));
        if (sec != section) {
            out += "\n";
            section = sec;
        }
        out += key + " = " + e.value;
        if (e.comment && *e.comment) out += std::string("  # ") + e.comment;
        out += "\n";
    }
    return out;
}

struct SimulationParams {
    int n_traj = 0;
    double dt = 0;
    double t_total = 0;
    double t_transient = 0;
    int stride = 1;
    double kick_amplitude = 0;
    double tol = 1e-9;
    int hist_bins = 101;
    double hist_extent = 0;
    double basin_extent = 0;
    int basin_resolution = 0;
    double capture_radius = 0;
};

struct SweepParams {
    double eps_min = 0, eps_max = 0;
    int eps_points = 0;
    double delta_min = 0, delta_max = 0;
    int delta_points = 0;
};

struct ProbeScanParams {
    double amp_min = 0, amp_max = 0;
    int points = 0;
    double detuning = 0;
    double phase = 0;
};

struct RunConfig {
    DeviceParams device;        // energies in rad/us
    double frequency_scale = 0; // rad/us, 0 = derive from target_f1
    double target_f1 = 0;       // rad/us
    double gamma1 = 0;          // rad/us
    PumpConfig pump;            // delta in rad/us
    bool higher_enabled = false;
    HigherModeConfig higher_mode;
    bool probe_enabled = false;
    double probe_amplitude = 0; // rad/us
    double probe_phase = 0;
    double probe_detuning = 0; // rad/us
    NoiseConfig noise;
    double gain = 1;
    SimulationParams sim;
    SweepParams sweep;
    ProbeScanParams probe_scan;
    std::string out_dir;
    bool write_samples = false;

    std::optional<HigherModeConfig> higher() const {
        if (!higher_enabled) return std::nullopt;
        return higher_mode;
    }
    std::optional<ProbeConfig> probe() const {
        if (!probe_enabled) return std::nullopt;
        ProbeConfig p;
        p.amplitude = std::polar(probe_amplitude, probe_phase);
        p.detuning = probe_detuning;
        return p;
    }
};

// Converts boundary units to internal angular frequencies and validates every
// referenced section before any computation starts.
inline RunConfig to_run_config(const Config& c) {
    RunConfig rc;
    rc.device.e_plus = c.get_double("device.e_plus_ghz") * kGhzToRadUs;
    rc.device.e_minus = c.get_double("device.e_minus_ghz") * kGhzToRadUs;
    rc.device.z0 = c.get_double("device.z0_ohm");
    rc.device.el_cav = c.get_double("device.el_cav_ghz") * kGhzToRadUs;
    rc.device.static_flux = c.get_double("device.static_flux");
    rc.device.n_modes = int(c.get_int("device.n_modes"));
    rc.frequency_scale = c.get_double("device.frequency_scale_ghz") * kGhzToRadUs;
    rc.target_f1 = c.get_double("device.target_f1_ghz") * kGhzToRadUs;
    try {
        rc.device.validate();
    } catch (const Error& err) {
        throw ConfigInvalid(std::string("device: ") + err.what());
    }
    if (!(rc.frequency_scale > 0) && !(rc.target_f1 > 0))
        throw ConfigInvalid("device: one of frequency_scale_ghz or target_f1_ghz must be > 0");

    rc.gamma1 = c.get_double("mode.gamma1_mhz") * kMhzToRadUs;
    if (!(rc.gamma1 > 0)) throw ConfigInvalid("mode.gamma1_mhz must be > 0");

    rc.pump.n = int(c.get_int("pump.n"));
    rc.pump.delta_f0 = c.get_double("pump.delta_f0");
    rc.pump.pump_phase = c.get_double("pump.phase");
    rc.pump.delta = c.get_double("pump.delta_mhz") * kMhzToRadUs;
    rc.pump.flux_factor_sin = c.get_bool("pump.flux_factor_sin");
    try {
        rc.pump.validate();
    } catch (const Error& err) {
        throw ConfigInvalid(std::string("pump: ") + err.what());
    }

    rc.higher_enabled = c.get_bool("higher_mode.enabled");
    if (rc.higher_enabled) {
        const std::string source = c.get("higher_mode.source");
        if (source == "amplitude") {
            rc.higher_mode.amplitude = Complex(c.get_double("higher_mode.amplitude_re"),
                                               c.get_double("higher_mode.amplitude_im"));
        } else if (source == "drive") {
            HigherModeDrive drive;
            drive.amplitude = c.get_double("higher_mode.drive_amplitude_mhz") * kMhzToRadUs;
            drive.detuning = c.get_double("higher_mode.drive_detuning_mhz") * kMhzToRadUs;
            drive.damping = c.get_double("higher_mode.drive_damping_mhz") * kMhzToRadUs;
            if (!(drive.damping > 0))
                throw ConfigInvalid("higher_mode.drive_damping_mhz must be > 0");
            rc.higher_mode.drive = drive;
        } else {
            throw ConfigInvalid("higher_mode.source must be 'drive' or 'amplitude', got '" +
                                source + "'");
        }
    }

    rc.probe_enabled = c.get_bool("probe.enabled");
    rc.probe_amplitude = c.get_double("probe.amplitude_mhz") * kMhzToRadUs;
    rc.probe_phase = c.get_double("probe.phase");
    rc.probe_detuning = c.get_double("probe.detuning_mhz") * kMhzToRadUs;
    if (rc.probe_enabled && !(rc.probe_amplitude >= 0))
        throw ConfigInvalid("probe.amplitude_mhz must be >= 0");

    rc.noise.n_th = c.get_double("noise.n_th");
    rc.noise.seed = std::uint64_t(c.get_int("noise.seed"));
    rc.noise.measurement_sigma = c.get_double("noise.measurement_sigma");
    rc.noise.noise_scale = c.get_double("noise.noise_scale");
    try {
        rc.noise.validate();
    } catch (const Error& err) {
        throw ConfigInvalid(std::string("noise: ") + err.what());
    }

    rc.gain = c.get_double("readout.gain");
    if (!(rc.gain > 0)) throw ConfigInvalid("readout.gain must be > 0");

    rc.sim.n_traj = int(c.get_int("simulation.n_traj"));
    rc.sim.dt = c.get_double("simulation.dt_us");
    rc.sim.t_total = c.get_double("simulation.t_total_us");
    rc.sim.t_transient = c.get_double("simulation.t_transient_us");
    rc.sim.stride = int(c.get_int("simulation.stride"));
    rc.sim.kick_amplitude = c.get_double("simulation.kick_amplitude");
    rc.sim.tol = c.get_double("simulation.tol");
    rc.sim.hist_bins = int(c.get_int("simulation.hist_bins"));
    rc.sim.hist_extent = c.get_double("simulation.hist_extent");
    rc.sim.basin_extent = c.get_double("simulation.basin_extent");
    rc.sim.basin_resolution = int(c.get_int("simulation.basin_resolution"));
    rc.sim.capture_radius = c.get_double("simulation.capture_radius");
    if (rc.sim.n_traj < 0) throw ConfigInvalid("simulation.n_traj must be >= 0");
    if (!(rc.sim.dt > 0)) throw ConfigInvalid("simulation.dt_us must be > 0");
    if (!(rc.sim.t_total > 0)) throw ConfigInvalid("simulation.t_total_us must be > 0");
    if (!(rc.sim.t_transient >= 0 && rc.sim.t_transient < rc.sim.t_total))
        throw ConfigInvalid("simulation: need 0 <= t_transient_us < t_total_us");
    if (rc.sim.stride < 1) throw ConfigInvalid("simulation.stride must be >= 1");
    if (!(rc.sim.kick_amplitude >= 0))
        throw ConfigInvalid("simulation.kick_amplitude must be >= 0");
    if (!(rc.sim.tol > 1e-14 && rc.sim.tol < 1e-3))
        throw ConfigInvalid("simulation.tol must lie in (1e-14, 1e-3)");
    if (rc.sim.hist_bins < 1) throw ConfigInvalid("simulation.hist_bins must be >= 1");
    if (!(rc.sim.hist_extent >= 0)) throw ConfigInvalid("simulation.hist_extent must be >= 0");
    if (!(rc.sim.basin_extent >= 0)) throw ConfigInvalid("simulation.basin_extent must be >= 0");
    if (rc.sim.basin_resolution < 1)
        throw ConfigInvalid("simulation.basin_resolution must be >= 1");
    if (!(rc.sim.capture_radius >= 0))
        throw ConfigInvalid("simulation.capture_radius must be >= 0");

    rc.sweep.eps_min = c.get_double("sweep.eps_min_mhz") * kMhzToRadUs;
    rc.sweep.eps_max = c.get_double("sweep.eps_max_mhz") * kMhzToRadUs;
    rc.sweep.eps_points = int(c.get_int("sweep.eps_points"));
    rc.sweep.delta_min = c.get_double("sweep.delta_min_mhz") * kMhzToRadUs;
    rc.sweep.delta_max = c.get_double("sweep.delta_max_mhz") * kMhzToRadUs;
    rc.sweep.delta_points = int(c.get_int("sweep.delta_points"));
    if (rc.sweep.eps_points < 1 || rc.sweep.delta_points < 1)
        throw ConfigInvalid("sweep: grids need at least one point each");
    if (!(rc.sweep.eps_min >= 0) || rc.sweep.eps_max < rc.sweep.eps_min)
        throw ConfigInvalid("sweep: need 0 <= eps_min_mhz <= eps_max_mhz");
    if (rc.sweep.delta_max < rc.sweep.delta_min)
        throw ConfigInvalid("sweep: need delta_min_mhz <= delta_max_mhz");

    rc.probe_scan.amp_min = c.get_double("probe_scan.amp_min_mhz") * kMhzToRadUs;
    rc.probe_scan.amp_max = c.get_double("probe_scan.amp_max_mhz") * kMhzToRadUs;
    rc.probe_scan.points = int(c.get_int("probe_scan.points"));
    rc.probe_scan.detuning = c.get_double("probe_scan.detuning_mhz") * kMhzToRadUs;
    rc.probe_scan.phase = c.get_double("probe_scan.phase");
    if (rc.probe_scan.points < 1) throw ConfigInvalid("probe_scan.points must be >= 1");
    if (!(rc.probe_scan.amp_min >= 0) || rc.probe_scan.amp_max < rc.probe_scan.amp_min)
        throw ConfigInvalid("probe_scan: need 0 <= amp_min_mhz <= amp_max_mhz");

    rc.out_dir = c.get("output.dir");
    rc.write_samples = c.get_bool("output.write_samples");
    return rc;
}

// Spectrum with the frequency scale resolved: explicit when given, otherwise
// chosen so the fundamental lands on target_f1.
inline ModeSpectrum build_spectrum(const RunConfig& rc) {
    if (rc.frequency_scale > 0) return solve_spectrum(rc.device, rc.frequency_scale);
    const ModeSpectrum unit = solve_spectrum(rc.device, 1.0);
    return solve_spectrum(rc.device, rc.target_f1 / unit.modes.front().kd);
}

inline RwaModel build_model(const RunConfig& rc, const ModeSpectrum& spectrum) {
    return build_rwa_model(rc.device, spectrum, rc.pump, rc.gamma1, rc.higher(), rc.probe());
}

} // namespace pmsim
