#include "kinktrap/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "kinktrap/errors.hpp"
#include "kinktrap/io.hpp"

namespace kinktrap {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t consumed = 0;
        const double v = std::stod(value, &consumed);
        if (consumed != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + " = '" + value + "' is not a number");
    }
}

int to_int(const std::string& key, const std::string& value) {
    const double v = to_double(key, value);
    const int i = static_cast<int>(std::llround(v));
    if (std::abs(v - i) > 1e-9) throw ConfigError("config: " + key + " must be an integer");
    return i;
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("config: " + key + " must be a boolean");
}

std::vector<int> to_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_int(key, item));
    }
    if (out.empty()) throw ConfigError("config: " + key + " is an empty list");
    return out;
}

std::string bool_str(bool v) { return v ? "true" : "false"; }

std::string int_list_str(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

}  // namespace

ConfigMap parse_ini(const std::string& text) {
    ConfigMap map;
    std::string section;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::size_t comment = line.find_first_of(";#");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config: malformed section at line " + std::to_string(line_no));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key = value at line " + std::to_string(line_no));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config: empty key at line " + std::to_string(line_no));
        map[section.empty() ? key : section + "." + key] = value;
    }
    return map;
}

ConfigMap default_config() { return RunConfig{}.to_map(); }

ConfigMap RunConfig::to_map() const {
    ConfigMap m;
    m["species.mass_amu"] = format_double(mass_amu);
    m["species.charge_e"] = format_double(charge_e);
    m["species.wavelength_nm"] = format_double(wavelength_nm);
    m["species.linewidth_hz"] = format_double(linewidth_hz);
    m["trap.rf_frequency_hz"] = format_double(rf_frequency_hz);
    m["trap.axial_hz"] = format_double(axial_hz);
    m["trap.radial_y_hz"] = format_double(radial_y_hz);
    m["trap.radial_ratio"] = format_double(radial_ratio);
    m["trap.model"] = (model == TrapModel::Harmonic) ? "harmonic" : "full_rf";
    m["laser.detuning_linewidths"] = format_double(detuning_linewidths);
    m["laser.saturation"] = format_double(saturation);
    m["laser.tilt_deg"] = format_double(tilt_deg);
    m["laser.azimuth_deg"] = format_double(azimuth_deg);
    m["laser.recoil"] = bool_str(recoil);
    m["integration.dt"] = format_double(dt);
    m["integration.rf_steps_per_period"] = std::to_string(rf_steps_per_period);
    m["integration.stride"] = std::to_string(stride);
    m["quench.t_init_td"] = format_double(quench.t_init);
    m["quench.ramp_time"] = format_double(quench.ramp_time);
    m["quench.ramp_gamma"] = format_double(quench.ramp_gamma);
    m["quench.settle_time"] = format_double(quench.settle_time);
    m["quench.grace_time"] = format_double(quench.grace_time);
    m["quench.melt_time"] = format_double(quench.melt_time);
    m["quench.melt_boost"] = format_double(quench.melt_boost);
    m["quench.refreeze_time"] = format_double(quench.refreeze_time);
    m["quench.remelt_settle_time"] = format_double(quench.remelt_settle);
    m["quench.max_remelts"] = std::to_string(quench.max_remelts);
    m["quench.snap_time"] = format_double(quench.snap_time);
    m["quench.snap_gamma"] = format_double(quench.snap_gamma);
    m["quench.stationarity_window"] = format_double(quench.stationarity_window);
    m["quench.crystallized_td"] = format_double(quench.crystallized_temp);
    m["quench.log_interval"] = format_double(quench.multiplicity_log_interval);
    m["quench.trials"] = std::to_string(trials);
    m["camera.pixel_size_um"] = format_double(pixel_size_um);
    m["camera.exposure_ms"] = format_double(exposure_ms);
    m["camera.psf_sigma_um"] = format_double(psf_sigma_um);
    m["camera.width_px"] = std::to_string(camera_width);
    m["camera.height_px"] = std::to_string(camera_height);
    m["camera.tilt_x_deg"] = format_double(camera_tilt_x_deg);
    m["camera.tilt_y_deg"] = format_double(camera_tilt_y_deg);
    m["camera.weight_by_scattering"] = bool_str(weight_by_scattering);
    m["run.n_ions"] = std::to_string(n_ions);
    m["run.kink"] = bool_str(kink);
    m["run.seed"] = std::to_string(seed);
    m["run.workers"] = std::to_string(workers);
    m["run.n_list"] = int_list_str(n_list);
    m["run.sweep_n_min"] = std::to_string(sweep_n_min);
    m["run.sweep_n_max"] = std::to_string(sweep_n_max);
    m["run.ratio_min"] = format_double(ratio_min);
    m["run.ratio_max"] = format_double(ratio_max);
    m["run.ratio_steps"] = std::to_string(ratio_steps);
    m["run.bond_offset"] = std::to_string(bond_offset);
    m["run.descent_gamma"] = format_double(descent_gamma);
    m["run.render_temperature_td"] = format_double(render_temperature_td);
    m["run.render_duration"] = format_double(render_duration);
    return m;
}

RunConfig RunConfig::from_map(const ConfigMap& map) {
    RunConfig c;
    for (const auto& [key, value] : map) {
        if (key == "species.mass_amu") c.mass_amu = to_double(key, value);
        else if (key == "species.charge_e") c.charge_e = to_double(key, value);
        else if (key == "species.wavelength_nm") c.wavelength_nm = to_double(key, value);
        else if (key == "species.linewidth_hz") c.linewidth_hz = to_double(key, value);
        else if (key == "trap.rf_frequency_hz") c.rf_frequency_hz = to_double(key, value);
        else if (key == "trap.axial_hz") c.axial_hz = to_double(key, value);
        else if (key == "trap.radial_y_hz") c.radial_y_hz = to_double(key, value);
        else if (key == "trap.radial_ratio") c.radial_ratio = to_double(key, value);
        else if (key == "trap.model") {
            if (value == "harmonic") c.model = TrapModel::Harmonic;
            else if (value == "full_rf") c.model = TrapModel::FullRF;
            else throw ConfigError("config: trap.model must be harmonic or full_rf");
        } else if (key == "laser.detuning_linewidths") c.detuning_linewidths = to_double(key, value);
        else if (key == "laser.saturation") c.saturation = to_double(key, value);
        else if (key == "laser.tilt_deg") c.tilt_deg = to_double(key, value);
        else if (key == "laser.azimuth_deg") c.azimuth_deg = to_double(key, value);
        else if (key == "laser.recoil") c.recoil = to_bool(key, value);
        else if (key == "integration.dt") c.dt = to_double(key, value);
        else if (key == "integration.rf_steps_per_period")
            c.rf_steps_per_period = to_int(key, value);
        else if (key == "integration.stride") c.stride = to_int(key, value);
        else if (key == "quench.t_init_td") c.quench.t_init = to_double(key, value);
        else if (key == "quench.ramp_time") c.quench.ramp_time = to_double(key, value);
        else if (key == "quench.ramp_gamma") c.quench.ramp_gamma = to_double(key, value);
        else if (key == "quench.settle_time") c.quench.settle_time = to_double(key, value);
        else if (key == "quench.grace_time") c.quench.grace_time = to_double(key, value);
        else if (key == "quench.melt_time") c.quench.melt_time = to_double(key, value);
        else if (key == "quench.melt_boost") c.quench.melt_boost = to_double(key, value);
        else if (key == "quench.refreeze_time") c.quench.refreeze_time = to_double(key, value);
        else if (key == "quench.remelt_settle_time") c.quench.remelt_settle = to_double(key, value);
        else if (key == "quench.max_remelts") c.quench.max_remelts = to_int(key, value);
        else if (key == "quench.snap_time") c.quench.snap_time = to_double(key, value);
        else if (key == "quench.snap_gamma") c.quench.snap_gamma = to_double(key, value);
        else if (key == "quench.stationarity_window")
            c.quench.stationarity_window = to_double(key, value);
        else if (key == "quench.crystallized_td")
            c.quench.crystallized_temp = to_double(key, value);
        else if (key == "quench.log_interval")
            c.quench.multiplicity_log_interval = to_double(key, value);
        else if (key == "quench.trials") c.trials = to_int(key, value);
        else if (key == "camera.pixel_size_um") c.pixel_size_um = to_double(key, value);
        else if (key == "camera.exposure_ms") c.exposure_ms = to_double(key, value);
        else if (key == "camera.psf_sigma_um") c.psf_sigma_um = to_double(key, value);
        else if (key == "camera.width_px") c.camera_width = to_int(key, value);
        else if (key == "camera.height_px") c.camera_height = to_int(key, value);
        else if (key == "camera.tilt_x_deg") c.camera_tilt_x_deg = to_double(key, value);
        else if (key == "camera.tilt_y_deg") c.camera_tilt_y_deg = to_double(key, value);
        else if (key == "camera.weight_by_scattering")
            c.weight_by_scattering = to_bool(key, value);
        else if (key == "run.n_ions") c.n_ions = to_int(key, value);
        else if (key == "run.kink") c.kink = to_bool(key, value);
        else if (key == "run.seed") c.seed = std::stoull(value);
        else if (key == "run.workers") c.workers = to_int(key, value);
        else if (key == "run.n_list") c.n_list = to_int_list(key, value);
        else if (key == "run.sweep_n_min") c.sweep_n_min = to_int(key, value);
        else if (key == "run.sweep_n_max") c.sweep_n_max = to_int(key, value);
        else if (key == "run.ratio_min") c.ratio_min = to_double(key, value);
        else if (key == "run.ratio_max") c.ratio_max = to_double(key, value);
        else if (key == "run.ratio_steps") c.ratio_steps = to_int(key, value);
        else if (key == "run.bond_offset") c.bond_offset = to_int(key, value);
        else if (key == "run.descent_gamma") c.descent_gamma = to_double(key, value);
        else if (key == "run.render_temperature_td")
            c.render_temperature_td = to_double(key, value);
        else if (key == "run.render_duration") c.render_duration = to_double(key, value);
        else throw ConfigError("config: unknown key '" + key + "'");
    }
    if (c.n_ions < 1) throw ConfigError("config: run.n_ions must be >= 1");
    if (c.workers < 1) throw ConfigError("config: run.workers must be >= 1");
    if (c.trials < 1) throw ConfigError("config: quench.trials must be >= 1");
    if (!(c.dt > 0.0)) throw ConfigError("config: integration.dt must be > 0");
    return c;
}

ModelBundle build_model(const RunConfig& config) {
    ModelBundle bundle;
    bundle.species.mass = config.mass_amu * phys::atomic_mass_unit;
    bundle.species.charge = config.charge_e * phys::elementary_charge;
    bundle.species.transition_wavelength = config.wavelength_nm * 1e-9;
    bundle.species.natural_linewidth = 2.0 * M_PI * config.linewidth_hz;
    bundle.species.validate();

    const double omega_x = 2.0 * M_PI * config.axial_hz;
    const double omega_y = 2.0 * M_PI * config.radial_y_hz;
    bundle.trap_si = make_trap(2.0 * M_PI * config.rf_frequency_hz, omega_x, omega_y,
                               omega_y * config.radial_ratio, config.model);

    bundle.laser_si.detuning = config.detuning_linewidths * bundle.species.natural_linewidth;
    bundle.laser_si.saturation = config.saturation;
    bundle.laser_si.beam_direction =
        LaserConfig::make_beam_direction(config.tilt_deg, config.azimuth_deg);
    bundle.laser_si.wavenumber = 2.0 * M_PI / bundle.species.transition_wavelength;
    bundle.laser_si.validate();

    bundle.scale = UnitScale::from(bundle.species, omega_x);
    bundle.trap = to_dimensionless(bundle.trap_si, bundle.scale);
    bundle.trap_secular = bundle.trap.harmonic_equivalent();
    bundle.laser = to_dimensionless(bundle.laser_si, bundle.species, bundle.scale);
    bundle.thresholds = ClassifyThresholds::from_scale(bundle.scale);

    bundle.camera.pixel_size = config.pixel_size_um * 1e-6;
    bundle.camera.exposure = config.exposure_ms * 1e-3;
    bundle.camera.psf_sigma = config.psf_sigma_um * 1e-6;
    bundle.camera.width = config.camera_width;
    bundle.camera.height = config.camera_height;
    bundle.camera.tilt_x = config.camera_tilt_x_deg * M_PI / 180.0;
    bundle.camera.tilt_y = config.camera_tilt_y_deg * M_PI / 180.0;
    bundle.camera.weight_by_scattering = config.weight_by_scattering;
    if (!(bundle.camera.pixel_size > 0.0) || !(bundle.camera.psf_sigma > 0.0) ||
        !(bundle.camera.exposure > 0.0))
        throw ConfigError("config: camera sizes and exposure must be positive");
    return bundle;
}

RunConfig load_config(const std::filesystem::path& ini_path,
                      const std::vector<std::string>& overrides) {
    ConfigMap map = default_config();
    if (!ini_path.empty()) {
        const ConfigMap file_map = parse_ini(read_text_file(ini_path));
        for (const auto& [k, v] : file_map) {
            if (map.find(k) == map.end()) throw ConfigError("config: unknown key '" + k + "'");
            map[k] = v;
        }
    }
    for (const auto& item : overrides) {
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override '" + item + "' must be section.key=value");
        const std::string key = trim(item.substr(0, eq));
        if (map.find(key) == map.end()) throw ConfigError("config: unknown key '" + key + "'");
        map[key] = trim(item.substr(eq + 1));
    }
    return RunConfig::from_map(map);
}

RunConfig config_from_overrides(const std::vector<std::string>& overrides) {
    return load_config({}, overrides);
}

std::string serialize_config(const ConfigMap& map) {
    std::string out;
    std::string section;
    for (const auto& [key, value] : map) {
        const std::size_t dot = key.find('.');
        const std::string sec = (dot == std::string::npos) ? "" : key.substr(0, dot);
        const std::string name = (dot == std::string::npos) ? key : key.substr(dot + 1);
        if (sec != section) {
            if (!out.empty()) out += "\n";
            out += "[" + sec + "]\n";
            section = sec;
        }
        out += name + " = " + value + "\n";
    }
    return out;
}

}  // namespace kinktrap
