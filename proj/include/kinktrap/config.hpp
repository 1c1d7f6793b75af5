// Run configuration: INI-style sections with SI-unit values, dotted-path
// overrides, and construction of the physical model objects.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kinktrap/imaging.hpp"
#include "kinktrap/model.hpp"
#include "kinktrap/quench.hpp"

namespace kinktrap {

// Raw key-value view, section.key -> string. Preserves a deterministic order.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_ini(const std::string& text);
ConfigMap default_config();

struct RunConfig {
    // [species]
    double mass_amu = 24.0;
    double charge_e = 1.0;
    double wavelength_nm = 280.0;
    double linewidth_hz = 42e6;  // Gamma / 2pi
    // [trap]
    double rf_frequency_hz = 6.22e6;  // Omega_rf / 2pi
    double axial_hz = 56e3;
    double radial_y_hz = 610e3;
    double radial_ratio = 1.05;  // omega_z / omega_y
    TrapModel model = TrapModel::Harmonic;
    // [laser]
    double detuning_linewidths = -1.0;  // Delta / Gamma
    double saturation = 0.2;
    double tilt_deg = 5.0;
    double azimuth_deg = 45.0;
    bool recoil = true;
    // [integration]
    double dt = 0.01;  // scaled
    int rf_steps_per_period = 64;
    int stride = 10;
    // [quench] (times in scaled units, temperatures in T_D)
    QuenchSchedule quench;  // kb_td filled when building the model
    int trials = 100;
    // [camera] — kept in the file's units so that a manifest replay parses to
    // bit-identical values; converted to SI in build_model
    double pixel_size_um = 0.8;
    double exposure_ms = 200.0;
    double psf_sigma_um = 1.0;
    int camera_width = 0;
    int camera_height = 0;
    double camera_tilt_x_deg = 0.0;
    double camera_tilt_y_deg = 0.0;
    bool weight_by_scattering = true;
    // [run]
    int n_ions = 50;
    bool kink = false;
    std::uint64_t seed = 1;
    int workers = 1;
    std::vector<int> n_list{30, 44, 50, 54};
    int sweep_n_min = 40;
    int sweep_n_max = 56;
    double ratio_min = 1.005;
    double ratio_max = 1.45;
    int ratio_steps = 24;
    int bond_offset = 8;
    double descent_gamma = 8.0;
    double render_temperature_td = 1.0;  // thermal sampling temperature
    double render_duration = 0.0;        // scaled; 0 = exposure length

    static RunConfig from_map(const ConfigMap& map);
    ConfigMap to_map() const;
};

// Parsed physical model shared by the command pipelines.
struct ModelBundle {
    SpeciesConfig species;
    TrapConfig trap_si;
    LaserConfig laser_si;
    UnitScale scale;
    ScaledTrap trap;          // as configured (harmonic or full RF)
    ScaledTrap trap_secular;  // harmonic equivalent
    ScaledLaser laser;
    ClassifyThresholds thresholds;
    CameraConfig camera;
};

ModelBundle build_model(const RunConfig& config);

RunConfig load_config(const std::filesystem::path& ini_path,
                      const std::vector<std::string>& overrides);
RunConfig config_from_overrides(const std::vector<std::string>& overrides);

std::string serialize_config(const ConfigMap& map);

}  // namespace kinktrap
