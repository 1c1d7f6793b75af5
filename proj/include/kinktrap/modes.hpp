// Linearized spectrum of a crystal, mode localization, thermal sampling and
// the amplitude dependence (anharmonicity) of individual modes.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "kinktrap/dynamics.hpp"
#include "kinktrap/statics.hpp"

namespace kinktrap {

struct ModeSpectrum {
    Eigen::VectorXd frequencies;   // ascending, scaled (omega_x = 1)
    Eigen::MatrixXd eigenvectors;  // columns, orthonormal
    Positions equilibrium;
    ScaledTrap trap;

    int n_modes() const { return static_cast<int>(frequencies.size()); }
    int n_ions() const { return static_cast<int>(equilibrium.size()); }
};

Eigen::MatrixXd hessian(const EquilibriumConfig& config);

// Mass-weighted eigendecomposition (m = 1). Frequencies sorted ascending,
// eigenvector signs fixed by the largest-component-positive convention.
// Throws NegativeCurvature when an eigenvalue drops below -1e-8.
ModeSpectrum normal_modes(const EquilibriumConfig& config);

// Per-ion displacement weights of one mode (sums to 1).
Eigen::VectorXd ion_weights(const ModeSpectrum& spectrum, int mode);

// Inverse participation ratio over per-ion displacement norms; 1/N extended,
// -> 1 fully localized on one ion.
double ion_ipr(const ModeSpectrum& spectrum, int mode);

// Ions carrying the largest weight in a mode, heaviest first.
std::vector<int> dominant_ions(const ModeSpectrum& spectrum, int mode, int count);

struct ModeLocalization {
    std::vector<double> ipr;                    // per mode
    std::vector<std::vector<int>> dominant;     // per mode, top ions
};

ModeLocalization localization(const ModeSpectrum& spectrum, int top_count = 3);

// Thermal state with energy kT in every mode: amplitude sqrt(2kT)/omega and
// a uniformly random phase per mode. `kT` is in scaled energy units. An
// optional mode filter restricts excitation to the listed mode indices.
SystemState thermal_sample(const ModeSpectrum& spectrum, double kT, Rng& rng,
                           const std::vector<int>* only_modes = nullptr);

struct TunePoint {
    double ratio = 0.0;       // omega_z / omega_y
    double omega_low = 0.0;   // scaled localized-mode frequency
    double ipr = 0.0;
    bool kink_lost = false;
};

// Localized-mode frequency of the N-ion kink versus radial anisotropy.
// omega_y stays at the base value; omega_z = ratio * omega_y. The kink is
// re-relaxed at each grid point (continuation from the previous one) and the
// localized mode is followed by eigenvector overlap. Points where the kink
// dissolves are recorded, not dropped.
std::vector<TunePoint> tune_scan(int n_ions, const ScaledTrap& trap_base,
                                 const std::vector<double>& ratio_grid,
                                 const ClassifyThresholds& thr);

struct AnharmonicPoint {
    double amplitude = 0.0;   // initial displacement along the eigenvector, scaled
    double frequency = 0.0;   // dominant oscillation frequency, scaled
    bool unstable = false;    // trajectory left the kink basin
};

struct AnharmonicOptions {
    double dt = 0.005;
    double min_periods = 60.0;  // keeps the windowed DFT above 50 oscillations
    int stride = 4;
};

// Effective frequency of one mode versus initial amplitude: displace along
// the eigenvector, integrate undamped, take the peak of a Hann-windowed DFT
// of the modal coordinate.
std::vector<AnharmonicPoint> anharmonic_scan(const EquilibriumConfig& config, int mode_index,
                                             const std::vector<double>& amplitudes,
                                             const AnharmonicOptions& opts = {});

// Peak frequency (rad per scaled time) of a uniformly sampled signal via
// Hann-windowed DFT with quadratic peak interpolation. Exposed for tests.
double dominant_frequency(const std::vector<double>& signal, double sample_dt);

}  // namespace kinktrap
