// Effective Peierls-Nabarro potential of a kink: overdamped descent of an
// off-centered kink toward the trap center, energy-vs-position profiles, and
// the barrier's scaling with ion number.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kinktrap/statics.hpp"

namespace kinktrap {

struct KinkPathSample {
    double time = 0.0;
    double position = 0.0;          // kink axial coordinate, scaled length
    double lattice_position = 0.0;  // same, in local lattice spacings
    double energy = 0.0;            // total potential energy, scaled
    double kinetic = 0.0;
};

struct KinkPath {
    std::vector<KinkPathSample> samples;  // transient-trimmed, time ordered
    double gamma = 0.0;
    double dt = 0.0;
    bool reached_center = false;
    int exit_side = 0;  // nonzero when the kink escaped (sign of last position)
};

struct SeededKink {
    Positions positions;   // settled, not an equilibrium (the kink would slide)
    KinkDescriptor kink;
    int bond = 0;          // axial bond index where the surgery was applied
};

struct DescentOptions {
    double gamma = 8.0;
    double dt = 0.01;
    double sample_interval = 2.0;    // scaled time between recorded samples
    double settle_time = 30.0;       // post-surgery constrained settling
    double max_time = 40000.0;
    double center_tol = 0.02;        // |position| for "reached center", scaled
    // fraction of the sampled PN energy range the kinetic energy must stay
    // below after transient trimming
    double overdamp_fraction = 1e-3;
};

// Sign-flip surgery at `bond_offset` bonds from the central bond, followed by
// a brief strong-damping settling with the out-of-plane core symmetry broken.
// Throws KinkNotFormed when no single kink survives near the requested bond.
SeededKink seed_offcenter_kink(int n, const ScaledTrap& trap, int bond_offset,
                               const ClassifyThresholds& thr, const DescentOptions& opts = {});

// Overdamped slide of a seeded kink toward the trap center. Records
// (position, energy) samples, trims the settling transient, and certifies
// overdamping. Throws KinkEscaped when the kink leaves through a chain end
// and NotOverdamped when the kinetic-energy criterion fails.
KinkPath adiabatic_descent(const Positions& seeded, const ScaledTrap& trap, double gamma,
                           const ClassifyThresholds& thr, const DescentOptions& opts = {});

struct PNProfile {
    std::vector<double> position;  // uniform grid, scaled length
    std::vector<double> energy;    // relative to the centered kink, scaled
    double barrier_height = 0.0;   // max - min over the profile
    double lattice_spacing = 0.0;  // central spacing, for unit conversion
    int n_ions = 0;
};

// Merges two descents (one from each side) into a symmetric profile on a
// uniform position grid, re-zeroed at the centered-kink energy.
PNProfile pn_profile(const KinkPath& left, const KinkPath& right, int grid_points = 81);

struct SweepRow {
    int n_ions = 0;
    double barrier = 0.0;       // scaled energy
    int seed_bond_offset = 0;   // outermost non-escaping seed used
    bool ok = false;
    std::string error;
};

struct QuadraticFit {
    double a = 0.0, b = 0.0, c = 0.0;  // barrier = a N^2 + b N + c
    double r_squared = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::optional<QuadraticFit> fit;   // absent when underdetermined
    std::vector<int> excluded;         // N values excluded from the fit
};

// Barrier versus ion number with an outermost-stable-seed search per side.
// Failures are recorded per N and excluded from the quadratic fit.
SweepResult barrier_sweep(const std::vector<int>& n_values, const ScaledTrap& trap,
                          const ClassifyThresholds& thr, const DescentOptions& opts = {},
                          int workers = 1);

// Least-squares quadratic with coefficient of determination.
QuadraticFit fit_quadratic(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace kinktrap
