// Equilibrium configurations, structural classification and kink detection.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "kinktrap/model.hpp"
#include "kinktrap/potential.hpp"

namespace kinktrap {

struct EquilibriumConfig {
    Positions positions;       // scaled, unsorted (original ion labels)
    double potential_energy = 0.0;
    double gradient_norm = 0.0;
    ScaledTrap trap;
};

enum class StructureClass { Linear, Zigzag, ThreeD, Complex };

const char* to_string(StructureClass cls);

struct StructureInfo {
    StructureClass cls = StructureClass::Linear;
    double max_out_of_plane = 0.0;       // scaled length, in the aligned frame
    double transverse_amplitude = 0.0;   // max in-plane |y| after alignment
    int flip_count = 0;                  // alternation flips among zigzag ions
    // rotation of the transverse (y,z) plane used for alignment: column 0 =
    // in-plane axis, column 1 = out-of-plane axis
    Eigen::Matrix2d plane_axes = Eigen::Matrix2d::Identity();
};

// Default thresholds, scaled at runtime from 0.05 um / 0.1 um equivalents.
struct ClassifyThresholds {
    double linear = 0.0;  // transverse amplitude below which an ion is "on axis"
    double plane = 0.0;   // out-of-plane amplitude above which a config is 3D
    static ClassifyThresholds from_scale(const UnitScale& scale) {
        return {0.05e-6 / scale.length, 0.1e-6 / scale.length};
    }
};

struct KinkDescriptor {
    bool present = false;
    int topological_charge = 0;          // in {-1, 0, +1}
    double axial_position = 0.0;         // scaled length, interpolated flip location
    double lattice_position = 0.0;       // same, in units of the local lattice spacing
    double core_out_of_plane_amplitude = 0.0;
    std::array<int, 2> core_ion_indices{-1, -1};  // original ion labels
    int multiplicity = 0;                // number of alternation flips found
};

struct RelaxOptions {
    double gradient_tol = 1e-10;
    double fire_gradient_tol = 1e-5;   // hand-off threshold to the Newton polish
    int max_fire_steps = 200000;
    int max_newton_steps = 400;
    int max_saddle_escapes = 12;
    bool planar = false;        // freeze all z coordinates (in-plane branch)
    bool certify = true;        // reject saddles (escape along the soft mode)
};

// Finds a local minimum of the potential from the given start: FIRE descent
// into the basin, then damped-Newton iterations on the analytic
// gradient/Hessian. Saddle points are escaped by kicking along the most
// negative eigenvector. Deterministic given the start. Requires the Harmonic
// trap model.
EquilibriumConfig relax(const Positions& initial, const ScaledTrap& trap,
                        const RelaxOptions& opts = {});

StructureInfo classify(const EquilibriumConfig& config, double linear_threshold,
                       double plane_threshold);
StructureInfo classify(const Positions& positions, double linear_threshold,
                       double plane_threshold);

// One alternation-signature flip: s changes sign between the bracketing ions.
struct KinkFlip {
    double axial_position = 0.0;
    double lattice_position = 0.0;
    std::array<int, 2> core_ion_indices{-1, -1};
    double core_out_of_plane = 0.0;
};

// All alternation flips of a configuration, axially ordered. Ions whose
// in-plane amplitude is below y_floor carry no signature (their sign is
// numerical noise); parity still follows the global axial rank.
std::vector<KinkFlip> kink_scan(const Positions& positions, double y_floor);

// Single-defect detector. Throws AmbiguousStructure when more than one flip
// is present (the count is carried in the exception).
KinkDescriptor detect_kink(const Positions& positions, double y_floor);
KinkDescriptor detect_kink(const EquilibriumConfig& config, const ClassifyThresholds& thr);

// Axially ordered ion indices (ascending x).
std::vector<int> axial_order(const Positions& positions);

// Mean nearest-neighbor axial spacing near x0.
double local_spacing(const Positions& positions, double x0);

// 1D equilibrium of N ions along the trap axis (x), ascending.
Eigen::VectorXd linear_chain(int n);

// Near-equilibrium chain guess for N ions: 1D equilibrium along the axis with
// deterministic transverse noise (used as a generic relax start).
Positions chain_start(int n, const ScaledTrap& trap, double noise_amplitude = 1e-3,
                      std::uint64_t noise_seed = 12345);

// Chain with an alternating in-plane displacement (zigzag ansatz).
Positions zigzag_ansatz(int n, const ScaledTrap& trap, double amplitude = 0.05);

// Relaxed global-minimum candidate: zigzag-ansatz branch plus a few seeded
// random restarts (best-of-restarts, no global certification).
EquilibriumConfig ground_state(int n, const ScaledTrap& trap, int restarts = 2);

// --- structural census (deterministic branch tracking) ---

// Smallest transverse (y) curvature eigenvalue of the linear chain; the
// zigzag transition is where this crosses zero.
double linear_chain_transverse_eigenvalue(int n, const ScaledTrap& trap);

// Defect-free planar zigzag branch (z frozen at zero, certified in-plane).
EquilibriumConfig planar_zigzag(int n, const ScaledTrap& trap);

// Smallest out-of-plane (z) curvature eigenvalue at a planar configuration;
// negative means the 2D structure buckles into 3D.
double out_of_plane_eigenvalue(const EquilibriumConfig& planar);

// Adiabatic-branch ground state used by the census: the planar zigzag while
// it is out-of-plane stable, otherwise the buckled 3D branch reached by
// kicking along the soft z mode.
EquilibriumConfig census_ground_state(int n, const ScaledTrap& trap);

// Sign-flip surgery: negate the in-plane transverse coordinate of every ion
// whose axial rank exceeds `bond` (bonds are numbered 0..N-2 in axial order).
// The input must be a planar zigzag-like configuration in the y plane.
Positions flip_surgery(const Positions& zigzag, int bond);

// Centered-kink local minimum for N ions: ground-state zigzag, surgery at the
// central bond, full relaxation. Throws KinkNotFormed when the flip relaxes
// away (no metastable kink at these parameters).
EquilibriumConfig kink_equilibrium(int n, const ScaledTrap& trap, const ClassifyThresholds& thr);

}  // namespace kinktrap
