// Physical constants, species/trap/laser configuration and the dimensionless
// unit system shared by all other modules.
//
// All internal computation runs in scaled units with m = 1, omega_x = 1 and
// q^2/(4 pi eps0) = 1; SI values appear only at I/O boundaries. The length
// unit l is defined by l^3 = q^2 / (4 pi eps0 m omega_x^2).
#pragma once

#include <Eigen/Dense>

#include "kinktrap/errors.hpp"

namespace kinktrap {

namespace phys {
// CODATA 2018
inline constexpr double elementary_charge = 1.602176634e-19;   // C
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double hbar = 1.054571817e-34;                // J s
inline constexpr double k_boltzmann = 1.380649e-23;            // J/K
inline constexpr double epsilon0 = 8.8541878128e-12;           // F/m
inline constexpr double coulomb_constant = 1.0 / (4.0 * M_PI * epsilon0);
}  // namespace phys

struct SpeciesConfig {
    double mass = 24.0 * phys::atomic_mass_unit;  // kg
    double charge = phys::elementary_charge;      // C
    double transition_wavelength = 280e-9;        // m
    double natural_linewidth = 2.0 * M_PI * 42e6; // rad/s

    void validate() const;
    static SpeciesConfig mg24() { return {}; }
};

// Doppler cooling limit hbar*Gamma/(2 kB), reached at detuning Gamma/2.
double doppler_limit(const SpeciesConfig& species);

enum class TrapModel { Harmonic, FullRF };

// Trap drive and secular frequencies (SI, rad/s). In FullRF mode the Mathieu
// coefficients are calibrated by make_trap so that the secular frequencies of
// a single ion match the requested omega_x/y/z.
struct TrapConfig {
    double rf_frequency = 2.0 * M_PI * 6.22e6;  // Omega_rf
    double secular_axial = 2.0 * M_PI * 56e3;   // omega_x
    double secular_y = 2.0 * M_PI * 630e3;      // omega_y (soft radial, zigzag plane)
    double secular_z = 2.0 * M_PI * 661.5e3;    // omega_z (out-of-plane radial)
    TrapModel model = TrapModel::Harmonic;

    // FullRF internals (dimensionless Mathieu coefficients; zero in Harmonic
    // mode). Drive enters as (Omega^2/4)(a_u -+ 2 q cos(Omega t)) u.
    double mathieu_q = 0.0;
    double mathieu_ay = 0.0;
    double mathieu_az = 0.0;

    // Lowest-order radial stability parameter 2*sqrt(2)*max(wy,wz)/Omega.
    double q_radial() const {
        return 2.0 * std::sqrt(2.0) * std::max(secular_y, secular_z) / rf_frequency;
    }
};

// Validates ordering/stability and, in FullRF mode, calibrates the Mathieu
// coefficients numerically (single-ion Floquet) so the secular frequencies
// match the requested values to relative 1e-6 or better.
TrapConfig make_trap(double rf_frequency, double omega_x, double omega_y, double omega_z,
                     TrapModel model);

struct LaserConfig {
    double detuning = -2.0 * M_PI * 42e6;  // Delta, rad/s (red: negative)
    double saturation = 0.2;
    // 5 degrees off the trap axis, split between y and z so that every
    // principal direction of a planar crystal couples to the beam.
    Eigen::Vector3d beam_direction = make_beam_direction(5.0, 45.0);
    double wavenumber = 2.0 * M_PI / 280e-9;  // 1/m

    // tilt from the x-axis; azimuth 0 lies in the xy-plane, 90 in xz
    static Eigen::Vector3d make_beam_direction(double tilt_deg, double azimuth_deg) {
        const double tilt = tilt_deg * M_PI / 180.0;
        const double az = azimuth_deg * M_PI / 180.0;
        return {std::cos(tilt), std::sin(tilt) * std::cos(az), std::sin(tilt) * std::sin(az)};
    }

    void validate() const;
};

// SI value of one scaled unit, plus the Doppler temperature reference.
struct UnitScale {
    double length = 0.0;       // m
    double time = 0.0;         // s (= 1/omega_x)
    double velocity = 0.0;     // m/s
    double energy = 0.0;       // J (= m omega_x^2 l^2)
    double mass = 0.0;         // kg
    double temperature_reference = 0.0;  // T_D, K

    static UnitScale from(const SpeciesConfig& species, double omega_x);

    double to_scaled_length(double meters) const { return meters / length; }
    double to_si_length(double scaled) const { return scaled * length; }
    double to_scaled_energy(double joules) const { return joules / energy; }
    double to_si_energy(double scaled) const { return scaled * energy; }
    // k_B T in scaled energy units for a temperature in kelvin.
    double thermal_energy(double kelvin) const {
        return phys::k_boltzmann * kelvin / energy;
    }
    double kb_td() const { return thermal_energy(temperature_reference); }
};

// Trap in scaled units (omega_x = 1). Immutable after construction.
struct ScaledTrap {
    TrapModel model = TrapModel::Harmonic;
    double cy = 0.0;  // (omega_y/omega_x)^2
    double cz = 0.0;  // (omega_z/omega_x)^2
    // FullRF drive, all dimensionless
    double rf_omega = 0.0;  // Omega_rf / omega_x
    double q = 0.0;
    double ay = 0.0;
    double az = 0.0;

    double rf_period() const { return 2.0 * M_PI / rf_omega; }

    // Instantaneous trap curvature along each axis at drive time t.
    Eigen::Vector3d curvature(double t) const {
        if (model == TrapModel::Harmonic) return {1.0, cy, cz};
        const double c = std::cos(rf_omega * t);
        const double pre = rf_omega * rf_omega / 4.0;
        return {1.0, pre * (ay - 2.0 * q * c), pre * (az + 2.0 * q * c)};
    }

    Eigen::Vector3d force_at(const Eigen::Vector3d& r, double t) const {
        return -curvature(t).cwiseProduct(r);
    }

    // The same trap with the drive replaced by its secular (harmonic) limit.
    ScaledTrap harmonic_equivalent() const {
        ScaledTrap h = *this;
        h.model = TrapModel::Harmonic;
        return h;
    }

    ScaledTrap with_radial(double new_cy, double new_cz) const {
        ScaledTrap t = *this;
        t.cy = new_cy;
        t.cz = new_cz;
        return t;
    }
};

ScaledTrap to_dimensionless(const TrapConfig& trap, const UnitScale& scale);
TrapConfig to_si(const ScaledTrap& trap, const TrapConfig& reference);

// Laser in scaled units.
struct ScaledLaser {
    double linewidth = 0.0;   // Gamma / omega_x
    double detuning = 0.0;    // Delta / omega_x
    double saturation = 0.0;
    Eigen::Vector3d k;        // wavevector * l * beam_direction
    double recoil_dv = 0.0;   // hbar k / (m l omega_x)

    // Photon scattering rate per scaled time at ion velocity v.
    double scattering_rate(const Eigen::Vector3d& v) const {
        const double doppler = detuning - k.dot(v);
        const double x = 2.0 * doppler / linewidth;
        return 0.5 * linewidth * saturation / (1.0 + saturation + x * x);
    }

    Eigen::Vector3d mean_force(const Eigen::Vector3d& v) const {
        return k.normalized() * (recoil_dv * scattering_rate(v));
    }
};

ScaledLaser to_dimensionless(const LaserConfig& laser, const SpeciesConfig& species,
                             const UnitScale& scale);

// Secular frequency (units of the drive-free oscillator) of the Hill equation
//   u'' + (Omega^2/4) (a - 2 q cos(Omega t)) u = 0
// obtained from the monodromy matrix over one drive period. Used both by the
// FullRF calibration and by tests as an independent oracle.
double floquet_secular_frequency(double a, double q, double rf_omega);

}  // namespace kinktrap
