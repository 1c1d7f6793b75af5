#include "kinktrap/model.hpp"

#include <cmath>
#include <string>

namespace kinktrap {

void SpeciesConfig::validate() const {
    if (!(mass > 0.0)) throw ConfigError("species: mass must be > 0");
    if (charge == 0.0) throw ConfigError("species: charge must be nonzero");
    if (!(natural_linewidth > 0.0)) throw ConfigError("species: natural linewidth must be > 0");
    if (!(transition_wavelength > 0.0)) throw ConfigError("species: wavelength must be > 0");
}

double doppler_limit(const SpeciesConfig& species) {
    return phys::hbar * species.natural_linewidth / (2.0 * phys::k_boltzmann);
}

void LaserConfig::validate() const {
    if (saturation < 0.0) throw ConfigError("laser: saturation must be >= 0");
    if (std::abs(beam_direction.norm() - 1.0) > 1e-9)
        throw ConfigError("laser: beam_direction must be a unit vector");
    if (!(wavenumber > 0.0)) throw ConfigError("laser: wavenumber must be > 0");
}

UnitScale UnitScale::from(const SpeciesConfig& species, double omega_x) {
    species.validate();
    if (!(omega_x > 0.0)) throw ConfigError("unit scale: omega_x must be > 0");
    UnitScale s;
    const double q2k = phys::coulomb_constant * species.charge * species.charge;
    s.length = std::cbrt(q2k / (species.mass * omega_x * omega_x));
    s.time = 1.0 / omega_x;
    s.velocity = s.length * omega_x;
    s.energy = species.mass * omega_x * omega_x * s.length * s.length;
    s.mass = species.mass;
    s.temperature_reference = doppler_limit(species);
    return s;
}

double floquet_secular_frequency(double a, double q, double rf_omega) {
    // Integrate u'' = -(Omega^2/4)(a - 2 q cos(Omega t)) u over one RF period
    // for the two unit initial conditions; classical RK4 with fixed step.
    const double period = 2.0 * M_PI / rf_omega;
    const int steps = 512;
    const double h = period / steps;
    auto curvature = [&](double t) {
        return rf_omega * rf_omega / 4.0 * (a - 2.0 * q * std::cos(rf_omega * t));
    };
    // columns of the fundamental matrix: (u, u')
    double m[2][2] = {{1.0, 0.0}, {0.0, 1.0}};
    for (int col = 0; col < 2; ++col) {
        double u = m[0][col];
        double v = m[1][col];
        double t = 0.0;
        for (int i = 0; i < steps; ++i) {
            const double k1u = v, k1v = -curvature(t) * u;
            const double k2u = v + 0.5 * h * k1v, k2v = -curvature(t + 0.5 * h) * (u + 0.5 * h * k1u);
            const double k3u = v + 0.5 * h * k2v, k3v = -curvature(t + 0.5 * h) * (u + 0.5 * h * k2u);
            const double k4u = v + h * k3v, k4v = -curvature(t + h) * (u + h * k3u);
            u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            t += h;
        }
        m[0][col] = u;
        m[1][col] = v;
    }
    const double half_trace = 0.5 * (m[0][0] + m[1][1]);
    if (std::abs(half_trace) >= 1.0)
        throw StabilityViolation("floquet: motion unstable at a=" + std::to_string(a) +
                                 " q=" + std::to_string(q));
    return std::acos(half_trace) / period;
}

namespace {

// Solve for (q, b) such that the y/z Hill equations with
//   ay = -ax/2 - b, az = -ax/2 + b
// reproduce the requested radial secular frequencies. 2x2 Newton with a
// finite-difference Jacobian; targets and unknowns are O(1).
void calibrate_full_rf(TrapConfig& trap) {
    const double wx = trap.secular_axial;
    const double rf = trap.rf_frequency / wx;  // scaled drive frequency
    const double ry = trap.secular_y / wx;
    const double rz = trap.secular_z / wx;
    const double ax = 4.0 / (rf * rf);  // static axial term: curvature 1 in scaled units

    auto residual = [&](double q, double b, double& fy, double& fz) {
        const double ay = -0.5 * ax - b;
        const double az = -0.5 * ax + b;
        fy = floquet_secular_frequency(ay, q, rf) - ry;
        fz = floquet_secular_frequency(az, q, rf) - rz;
    };

    // lowest-order Mathieu initial guess
    const double mean_sq = 0.5 * (ry * ry + rz * rz) * 4.0 / (rf * rf);
    double q = std::sqrt(std::max(1e-12, 2.0 * (mean_sq + 0.5 * ax)));
    double b = 2.0 * (rz * rz - ry * ry) / (rf * rf);

    double fy, fz;
    residual(q, b, fy, fz);
    for (int iter = 0; iter < 60; ++iter) {
        if (std::abs(fy) / ry < 1e-10 && std::abs(fz) / rz < 1e-10) break;
        const double dq = 1e-7 * std::max(1.0, std::abs(q));
        const double db = 1e-7 * std::max(1e-3, std::abs(b));
        double fy_q, fz_q, fy_b, fz_b;
        residual(q + dq, b, fy_q, fz_q);
        residual(q, b + db, fy_b, fz_b);
        const double j11 = (fy_q - fy) / dq, j12 = (fy_b - fy) / db;
        const double j21 = (fz_q - fz) / dq, j22 = (fz_b - fz) / db;
        const double det = j11 * j22 - j12 * j21;
        if (std::abs(det) < 1e-30)
            throw NoConvergence("full-rf calibration: singular Jacobian");
        q -= (j22 * fy - j12 * fz) / det;
        b -= (-j21 * fy + j11 * fz) / det;
        if (q < 0.0) q = std::abs(q);
        residual(q, b, fy, fz);
    }
    if (std::abs(fy) / ry > 1e-6 || std::abs(fz) / rz > 1e-6)
        throw NoConvergence("full-rf calibration did not reach relative 1e-6");

    trap.mathieu_q = q;
    trap.mathieu_ay = -0.5 * ax - b;
    trap.mathieu_az = -0.5 * ax + b;
}

}  // namespace

TrapConfig make_trap(double rf_frequency, double omega_x, double omega_y, double omega_z,
                     TrapModel model) {
    if (!(rf_frequency > 0.0 && omega_x > 0.0 && omega_y > 0.0 && omega_z > 0.0))
        throw ConfigError("make_trap: all frequencies must be > 0");
    if (omega_x >= std::min(omega_y, omega_z) || omega_y > omega_z)
        throw OrderingViolation("make_trap: require omega_x < omega_y <= omega_z");

    TrapConfig trap;
    trap.rf_frequency = rf_frequency;
    trap.secular_axial = omega_x;
    trap.secular_y = omega_y;
    trap.secular_z = omega_z;
    trap.model = model;

    if (model == TrapModel::FullRF) {
        if (trap.q_radial() >= 0.9)
            throw StabilityViolation("make_trap: q_radial = " + std::to_string(trap.q_radial()) +
                                     " >= 0.9");
        calibrate_full_rf(trap);
    }
    return trap;
}

ScaledTrap to_dimensionless(const TrapConfig& trap, const UnitScale& scale) {
    const double wx = 1.0 / scale.time;
    ScaledTrap s;
    s.model = trap.model;
    const double ry = trap.secular_y / wx;
    const double rz = trap.secular_z / wx;
    s.cy = ry * ry;
    s.cz = rz * rz;
    if (trap.model == TrapModel::FullRF) {
        s.rf_omega = trap.rf_frequency / wx;
        s.q = trap.mathieu_q;
        s.ay = trap.mathieu_ay;
        s.az = trap.mathieu_az;
    }
    return s;
}

TrapConfig to_si(const ScaledTrap& trap, const TrapConfig& reference) {
    TrapConfig out = reference;
    out.model = trap.model;
    out.secular_y = std::sqrt(trap.cy) * reference.secular_axial;
    out.secular_z = std::sqrt(trap.cz) * reference.secular_axial;
    out.mathieu_q = trap.q;
    out.mathieu_ay = trap.ay;
    out.mathieu_az = trap.az;
    return out;
}

ScaledLaser to_dimensionless(const LaserConfig& laser, const SpeciesConfig& species,
                             const UnitScale& scale) {
    laser.validate();
    const double omega_x = 1.0 / scale.time;
    ScaledLaser s;
    s.linewidth = species.natural_linewidth / omega_x;
    s.detuning = laser.detuning / omega_x;
    s.saturation = laser.saturation;
    s.k = laser.wavenumber * scale.length * laser.beam_direction;
    s.recoil_dv = phys::hbar * laser.wavenumber / (species.mass * scale.velocity);
    return s;
}

}  // namespace kinktrap
