// N-ion motion: velocity-Verlet integration in the full RF or harmonic trap,
// viscous and Doppler-scattering cooling, trajectory recording.
#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "kinktrap/model.hpp"
#include "kinktrap/potential.hpp"
#include "kinktrap/rng.hpp"

namespace kinktrap {

struct SystemState {
    Positions positions;
    std::vector<Eigen::Vector3d> velocities;
    double time = 0.0;

    int n() const { return static_cast<int>(positions.size()); }
    double kinetic_energy() const;
    void validate() const;

    static SystemState at_rest(Positions pos) {
        SystemState s;
        s.velocities.assign(pos.size(), Eigen::Vector3d::Zero());
        s.positions = std::move(pos);
        return s;
    }
};

struct Trajectory {
    std::vector<SystemState> frames;
    double dt = 0.0;
    int stride = 1;
    std::uint64_t seed = 0;

    double duration() const {
        return frames.empty() ? 0.0 : frames.back().time - frames.front().time;
    }
};

struct ViscousDamping {
    double gamma = 0.0;  // 1/scaled-time
};

struct DopplerScattering {
    ScaledLaser laser;
    bool recoil_on = true;
};

using CoolingParams = std::variant<std::monostate, ViscousDamping, DopplerScattering>;

// Cooling force per ion for the configured mode; Doppler recoil kicks are
// applied separately at the end of each step (Poisson at the instantaneous
// scattering rate, isotropic direction, magnitude hbar k).
void cooling_force(const std::vector<Eigen::Vector3d>& velocities, const CoolingParams& cooling,
                   std::vector<Eigen::Vector3d>& force);

// One velocity-Verlet step under the trap + Coulomb forces only. Throws
// TimestepTooLarge in FullRF mode when dt exceeds one fiftieth of an RF
// period.
void step_verlet(SystemState& state, const ScaledTrap& trap, double dt);

// Stepper with persistent force storage; avoids reallocating per step and
// supports cooling and recoil. The velocity-dependent force is evaluated at
// the half-step velocity.
class Integrator {
  public:
    Integrator(const ScaledTrap& trap, double dt);

    void set_cooling(CoolingParams cooling) { cooling_ = std::move(cooling); }

    void step(SystemState& state, Rng* rng = nullptr);
    void run(SystemState& state, int steps, Rng* rng = nullptr);

    const ScaledTrap& trap() const { return trap_; }
    double dt() const { return dt_; }

  private:
    ScaledTrap trap_;
    double dt_;
    CoolingParams cooling_;
    std::vector<Eigen::Vector3d> force_, cool_, new_force_;
    bool have_force_ = false;
    double force_time_ = -1.0;
};

// Integrates for `duration`, recording a snapshot every `stride` steps
// (including the initial state). Deterministic for a given seed.
Trajectory simulate(const SystemState& initial, const ScaledTrap& trap,
                    const CoolingParams& cooling, double duration, double dt, int stride,
                    std::uint64_t seed);

// Total mechanical energy in the harmonic trap model (tests, diagnostics).
double total_energy(const SystemState& state, const ScaledTrap& trap);

}  // namespace kinktrap
