#include "kinktrap/dynamics.hpp"

#include <cmath>

#include "kinktrap/errors.hpp"

namespace kinktrap {

double SystemState::kinetic_energy() const {
    double ke = 0.0;
    for (const auto& v : velocities) ke += 0.5 * v.squaredNorm();
    return ke;
}

void SystemState::validate() const {
    if (positions.empty()) throw PhysicsError("state: N must be >= 1");
    if (positions.size() != velocities.size())
        throw PhysicsError("state: positions/velocities size mismatch");
    const int n = this->n();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if ((positions[i] - positions[j]).norm() <= kCoincidenceThreshold)
                throw CoincidentIons("state: ions " + std::to_string(i) + "," +
                                     std::to_string(j) + " coincident");
}

void cooling_force(const std::vector<Eigen::Vector3d>& velocities, const CoolingParams& cooling,
                   std::vector<Eigen::Vector3d>& force) {
    force.assign(velocities.size(), Eigen::Vector3d::Zero());
    if (std::holds_alternative<std::monostate>(cooling)) return;
    if (const auto* visc = std::get_if<ViscousDamping>(&cooling)) {
        for (std::size_t i = 0; i < velocities.size(); ++i) force[i] = -visc->gamma * velocities[i];
        return;
    }
    const auto& dopp = std::get<DopplerScattering>(cooling);
    for (std::size_t i = 0; i < velocities.size(); ++i)
        force[i] = dopp.laser.mean_force(velocities[i]);
}

namespace {

void check_timestep(const ScaledTrap& trap, double dt) {
    if (!(dt > 0.0)) throw TimestepTooLarge("dt must be > 0");
    if (trap.model == TrapModel::FullRF && dt > trap.rf_period() / 50.0)
        throw TimestepTooLarge("FullRF requires dt <= (2 pi / Omega_rf)/50");
}

}  // namespace

void step_verlet(SystemState& state, const ScaledTrap& trap, double dt) {
    check_timestep(trap, dt);
    static thread_local std::vector<Eigen::Vector3d> force;
    total_force(state.positions, trap, state.time, force);
    const int n = state.n();
    for (int i = 0; i < n; ++i) {
        state.velocities[i] += 0.5 * dt * force[i];
        state.positions[i] += dt * state.velocities[i];
    }
    total_force(state.positions, trap, state.time + dt, force);
    for (int i = 0; i < n; ++i) state.velocities[i] += 0.5 * dt * force[i];
    state.time += dt;
}

Integrator::Integrator(const ScaledTrap& trap, double dt) : trap_(trap), dt_(dt) {
    check_timestep(trap, dt);
}

void Integrator::step(SystemState& state, Rng* rng) {
    const int n = state.n();
    // force_ caches the conservative part only; the velocity-dependent
    // cooling force is re-evaluated from the live velocities.
    if (!have_force_ || force_time_ != state.time || static_cast<int>(force_.size()) != n)
        total_force(state.positions, trap_, state.time, force_);
    cooling_force(state.velocities, cooling_, cool_);
    for (int i = 0; i < n; ++i) {
        state.velocities[i] += 0.5 * dt_ * (force_[i] + cool_[i]);
        state.positions[i] += dt_ * state.velocities[i];
    }
    total_force(state.positions, trap_, state.time + dt_, new_force_);
    cooling_force(state.velocities, cooling_, cool_);  // half-step velocities
    for (int i = 0; i < n; ++i)
        state.velocities[i] += 0.5 * dt_ * (new_force_[i] + cool_[i]);
    state.time += dt_;

    // stochastic recoil: Poisson-distributed hbar-k kicks in random directions
    if (const auto* dopp = std::get_if<DopplerScattering>(&cooling_); dopp && dopp->recoil_on) {
        if (rng == nullptr) throw PhysicsError("recoil kicks require an rng");
        for (int i = 0; i < n; ++i) {
            const double mean = dopp->laser.scattering_rate(state.velocities[i]) * dt_;
            const int kicks = rng->poisson(mean);
            for (int k = 0; k < kicks; ++k)
                state.velocities[i] += dopp->laser.recoil_dv * rng->unit_vector();
        }
    }

    force_.swap(new_force_);
    have_force_ = true;
    force_time_ = state.time;
}

void Integrator::run(SystemState& state, int steps, Rng* rng) {
    for (int i = 0; i < steps; ++i) step(state, rng);
}

Trajectory simulate(const SystemState& initial, const ScaledTrap& trap,
                    const CoolingParams& cooling, double duration, double dt, int stride,
                    std::uint64_t seed) {
    initial.validate();
    if (duration < 0.0) throw PhysicsError("simulate: duration must be >= 0");
    if (stride < 1) throw PhysicsError("simulate: stride must be >= 1");

    Trajectory traj;
    traj.dt = dt;
    traj.stride = stride;
    traj.seed = seed;
    traj.frames.push_back(initial);
    if (duration == 0.0) return traj;

    Integrator integrator(trap, dt);
    integrator.set_cooling(cooling);
    Rng rng(seed);
    SystemState state = initial;
    const long steps = static_cast<long>(std::ceil(duration / dt - 1e-12));
    for (long s = 1; s <= steps; ++s) {
        integrator.step(state, &rng);
        if (s % stride == 0 || s == steps) {
            for (const auto& r : state.positions)
                if (!r.allFinite())
                    throw NonFinite("simulate: non-finite coordinate at t=" +
                                    std::to_string(state.time));
            traj.frames.push_back(state);
        }
    }
    return traj;
}

double total_energy(const SystemState& state, const ScaledTrap& trap) {
    return state.kinetic_energy() + potential_energy(state.positions, trap.harmonic_equivalent());
}

}  // namespace kinktrap
