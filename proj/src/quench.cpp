#include "kinktrap/quench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <future>

#include "kinktrap/errors.hpp"

namespace kinktrap {

SystemState random_cloud(int n, double kT, const ScaledTrap& trap, Rng& rng) {
    if (n < 1) throw PhysicsError("random_cloud: N must be >= 1");
    if (!(kT > 0.0)) throw PhysicsError("random_cloud: temperature must be > 0");

    // ellipsoid: zero-temperature crystal envelope plus the thermal width
    // (a bare thermal ellipsoid would overlap the space-charge volume at
    // crystal densities)
    const Eigen::VectorXd chain = linear_chain(n);
    const double thermal = std::sqrt(5.0 * kT);
    const double rx = (n > 1 ? chain[n - 1] * 1.15 : 0.0) + thermal;
    const double ry = 0.3 + thermal / std::sqrt(trap.cy);
    const double rz = 0.3 + thermal / std::sqrt(trap.cz);
    const double min_dist = 0.3;

    SystemState state;
    state.positions.resize(n);
    state.velocities.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int attempt = 0;; ++attempt) {
            Eigen::Vector3d p;
            do {
                p = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
            } while (p.squaredNorm() > 1.0);
            p = {p.x() * rx, p.y() * ry, p.z() * rz};
            bool clear = true;
            for (int j = 0; j < i; ++j) {
                if ((state.positions[j] - p).norm() < min_dist) {
                    clear = false;
                    break;
                }
            }
            if (clear || attempt > 500) {
                state.positions[i] = p;
                break;
            }
        }
        const double sigma_v = std::sqrt(kT);
        state.velocities[i] = {sigma_v * rng.normal(), sigma_v * rng.normal(),
                               sigma_v * rng.normal()};
    }
    state.validate();
    return state;
}

namespace {

int quenched_multiplicity(const SystemState& state, const ScaledTrap& trap, double dt,
                          double y_floor) {
    // strong short damping instead of a full relax: cheap and adequate for
    // counting flips on a still-thermal state
    SystemState copy = state;
    Integrator damp(trap, dt);
    damp.set_cooling(ViscousDamping{8.0});
    damp.run(copy, static_cast<int>(8.0 / dt));
    return static_cast<int>(kink_scan(copy.positions, y_floor).size());
}

}  // namespace

TrialOutcome quench_trial(int n, const ScaledTrap& trap, const DopplerScattering& cooling,
                          const QuenchSchedule& schedule, const ClassifyThresholds& thr,
                          std::uint64_t seed) {
    if (!(schedule.kb_td > 0.0)) throw ConfigError("quench: schedule.kb_td must be set");
    const auto wall_start = std::chrono::steady_clock::now();

    TrialOutcome outcome;
    outcome.n_ions = n;
    outcome.seed = seed;

    Rng rng(seed);
    SystemState state = random_cloud(n, schedule.t_init * schedule.kb_td, trap, rng);
    const double dt = schedule.dt;

    const auto log_multiplicity = [&] {
        const int mult = quenched_multiplicity(state, trap, dt, thr.linear);
        outcome.multiplicity_history.push_back({state.time, mult});
        outcome.max_transient_multiplicity = std::max(outcome.max_transient_multiplicity, mult);
        return mult;
    };

    // phase 1: viscous ramp, gamma rising linearly to ramp_gamma
    {
        const int chunks = 50;
        const int steps = std::max(1, static_cast<int>(schedule.ramp_time / chunks / dt));
        for (int c = 0; c < chunks; ++c) {
            Integrator ramp(trap, dt);
            ramp.set_cooling(ViscousDamping{schedule.ramp_gamma * (c + 0.5) / chunks});
            ramp.run(state, steps, &rng);
        }
    }

    // phase 2: noisy Doppler settling with periodic multiplicity logging
    Integrator settle(trap, dt);
    settle.set_cooling(cooling);
    {
        const int blocks =
            std::max(1, static_cast<int>(schedule.settle_time / schedule.multiplicity_log_interval));
        const int steps = static_cast<int>(schedule.settle_time / blocks / dt);
        for (int b = 0; b < blocks; ++b) {
            settle.run(state, steps, &rng);
            log_multiplicity();
        }
    }

    // phase 3: remelt-recrystallize while a multi-kink state persists
    DopplerScattering melt_cooling = cooling;
    melt_cooling.laser.recoil_dv *= schedule.melt_boost;
    while (outcome.remelts < schedule.max_remelts) {
        if (log_multiplicity() <= 1) break;
        settle.run(state, static_cast<int>(schedule.grace_time / dt), &rng);
        if (log_multiplicity() <= 1) break;
        ++outcome.remelts;
        Integrator melt(trap, dt);
        melt.set_cooling(melt_cooling);
        melt.run(state, static_cast<int>(schedule.melt_time / dt), &rng);
        {
            const int chunks = 25;
            const int steps = std::max(1, static_cast<int>(schedule.refreeze_time / chunks / dt));
            for (int c = 0; c < chunks; ++c) {
                Integrator refreeze(trap, dt);
                refreeze.set_cooling(ViscousDamping{schedule.ramp_gamma * (c + 0.5) / chunks});
                refreeze.run(state, steps, &rng);
            }
        }
        settle.run(state, static_cast<int>(schedule.remelt_settle / dt), &rng);
        log_multiplicity();
    }

    // phase 4: viscous cold snap, then the crystallization check
    Integrator snap(trap, dt);
    snap.set_cooling(ViscousDamping{schedule.snap_gamma});
    snap.run(state, static_cast<int>(schedule.snap_time / dt), &rng);

    EquilibriumConfig eq_prev = relax(state.positions, trap);
    auto flips_prev = kink_scan(eq_prev.positions, thr.linear);
    snap.run(state, static_cast<int>(schedule.stationarity_window / dt), &rng);
    EquilibriumConfig eq = relax(state.positions, trap);
    auto flips = kink_scan(eq.positions, thr.linear);

    outcome.final_temperature =
        2.0 * state.kinetic_energy() / (3.0 * n) / schedule.kb_td;
    outcome.simulated_time = state.time;
    outcome.structure = classify(eq, thr.linear, thr.plane).cls;
    outcome.multiplicity = static_cast<int>(flips.size());
    outcome.flips = flips;
    outcome.multiplicity_history.push_back({state.time, outcome.multiplicity});
    outcome.max_transient_multiplicity =
        std::max(outcome.max_transient_multiplicity, outcome.multiplicity);

    const bool stationary =
        flips_prev.size() == flips.size() &&
        classify(eq_prev, thr.linear, thr.plane).cls == outcome.structure;
    if (!stationary) {
        outcome.failure = "structure not stationary within budget";
    } else if (outcome.final_temperature >= schedule.crystallized_temp) {
        outcome.failure = "kinetic temperature above the crystallization bound";
    } else if (outcome.multiplicity >= 2) {
        outcome.failure = "multi-kink state persisted through the remelt budget";
    } else {
        outcome.crystallized = true;
    }

    outcome.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return outcome;
}

OccurrenceTable kink_statistics(const std::vector<int>& n_list, int trials_per_n,
                                std::uint64_t base_seed, const ScaledTrap& trap,
                                const DopplerScattering& cooling, const QuenchSchedule& schedule,
                                const ClassifyThresholds& thr, int workers,
                                std::vector<TrialOutcome>* all_outcomes) {
    if (trials_per_n < 1) throw ConfigError("kink_statistics: trials_per_n must be >= 1");

    struct Task {
        int n;
        int trial;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (int n : n_list)
        for (int t = 0; t < trials_per_n; ++t)
            tasks.push_back({n, t, derive_seed(base_seed, static_cast<std::uint64_t>(n),
                                               static_cast<std::uint64_t>(t))});

    std::vector<TrialOutcome> outcomes(tasks.size());
    const auto run_task = [&](std::size_t i) {
        outcomes[i] = quench_trial(tasks[i].n, trap, cooling, schedule, thr, tasks[i].seed);
    };
    if (workers <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::future<void>> pool;
        for (int w = 0; w < workers; ++w)
            pool.push_back(std::async(std::launch::async, [&] {
                for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1))
                    run_task(i);
            }));
        for (auto& f : pool) f.get();
    }

    OccurrenceTable table;
    table.base_seed = base_seed;
    table.trials_per_n = trials_per_n;
    for (int n : n_list) {
        OccurrenceRow row;
        row.n_ions = n;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (tasks[i].n != n) continue;
            ++row.trials;
            const TrialOutcome& o = outcomes[i];
            if (!o.crystallized) continue;
            ++row.n_crystallized;
            if (o.multiplicity == 0) ++row.n_zigzag;
            else if (o.multiplicity == 1) ++row.n_one_kink;
            else ++row.n_multi;
        }
        if (row.n_crystallized > 0) {
            row.p_zigzag = static_cast<double>(row.n_zigzag) / row.n_crystallized;
            row.p_one_kink = static_cast<double>(row.n_one_kink) / row.n_crystallized;
            row.p_multi = static_cast<double>(row.n_multi) / row.n_crystallized;
            row.sigma_one_kink =
                std::sqrt(row.p_one_kink * (1.0 - row.p_one_kink) / row.n_crystallized);
        }
        row.p_failed = static_cast<double>(row.trials - row.n_crystallized) / row.trials;
        table.rows.push_back(row);
    }
    if (all_outcomes != nullptr) *all_outcomes = std::move(outcomes);
    return table;
}

}  // namespace kinktrap
