// Cloud-to-crystal quench trials and kink occurrence statistics.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kinktrap/dynamics.hpp"
#include "kinktrap/statics.hpp"

namespace kinktrap {

// All times in scaled units (1/omega_x), all temperatures in units of T_D.
struct QuenchSchedule {
    double kb_td = 0.0;            // k_B T_D in scaled energy units (required)
    double t_init = 50.0;          // initial cloud temperature, x T_D
    double ramp_time = 200.0;      // viscous-damping ramp duration
    double ramp_gamma = 1.0;       // final damping rate of the ramp
    double settle_time = 500.0;    // noisy Doppler settling
    double grace_time = 200.0;     // extra settling before declaring a multi-kink state
    double melt_time = 250.0;      // remelt-burst duration (recoil boosted)
    double melt_boost = 5.0;       // recoil amplitude multiplier during remelt
    double refreeze_time = 100.0;  // viscous ramp after a remelt
    double remelt_settle = 400.0;  // noisy settling after a remelt
    int max_remelts = 8;
    double snap_time = 100.0;      // final viscous cold snap
    double snap_gamma = 1.0;
    double stationarity_window = 50.0;
    double crystallized_temp = 2.0;  // kinetic temperature bound, x T_D
    double multiplicity_log_interval = 50.0;
    double dt = 0.01;
};

struct MultiplicityEvent {
    double time = 0.0;
    int multiplicity = 0;
};

struct TrialOutcome {
    int n_ions = 0;
    std::uint64_t seed = 0;
    bool crystallized = false;
    std::string failure;               // set when not crystallized
    StructureClass structure = StructureClass::Linear;
    int multiplicity = 0;              // final alternation-flip count
    std::vector<KinkFlip> flips;       // final defects
    int remelts = 0;
    int max_transient_multiplicity = 0;
    std::vector<MultiplicityEvent> multiplicity_history;
    double final_temperature = 0.0;    // x T_D
    double simulated_time = 0.0;
    double wall_seconds = 0.0;
};

struct OccurrenceRow {
    int n_ions = 0;
    int trials = 0;
    int n_crystallized = 0;
    int n_zigzag = 0;    // defect-free
    int n_one_kink = 0;
    int n_multi = 0;
    double p_zigzag = 0.0;
    double p_one_kink = 0.0;
    double p_multi = 0.0;
    double p_failed = 0.0;        // failures / trials
    double sigma_one_kink = 0.0;  // 1-sigma binomial on p_one_kink
};

struct OccurrenceTable {
    std::vector<OccurrenceRow> rows;
    std::uint64_t base_seed = 0;
    int trials_per_n = 0;
};

// Positions uniform in an ellipsoid spanning the crystal extent plus the
// thermal width; velocities Maxwell-Boltzmann. kT in scaled energy units.
SystemState random_cloud(int n, double kT, const ScaledTrap& trap, Rng& rng);

// One seeded quench: ramped viscous cooling of a hot cloud, noisy Doppler
// settling, remelt-recrystallize cycles while a multi-kink state persists,
// viscous cold snap, stationarity check, final classification.
TrialOutcome quench_trial(int n, const ScaledTrap& trap, const DopplerScattering& cooling,
                          const QuenchSchedule& schedule, const ClassifyThresholds& thr,
                          std::uint64_t seed);

// Aggregates quench_trial over N values with deterministic per-trial seeds
// derived from base_seed; trial outcomes are identical for any worker count.
OccurrenceTable kink_statistics(const std::vector<int>& n_list, int trials_per_n,
                                std::uint64_t base_seed, const ScaledTrap& trap,
                                const DopplerScattering& cooling, const QuenchSchedule& schedule,
                                const ClassifyThresholds& thr, int workers = 1,
                                std::vector<TrialOutcome>* all_outcomes = nullptr);

}  // namespace kinktrap
