// Shared fixtures for the test suites.
#pragma once

#include "kinktrap/config.hpp"

namespace kinktrap::testing {

// Default model: Mg-24, omega_x = 2pi 56 kHz, omega_y = 2pi 610 kHz,
// omega_z/omega_y = 1.05, harmonic trap.
inline const ModelBundle& default_model() {
    static const ModelBundle bundle = build_model(RunConfig{});
    return bundle;
}

inline ModelBundle model_with(double radial_y_hz, double ratio,
                              TrapModel model = TrapModel::Harmonic) {
    RunConfig config;
    config.radial_y_hz = radial_y_hz;
    config.radial_ratio = ratio;
    config.model = model;
    return build_model(config);
}

}  // namespace kinktrap::testing
