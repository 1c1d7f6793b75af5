// Potential energy surface of N ions in the secular (harmonic) trap model:
//   V = sum_i 1/2 (x_i^2 + cy y_i^2 + cz z_i^2) + sum_{i<j} 1/r_ij
// in scaled units. Analytic gradient and Hessian; used by statics, modes and
// the Harmonic branch of the dynamics.
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "kinktrap/model.hpp"

namespace kinktrap {

using Positions = std::vector<Eigen::Vector3d>;

inline constexpr double kCoincidenceThreshold = 1e-9;

double potential_energy(const Positions& pos, const ScaledTrap& trap);

// Gradient dV/dr flattened as (ion, axis). Throws CoincidentIons below the
// pair-distance threshold.
Eigen::VectorXd potential_gradient(const Positions& pos, const ScaledTrap& trap);

// 3N x 3N symmetric Hessian of V (mass-weighted trivially since m = 1).
Eigen::MatrixXd potential_hessian(const Positions& pos, const ScaledTrap& trap);

// Coulomb + trap force; exact action-reaction for the pair terms. The trap
// part honors the FullRF drive at time t.
void total_force(const Positions& pos, const ScaledTrap& trap, double t,
                 std::vector<Eigen::Vector3d>& force);

}  // namespace kinktrap
