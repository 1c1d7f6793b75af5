#include "kinktrap/potential.hpp"

#include <cmath>
#include <string>

#include "kinktrap/errors.hpp"

namespace kinktrap {

namespace {

void check_pair(double r2, int i, int j) {
    if (r2 < kCoincidenceThreshold * kCoincidenceThreshold)
        throw CoincidentIons("ions " + std::to_string(i) + " and " + std::to_string(j) +
                             " closer than coincidence threshold");
}

}  // namespace

double potential_energy(const Positions& pos, const ScaledTrap& trap) {
    const int n = static_cast<int>(pos.size());
    double v = 0.0;
    for (const auto& r : pos)
        v += 0.5 * (r.x() * r.x() + trap.cy * r.y() * r.y() + trap.cz * r.z() * r.z());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double r2 = (pos[i] - pos[j]).squaredNorm();
            check_pair(r2, i, j);
            v += 1.0 / std::sqrt(r2);
        }
    }
    return v;
}

Eigen::VectorXd potential_gradient(const Positions& pos, const ScaledTrap& trap) {
    const int n = static_cast<int>(pos.size());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(3 * n);
    for (int i = 0; i < n; ++i) {
        g[3 * i + 0] = pos[i].x();
        g[3 * i + 1] = trap.cy * pos[i].y();
        g[3 * i + 2] = trap.cz * pos[i].z();
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const Eigen::Vector3d d = pos[i] - pos[j];
            const double r2 = d.squaredNorm();
            check_pair(r2, i, j);
            const Eigen::Vector3d f = d / (r2 * std::sqrt(r2));  // -dV/dr_i of the pair
            for (int a = 0; a < 3; ++a) {
                g[3 * i + a] -= f[a];
                g[3 * j + a] += f[a];
            }
        }
    }
    return g;
}

Eigen::MatrixXd potential_hessian(const Positions& pos, const ScaledTrap& trap) {
    const int n = static_cast<int>(pos.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3 * n, 3 * n);
    for (int i = 0; i < n; ++i) {
        h(3 * i + 0, 3 * i + 0) = 1.0;
        h(3 * i + 1, 3 * i + 1) = trap.cy;
        h(3 * i + 2, 3 * i + 2) = trap.cz;
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const Eigen::Vector3d d = pos[i] - pos[j];
            const double r2 = d.squaredNorm();
            check_pair(r2, i, j);
            const double r = std::sqrt(r2);
            const double inv_r3 = 1.0 / (r2 * r);
            const double inv_r5 = inv_r3 / r2;
            // pair block: 3 d d^T / r^5 - I / r^3
            Eigen::Matrix3d block = 3.0 * inv_r5 * (d * d.transpose());
            block.diagonal().array() -= inv_r3;
            h.block<3, 3>(3 * i, 3 * i) += block;
            h.block<3, 3>(3 * j, 3 * j) += block;
            h.block<3, 3>(3 * i, 3 * j) -= block;
            h.block<3, 3>(3 * j, 3 * i) -= block;
        }
    }
    return h;
}

void total_force(const Positions& pos, const ScaledTrap& trap, double t,
                 std::vector<Eigen::Vector3d>& force) {
    const int n = static_cast<int>(pos.size());
    force.assign(n, Eigen::Vector3d::Zero());
    const Eigen::Vector3d k = trap.curvature(t);
    for (int i = 0; i < n; ++i) force[i] = -k.cwiseProduct(pos[i]);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const Eigen::Vector3d d = pos[i] - pos[j];
            const double r2 = d.squaredNorm();
            check_pair(r2, i, j);
            const Eigen::Vector3d f = d / (r2 * std::sqrt(r2));
            force[i] += f;
            force[j] -= f;
        }
    }
}

}  // namespace kinktrap
