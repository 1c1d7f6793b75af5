#include "kinktrap/statics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "kinktrap/errors.hpp"
#include "kinktrap/rng.hpp"

namespace kinktrap {

const char* to_string(StructureClass cls) {
    switch (cls) {
        case StructureClass::Linear: return "linear";
        case StructureClass::Zigzag: return "zigzag";
        case StructureClass::ThreeD: return "three_d";
        case StructureClass::Complex: return "complex";
    }
    return "unknown";
}

std::vector<int> axial_order(const Positions& positions) {
    std::vector<int> order(positions.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return positions[a].x() < positions[b].x(); });
    return order;
}

double local_spacing(const Positions& positions, double x0) {
    const auto order = axial_order(positions);
    const int n = static_cast<int>(order.size());
    if (n < 2) return 0.0;
    // spacing of the bond whose midpoint is nearest to x0
    double best = std::abs(positions[order[1]].x() - positions[order[0]].x());
    double best_dist = std::numeric_limits<double>::max();
    for (int i = 0; i + 1 < n; ++i) {
        const double xa = positions[order[i]].x();
        const double xb = positions[order[i + 1]].x();
        const double mid = 0.5 * (xa + xb);
        if (std::abs(mid - x0) < best_dist) {
            best_dist = std::abs(mid - x0);
            best = xb - xa;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// relaxation
// ---------------------------------------------------------------------------

namespace {

// Active degrees of freedom (all, or x/y only for the planar branch).
std::vector<int> active_dofs(int n, bool planar) {
    std::vector<int> idx;
    idx.reserve(planar ? 2 * n : 3 * n);
    for (int i = 0; i < n; ++i) {
        idx.push_back(3 * i);
        idx.push_back(3 * i + 1);
        if (!planar) idx.push_back(3 * i + 2);
    }
    return idx;
}

Eigen::VectorXd gather(const Eigen::VectorXd& full, const std::vector<int>& idx) {
    Eigen::VectorXd out(idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a) out[a] = full[idx[a]];
    return out;
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& full, const std::vector<int>& idx) {
    Eigen::MatrixXd out(idx.size(), idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = 0; b < idx.size(); ++b) out(a, b) = full(idx[a], idx[b]);
    return out;
}

void scatter_add(Positions& pos, const std::vector<int>& idx, const Eigen::VectorXd& delta,
                 double factor = 1.0) {
    for (std::size_t a = 0; a < idx.size(); ++a)
        pos[idx[a] / 3][idx[a] % 3] += factor * delta[a];
}

// FIRE minimizer (adaptive-timestep inertial descent), deterministic.
// Returns once the active force inf-norm falls below `target` or the step
// budget runs out.
void fire_descent(Positions& pos, const ScaledTrap& trap, bool planar, double target,
                  int max_steps) {
    const int n = static_cast<int>(pos.size());
    const double dt_max = 0.1;
    double dt = 0.02;
    double alpha = 0.1;
    int since_uphill = 0;
    std::vector<Eigen::Vector3d> v(n, Eigen::Vector3d::Zero());
    std::vector<Eigen::Vector3d> f(n);

    auto eval_force = [&] {
        total_force(pos, trap, 0.0, f);
        if (planar)
            for (auto& fi : f) fi.z() = 0.0;
    };

    eval_force();
    for (int step = 0; step < max_steps; ++step) {
        double power = 0.0;
        double fmax = 0.0;
        for (int i = 0; i < n; ++i) {
            power += f[i].dot(v[i]);
            fmax = std::max(fmax, f[i].cwiseAbs().maxCoeff());
        }
        if (fmax < target) return;
        if (power > 0.0) {
            double vnorm = 0.0, fnorm = 0.0;
            for (int i = 0; i < n; ++i) {
                vnorm += v[i].squaredNorm();
                fnorm += f[i].squaredNorm();
            }
            vnorm = std::sqrt(vnorm);
            fnorm = std::sqrt(fnorm);
            const double mix = (fnorm > 0.0) ? alpha * vnorm / fnorm : 0.0;
            for (int i = 0; i < n; ++i) v[i] = (1.0 - alpha) * v[i] + mix * f[i];
            if (++since_uphill > 5) {
                dt = std::min(dt * 1.1, dt_max);
                alpha *= 0.99;
            }
        } else {
            for (auto& vi : v) vi.setZero();
            dt *= 0.5;
            alpha = 0.1;
            since_uphill = 0;
        }
        // semi-implicit Euler with a displacement cap for hot starts
        for (int i = 0; i < n; ++i) {
            v[i] += dt * f[i];
            if (planar) v[i].z() = 0.0;
            Eigen::Vector3d dx = dt * v[i];
            const double len = dx.norm();
            if (len > 0.2) dx *= 0.2 / len;
            pos[i] += dx;
        }
        eval_force();
    }
}

// Damped Newton with Armijo backtracking on the energy. Returns true when the
// gradient target was met, false when stalled (caller resumes FIRE).
bool newton_polish(Positions& pos, const ScaledTrap& trap, const std::vector<int>& act,
                   double gradient_tol, int max_steps) {
    double energy = potential_energy(pos, trap);
    Eigen::VectorXd g = gather(potential_gradient(pos, trap), act);
    double lambda = 0.0;

    for (int iter = 0; iter < max_steps; ++iter) {
        if (g.norm() <= gradient_tol) return true;
        Eigen::MatrixXd h = gather(potential_hessian(pos, trap), act);
        if (lambda > 0.0) h.diagonal().array() += lambda;
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        Eigen::VectorXd step = ldlt.solve(-g);
        const double descent = g.dot(step);
        if (!step.allFinite() || descent >= 0.0) {
            lambda = (lambda == 0.0) ? 1e-4 : lambda * 10.0;
            if (lambda > 1e8) return false;
            continue;
        }
        const double max_comp = step.cwiseAbs().maxCoeff();
        if (max_comp > 0.5) step *= 0.5 / max_comp;

        // In the quadratic endgame the energy differences drown in roundoff;
        // accept on gradient decrease instead.
        if (g.norm() < 1e-6) {
            Positions trial = pos;
            scatter_add(trial, act, step);
            const Eigen::VectorXd gt = gather(potential_gradient(trial, trap), act);
            if (gt.norm() < g.norm()) {
                pos = trial;
                g = gt;
                lambda *= 0.25;
                continue;
            }
            lambda = (lambda == 0.0) ? 1e-4 : lambda * 10.0;
            if (lambda > 1e8) return false;
            continue;
        }

        double alpha = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            Positions trial = pos;
            scatter_add(trial, act, step, alpha);
            const double e_trial = potential_energy(trial, trap);
            if (e_trial <= energy + 1e-4 * alpha * g.dot(step)) {
                pos = trial;
                energy = e_trial;
                g = gather(potential_gradient(pos, trap), act);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (accepted) {
            lambda *= 0.25;
            if (lambda < 1e-12) lambda = 0.0;
        } else {
            lambda = (lambda == 0.0) ? 1e-4 : lambda * 10.0;
            if (lambda > 1e8) return false;
        }
    }
    return false;
}

}  // namespace

EquilibriumConfig relax(const Positions& initial, const ScaledTrap& trap,
                        const RelaxOptions& opts) {
    if (trap.model != TrapModel::Harmonic)
        throw PhysicsError("relax requires the harmonic trap model");
    if (initial.empty()) throw PhysicsError("relax: N must be >= 1");

    Positions pos = initial;
    const int n = static_cast<int>(pos.size());
    if (opts.planar)
        for (auto& r : pos) r.z() = 0.0;
    const std::vector<int> act = active_dofs(n, opts.planar);

    int escapes = 0;
    for (int round = 0; round < 2 * opts.max_saddle_escapes + 4; ++round) {
        fire_descent(pos, trap, opts.planar, opts.fire_gradient_tol, opts.max_fire_steps);
        if (!newton_polish(pos, trap, act, opts.gradient_tol, opts.max_newton_steps)) {
            // stalled in a flat region: resume FIRE at a tighter target
            fire_descent(pos, trap, opts.planar, opts.fire_gradient_tol * 0.01,
                         opts.max_fire_steps);
            if (!newton_polish(pos, trap, act, opts.gradient_tol, opts.max_newton_steps))
                throw NoConvergence("relax: Newton polish stalled");
        }

        const Eigen::MatrixXd h = gather(potential_hessian(pos, trap), act);
        EquilibriumConfig config;
        config.trap = trap;
        if (!opts.certify) {
            config.positions = pos;
            config.potential_energy = potential_energy(pos, trap);
            config.gradient_norm = gather(potential_gradient(pos, trap), act).norm();
            return config;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
        if (eig.eigenvalues()(0) >= -1e-8) {
            config.positions = pos;
            config.potential_energy = potential_energy(pos, trap);
            config.gradient_norm = gather(potential_gradient(pos, trap), act).norm();
            return config;
        }
        if (++escapes > opts.max_saddle_escapes)
            throw NoConvergence("relax: saddle escapes exhausted");
        // kick along the most negative mode; amplitude grows with repeated
        // escapes in case the first kick was below the barrier curvature scale
        const double amp = 0.02 * std::pow(2.0, (escapes - 1) / 3);
        scatter_add(pos, act, eig.eigenvectors().col(0), amp * std::sqrt(double(n)));
    }
    throw NoConvergence("relax: did not reach a certified minimum");
}

// ---------------------------------------------------------------------------
// classification and kink detection
// ---------------------------------------------------------------------------

namespace {

// Transverse principal axes via the second-moment matrix of (y, z); column 0
// is the dominant (in-plane) direction. Deterministic sign convention.
Eigen::Matrix2d transverse_axes(const Positions& positions) {
    Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
    for (const auto& r : positions) {
        const Eigen::Vector2d t(r.y(), r.z());
        m += t * t.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(m);
    Eigen::Matrix2d axes;
    axes.col(0) = eig.eigenvectors().col(1);  // larger variance = zigzag plane
    axes.col(1) = eig.eigenvectors().col(0);
    for (int c = 0; c < 2; ++c) {
        int imax = 0;
        axes.col(c).cwiseAbs().maxCoeff(&imax);
        if (axes(imax, c) < 0.0) axes.col(c) = -axes.col(c);
    }
    return axes;
}

struct AlignedView {
    std::vector<int> order;       // axial order
    std::vector<double> x, y, z;  // aligned coordinates in that order
    Eigen::Matrix2d axes;
};

AlignedView align(const Positions& positions) {
    AlignedView view;
    view.axes = transverse_axes(positions);
    view.order = axial_order(positions);
    const int n = static_cast<int>(view.order.size());
    view.x.resize(n);
    view.y.resize(n);
    view.z.resize(n);
    for (int k = 0; k < n; ++k) {
        const auto& r = positions[view.order[k]];
        const Eigen::Vector2d t(r.y(), r.z());
        view.x[k] = r.x();
        view.y[k] = view.axes.col(0).dot(t);
        view.z[k] = view.axes.col(1).dot(t);
    }
    return view;
}

std::vector<KinkFlip> scan_aligned(const AlignedView& view, double y_floor) {
    const int n = static_cast<int>(view.x.size());
    std::vector<KinkFlip> flips;
    int prev = -1;  // previous above-floor ion (by rank)
    for (int k = 0; k < n; ++k) {
        if (std::abs(view.y[k]) < y_floor) continue;
        if (prev >= 0) {
            // staggered order parameter phi_k = y_k * (-1)^k
            const double phi_prev = view.y[prev] * ((prev % 2 == 0) ? 1.0 : -1.0);
            const double phi_here = view.y[k] * ((k % 2 == 0) ? 1.0 : -1.0);
            if (phi_prev * phi_here < 0.0) {
                KinkFlip flip;
                const double x0 =
                    view.x[prev] + (view.x[k] - view.x[prev]) * phi_prev / (phi_prev - phi_here);
                flip.axial_position = x0;
                // core ions: actual bracketing pair by x (may include an
                // on-axis ion skipped by the signature)
                int left = prev, right = k;
                for (int m = prev + 1; m < k; ++m) {
                    if (view.x[m] <= x0) left = m;
                    else {
                        right = m;
                        break;
                    }
                }
                flip.core_ion_indices = {view.order[left], view.order[right]};
                flip.core_out_of_plane = std::max(std::abs(view.z[left]), std::abs(view.z[right]));
                flips.push_back(flip);
            }
        }
        prev = k;
    }
    return flips;
}

}  // namespace

std::vector<KinkFlip> kink_scan(const Positions& positions, double y_floor) {
    const AlignedView view = align(positions);
    auto flips = scan_aligned(view, y_floor);
    for (auto& flip : flips) {
        const double a = local_spacing(positions, flip.axial_position);
        flip.lattice_position = (a > 0.0) ? flip.axial_position / a : 0.0;
    }
    return flips;
}

KinkDescriptor detect_kink(const Positions& positions, double y_floor) {
    const AlignedView view = align(positions);
    const int n = static_cast<int>(view.x.size());

    // signature endpoints for the topological charge
    int first = -1, last = -1;
    for (int k = 0; k < n; ++k) {
        if (std::abs(view.y[k]) < y_floor) continue;
        if (first < 0) first = k;
        last = k;
    }

    auto flips = scan_aligned(view, y_floor);
    KinkDescriptor d;
    d.multiplicity = static_cast<int>(flips.size());
    if (first < 0 || first == last) return d;  // no zigzag section at all

    const auto sign_of = [&](int k) {
        const double phi = view.y[k] * ((k % 2 == 0) ? 1.0 : -1.0);
        return (phi > 0.0) ? 1 : -1;
    };
    d.topological_charge = (sign_of(last) - sign_of(first)) / 2;
    d.present = d.topological_charge != 0;

    if (d.multiplicity > 1)
        throw AmbiguousStructure("detect_kink: " + std::to_string(d.multiplicity) +
                                     " alternation flips present",
                                 d.multiplicity);
    if (d.multiplicity == 1) {
        const auto& flip = flips.front();
        d.axial_position = flip.axial_position;
        const double a = local_spacing(positions, flip.axial_position);
        d.lattice_position = (a > 0.0) ? flip.axial_position / a : 0.0;
        d.core_ion_indices = flip.core_ion_indices;
        d.core_out_of_plane_amplitude = flip.core_out_of_plane;
    }
    return d;
}

KinkDescriptor detect_kink(const EquilibriumConfig& config, const ClassifyThresholds& thr) {
    return detect_kink(config.positions, thr.linear);
}

StructureInfo classify(const Positions& positions, double linear_threshold,
                       double plane_threshold) {
    StructureInfo info;
    const AlignedView view = align(positions);
    const int n = static_cast<int>(view.x.size());

    double max_y = 0.0, max_z = 0.0;
    for (int k = 0; k < n; ++k) {
        max_y = std::max(max_y, std::abs(view.y[k]));
        max_z = std::max(max_z, std::abs(view.z[k]));
    }
    info.plane_axes = view.axes;
    info.transverse_amplitude = max_y;
    info.max_out_of_plane = max_z;

    if (max_y < linear_threshold && max_z < linear_threshold) {
        info.cls = StructureClass::Linear;
        return info;
    }

    // zigzag-like ordering: above-floor ions form one contiguous axial block
    // and the alternation signature flips at most twice
    int first = -1, last = -1, above = 0;
    for (int k = 0; k < n; ++k) {
        if (std::abs(view.y[k]) < linear_threshold) continue;
        if (first < 0) first = k;
        last = k;
        ++above;
    }
    const bool contiguous = (above > 0) && (last - first + 1 == above);
    info.flip_count = static_cast<int>(scan_aligned(view, linear_threshold).size());
    const bool ordered = contiguous && info.flip_count <= 2;

    if (!ordered) {
        info.cls = StructureClass::Complex;
        return info;
    }
    info.cls = (max_z >= plane_threshold) ? StructureClass::ThreeD : StructureClass::Zigzag;
    return info;
}

StructureInfo classify(const EquilibriumConfig& config, double linear_threshold,
                       double plane_threshold) {
    return classify(config.positions, linear_threshold, plane_threshold);
}

// ---------------------------------------------------------------------------
// starts, ground states, census
// ---------------------------------------------------------------------------

Eigen::VectorXd linear_chain(int n) {
    if (n < 1) throw PhysicsError("linear_chain: N must be >= 1");
    Eigen::VectorXd x(n);
    const double half_span = std::cbrt(3.0 * n);  // coarse initial extent
    for (int i = 0; i < n; ++i)
        x[i] = (n == 1) ? 0.0 : -half_span + 2.0 * half_span * i / (n - 1);

    for (int iter = 0; iter < 400; ++iter) {
        Eigen::VectorXd g = x;  // trap part
        Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const double d = x[i] - x[j];
                const double inv2 = 1.0 / (d * d);
                const double f = (d > 0.0 ? inv2 : -inv2);
                g[i] -= f;
                g[j] += f;
                const double k = 2.0 * inv2 / std::abs(d);
                h(i, i) += k;
                h(j, j) += k;
                h(i, j) -= k;
                h(j, i) -= k;
            }
        }
        if (g.norm() < 1e-13) break;
        Eigen::VectorXd step = h.ldlt().solve(-g);
        const double cap = 0.25 * half_span;
        const double mc = step.cwiseAbs().maxCoeff();
        if (mc > cap) step *= cap / mc;
        x += step;
    }
    std::sort(x.data(), x.data() + n);
    return x;
}

Positions chain_start(int n, const ScaledTrap& trap, double noise_amplitude,
                      std::uint64_t noise_seed) {
    (void)trap;
    const Eigen::VectorXd x = linear_chain(n);
    Rng rng(derive_seed(noise_seed, static_cast<std::uint64_t>(n)));
    Positions pos(n);
    for (int i = 0; i < n; ++i)
        pos[i] = {x[i], noise_amplitude * rng.normal(), noise_amplitude * rng.normal()};
    return pos;
}

Positions zigzag_ansatz(int n, const ScaledTrap& trap, double amplitude) {
    (void)trap;
    const Eigen::VectorXd x = linear_chain(n);
    Positions pos(n);
    for (int i = 0; i < n; ++i)
        pos[i] = {x[i], amplitude * ((i % 2 == 0) ? 1.0 : -1.0), 0.0};
    return pos;
}

EquilibriumConfig ground_state(int n, const ScaledTrap& trap, int restarts) {
    EquilibriumConfig best = relax(zigzag_ansatz(n, trap), trap);
    for (int r = 0; r < restarts; ++r) {
        Positions start = chain_start(n, trap, 0.03 * (r + 1),
                                      derive_seed(777, static_cast<std::uint64_t>(n), r + 1));
        try {
            EquilibriumConfig candidate = relax(start, trap);
            if (candidate.potential_energy < best.potential_energy - 1e-12) best = candidate;
        } catch (const NoConvergence&) {
            // a restart exploring a pathological basin is not fatal
        }
    }
    return best;
}

double linear_chain_transverse_eigenvalue(int n, const ScaledTrap& trap) {
    const Eigen::VectorXd x = linear_chain(n);
    // transverse block: H_ij = delta_ij (cy - sum_k 1/d_ik^3) + (1-delta_ij)/d_ij^3
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) h(i, i) = trap.cy;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double inv3 = 1.0 / std::pow(std::abs(x[i] - x[j]), 3);
            h(i, i) -= inv3;
            h(j, j) -= inv3;
            h(i, j) += inv3;
            h(j, i) += inv3;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    return eig.eigenvalues()(0);
}

EquilibriumConfig planar_zigzag(int n, const ScaledTrap& trap) {
    RelaxOptions opts;
    opts.planar = true;
    return relax(zigzag_ansatz(n, trap), trap, opts);
}

double out_of_plane_eigenvalue(const EquilibriumConfig& planar) {
    const int n = static_cast<int>(planar.positions.size());
    const Eigen::MatrixXd h = potential_hessian(planar.positions, planar.trap);
    Eigen::MatrixXd hz(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) hz(a, b) = h(3 * a + 2, 3 * b + 2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hz);
    return eig.eigenvalues()(0);
}

EquilibriumConfig census_ground_state(int n, const ScaledTrap& trap) {
    EquilibriumConfig planar = planar_zigzag(n, trap);
    if (out_of_plane_eigenvalue(planar) >= 0.0) return planar;
    // buckled branch: seed the soft z mode and relax with full freedom
    const Eigen::MatrixXd h = potential_hessian(planar.positions, trap);
    Eigen::MatrixXd hz(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) hz(a, b) = h(3 * a + 2, 3 * b + 2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hz);
    Positions kicked = planar.positions;
    for (int i = 0; i < n; ++i) kicked[i].z() += 0.02 * eig.eigenvectors()(i, 0);
    return relax(kicked, trap);
}

Positions flip_surgery(const Positions& zigzag, int bond) {
    const auto order = axial_order(zigzag);
    const int n = static_cast<int>(order.size());
    if (bond < 0 || bond >= n - 1)
        throw PhysicsError("flip_surgery: bond index outside the chain");
    Positions flipped = zigzag;
    for (int k = bond + 1; k < n; ++k) flipped[order[k]].y() = -flipped[order[k]].y();
    return flipped;
}

EquilibriumConfig kink_equilibrium(int n, const ScaledTrap& trap, const ClassifyThresholds& thr) {
    const EquilibriumConfig zigzag = census_ground_state(n, trap);
    const auto info = classify(zigzag, thr.linear, thr.plane);
    if (info.cls != StructureClass::Zigzag && info.cls != StructureClass::ThreeD)
        throw KinkNotFormed("kink_equilibrium: no zigzag at N=" + std::to_string(n));
    const EquilibriumConfig kinked = relax(flip_surgery(zigzag.positions, (n - 1) / 2), trap);
    const auto flips = kink_scan(kinked.positions, thr.linear);
    if (flips.size() != 1)
        throw KinkNotFormed("kink_equilibrium: flip relaxed away at N=" + std::to_string(n));
    return kinked;
}

}  // namespace kinktrap
