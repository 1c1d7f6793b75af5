#include "kinktrap/pnscan.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <string>

#include "kinktrap/dynamics.hpp"
#include "kinktrap/errors.hpp"

namespace kinktrap {

SeededKink seed_offcenter_kink(int n, const ScaledTrap& trap, int bond_offset,
                               const ClassifyThresholds& thr, const DescentOptions& opts) {
    const EquilibriumConfig zigzag = census_ground_state(n, trap);
    const auto info = classify(zigzag, thr.linear, thr.plane);
    if (info.cls != StructureClass::Zigzag && info.cls != StructureClass::ThreeD)
        throw KinkNotFormed("seed_offcenter_kink: no zigzag regime at N=" + std::to_string(n));

    const int bond = (n - 1) / 2 + bond_offset;
    if (bond < 0 || bond >= n - 1)
        throw KinkNotFormed("seed_offcenter_kink: bond offset outside the chain");

    Positions cut = flip_surgery(zigzag.positions, bond);
    // break the z -> -z symmetry near the flip so the core can extend out of
    // the plane during settling
    const auto order = axial_order(cut);
    for (int k = 0; k < n; ++k) {
        const double d = static_cast<double>(k - bond) - 0.5;
        cut[order[k]].z() += 0.05 * std::exp(-0.25 * d * d);
    }

    SystemState state = SystemState::at_rest(cut);
    Integrator settle(trap, opts.dt);
    settle.set_cooling(ViscousDamping{6.0});
    settle.run(state, static_cast<int>(opts.settle_time / opts.dt));

    SeededKink seeded;
    seeded.positions = state.positions;
    seeded.bond = bond;
    try {
        seeded.kink = detect_kink(state.positions, thr.linear);
    } catch (const AmbiguousStructure& e) {
        throw KinkNotFormed("seed_offcenter_kink: surgery left " +
                            std::to_string(e.multiplicity) + " flips");
    }
    if (seeded.kink.multiplicity != 1)
        throw KinkNotFormed("seed_offcenter_kink: flip relaxed away during settling");

    // the settled kink must sit within one lattice spacing of the cut
    const double x_bond = 0.5 * (zigzag.positions[order[bond]].x() +
                                 zigzag.positions[order[bond + 1]].x());
    const double spacing = local_spacing(zigzag.positions, x_bond);
    if (std::abs(seeded.kink.axial_position - x_bond) > 1.5 * spacing)
        throw KinkNotFormed("seed_offcenter_kink: kink slid away during settling");
    return seeded;
}

KinkPath adiabatic_descent(const Positions& seeded, const ScaledTrap& trap, double gamma,
                           const ClassifyThresholds& thr, const DescentOptions& opts) {
    SystemState state = SystemState::at_rest(seeded);
    {
        const auto flips = kink_scan(state.positions, thr.linear);
        if (flips.size() != 1)
            throw PhysicsError("adiabatic_descent: start must contain exactly one kink");
    }

    KinkPath path;
    path.gamma = gamma;
    path.dt = opts.dt;

    Integrator integ(trap, opts.dt);
    integ.set_cooling(ViscousDamping{gamma});
    const int steps_per_sample = std::max(1, static_cast<int>(opts.sample_interval / opts.dt));
    const long max_samples = static_cast<long>(opts.max_time / opts.sample_interval);

    double last_position = 0.0;
    int stationary_count = 0;
    for (long s = 0; s < max_samples; ++s) {
        integ.run(state, steps_per_sample);
        const auto flips = kink_scan(state.positions, thr.linear);
        if (flips.size() != 1) {
            const int side = (last_position >= 0.0) ? +1 : -1;
            path.exit_side = side;
            throw KinkEscaped("adiabatic_descent: kink left the zigzag (side " +
                                  std::to_string(side) + ")",
                              side);
        }
        KinkPathSample sample;
        sample.time = state.time;
        sample.position = flips[0].axial_position;
        sample.lattice_position = flips[0].lattice_position;
        sample.energy = potential_energy(state.positions, trap);
        sample.kinetic = state.kinetic_energy();
        path.samples.push_back(sample);

        if (std::abs(sample.position) < opts.center_tol &&
            std::abs(sample.position - last_position) < 1e-6 && sample.kinetic < 1e-14) {
            path.reached_center = true;
            break;
        }
        // also stop on a genuinely stationary kink away from the center
        // (pinned); callers treat the resulting short-range profile as-is
        if (std::abs(sample.position - last_position) < 1e-9 && sample.kinetic < 1e-18) {
            if (++stationary_count > 5) break;
        } else {
            stationary_count = 0;
        }
        last_position = sample.position;
    }
    if (path.samples.empty()) throw PhysicsError("adiabatic_descent: no samples recorded");

    // transient trimming: drop the surgery-settling segment, then certify the
    // overdamping criterion on what remains
    double e_min = path.samples.front().energy, e_max = e_min;
    for (const auto& s : path.samples) {
        e_min = std::min(e_min, s.energy);
        e_max = std::max(e_max, s.energy);
    }
    const double ke_limit = opts.overdamp_fraction * std::max(e_max - e_min, 1e-30);
    std::size_t first = 0;
    while (first < path.samples.size() && path.samples[first].kinetic > ke_limit) ++first;
    if (first == path.samples.size())
        throw NotOverdamped("adiabatic_descent: kinetic energy never met the overdamping bound");
    path.samples.erase(path.samples.begin(), path.samples.begin() + first);
    for (const auto& s : path.samples)
        if (s.kinetic > ke_limit)
            throw NotOverdamped("adiabatic_descent: kinetic energy " + std::to_string(s.kinetic) +
                                " above bound " + std::to_string(ke_limit));
    return path;
}

namespace {

// piecewise-linear interpolation of (x, y) sorted by x
double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t hi = it - xs.begin();
    const double t = (x - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
    return ys[hi - 1] + t * (ys[hi] - ys[hi - 1]);
}

void sorted_branch(const KinkPath& path, std::vector<double>& xs, std::vector<double>& ys) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(path.samples.size());
    for (const auto& s : path.samples) pts.emplace_back(s.position, s.energy);
    std::sort(pts.begin(), pts.end());
    xs.clear();
    ys.clear();
    for (const auto& [x, y] : pts) {
        if (!xs.empty() && x - xs.back() < 1e-9) {
            ys.back() = std::min(ys.back(), y);  // keep the adiabatic (lowest) sheet
            continue;
        }
        xs.push_back(x);
        ys.push_back(y);
    }
}

}  // namespace

PNProfile pn_profile(const KinkPath& left, const KinkPath& right, int grid_points) {
    if (left.samples.empty() || right.samples.empty())
        throw PhysicsError("pn_profile: empty path");

    const double min_reach = 0.3;  // both branches must approach the center
    const auto reach = [](const KinkPath& p) {
        double best = std::numeric_limits<double>::max();
        for (const auto& s : p.samples) best = std::min(best, std::abs(s.position));
        return best;
    };
    if (reach(left) > min_reach || reach(right) > min_reach)
        throw InsufficientOverlap("pn_profile: a descent did not reach the trap center");

    std::vector<double> xl, yl, xr, yr;
    sorted_branch(left, xl, yl);
    sorted_branch(right, xr, yr);

    // center energy: the lowest energy sampled near the center on either side
    double e_center = std::numeric_limits<double>::max();
    for (const auto& s : left.samples)
        if (std::abs(s.position) < min_reach) e_center = std::min(e_center, s.energy);
    for (const auto& s : right.samples)
        if (std::abs(s.position) < min_reach) e_center = std::min(e_center, s.energy);

    const double x_left = std::min(xl.front(), xr.front());
    const double x_right = std::max(xl.back(), xr.back());
    const double extent = std::max(std::abs(x_left), std::abs(x_right));

    PNProfile profile;
    profile.position.resize(grid_points);
    profile.energy.resize(grid_points);
    double e_max = 0.0;
    for (int g = 0; g < grid_points; ++g) {
        const double x = -extent + 2.0 * extent * g / (grid_points - 1);
        // each branch covers its own side; near zero both contribute
        double e;
        const bool in_l = x >= xl.front() && x <= xl.back();
        const bool in_r = x >= xr.front() && x <= xr.back();
        if (in_l && in_r) e = 0.5 * (interp(xl, yl, x) + interp(xr, yr, x));
        else if (in_l) e = interp(xl, yl, x);
        else if (in_r) e = interp(xr, yr, x);
        else e = (x < 0.0) ? ((xl.front() < xr.front()) ? yl.front() : yr.front())
                           : ((xl.back() > xr.back()) ? yl.back() : yr.back());
        profile.position[g] = x;
        profile.energy[g] = e - e_center;
        e_max = std::max(e_max, profile.energy[g]);
    }
    profile.barrier_height = e_max;
    return profile;
}

QuadraticFit fit_quadratic(const std::vector<double>& x, const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    if (n < 3) throw PhysicsError("fit_quadratic: underdetermined");
    Eigen::MatrixXd design(n, 3);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) {
        design(i, 0) = x[i] * x[i];
        design(i, 1) = x[i];
        design(i, 2) = 1.0;
        rhs(i) = y[i];
    }
    const Eigen::Vector3d coeff = design.colPivHouseholderQr().solve(rhs);
    QuadraticFit fit;
    fit.a = coeff(0);
    fit.b = coeff(1);
    fit.c = coeff(2);
    const double mean = rhs.mean();
    const double ss_tot = (rhs.array() - mean).square().sum();
    const double ss_res = (design * coeff - rhs).array().square().sum();
    fit.r_squared = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

namespace {

SweepRow sweep_one(int n, const ScaledTrap& trap, const ClassifyThresholds& thr,
                   const DescentOptions& opts) {
    SweepRow row;
    row.n_ions = n;
    // outermost seed that both forms a kink and descends to the center
    const int max_offset = n / 2 - 2;
    for (int offset = max_offset; offset >= 2; --offset) {
        try {
            const SeededKink right = seed_offcenter_kink(n, trap, offset, thr, opts);
            const KinkPath path_right = adiabatic_descent(right.positions, trap, opts.gamma, thr, opts);
            const SeededKink left = seed_offcenter_kink(n, trap, -offset, thr, opts);
            const KinkPath path_left = adiabatic_descent(left.positions, trap, opts.gamma, thr, opts);
            const PNProfile profile = pn_profile(path_left, path_right);
            row.barrier = profile.barrier_height;
            row.seed_bond_offset = offset;
            row.ok = true;
            return row;
        } catch (const PhysicsError& e) {
            row.error = e.what();  // keep the innermost failure for the report
        }
    }
    return row;
}

}  // namespace

SweepResult barrier_sweep(const std::vector<int>& n_values, const ScaledTrap& trap,
                          const ClassifyThresholds& thr, const DescentOptions& opts,
                          int workers) {
    SweepResult result;
    result.rows.resize(n_values.size());

    if (workers <= 1) {
        for (std::size_t i = 0; i < n_values.size(); ++i)
            result.rows[i] = sweep_one(n_values[i], trap, thr, opts);
    } else {
        std::vector<std::future<SweepRow>> futures;
        futures.reserve(n_values.size());
        for (int n : n_values)
            futures.push_back(std::async(std::launch::async,
                                         [&, n] { return sweep_one(n, trap, thr, opts); }));
        for (std::size_t i = 0; i < futures.size(); ++i) result.rows[i] = futures[i].get();
    }

    std::vector<double> xs, ys;
    for (const auto& row : result.rows) {
        if (row.ok) {
            xs.push_back(row.n_ions);
            ys.push_back(row.barrier);
        } else {
            result.excluded.push_back(row.n_ions);
        }
    }
    if (xs.size() >= 3) result.fit = fit_quadratic(xs, ys);
    return result;
}

}  // namespace kinktrap
