#include "kinktrap/modes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "kinktrap/errors.hpp"

namespace kinktrap {

Eigen::MatrixXd hessian(const EquilibriumConfig& config) {
    return potential_hessian(config.positions, config.trap);
}

ModeSpectrum normal_modes(const EquilibriumConfig& config) {
    const Eigen::MatrixXd h = hessian(config);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    if (eig.info() != Eigen::Success) throw PhysicsError("normal_modes: eigensolver failed");

    ModeSpectrum spectrum;
    spectrum.equilibrium = config.positions;
    spectrum.trap = config.trap;
    const int dof = static_cast<int>(h.rows());
    spectrum.frequencies.resize(dof);
    spectrum.eigenvectors = eig.eigenvectors();
    for (int m = 0; m < dof; ++m) {
        const double lambda = eig.eigenvalues()(m);
        if (lambda < -1e-8)
            throw NegativeCurvature("normal_modes: eigenvalue " + std::to_string(lambda) +
                                    " signals a saddle");
        spectrum.frequencies(m) = std::sqrt(std::max(0.0, lambda));
        // deterministic sign: largest-magnitude component positive
        int imax = 0;
        spectrum.eigenvectors.col(m).cwiseAbs().maxCoeff(&imax);
        if (spectrum.eigenvectors(imax, m) < 0.0)
            spectrum.eigenvectors.col(m) = -spectrum.eigenvectors.col(m);
    }
    return spectrum;
}

Eigen::VectorXd ion_weights(const ModeSpectrum& spectrum, int mode) {
    const int n = spectrum.n_ions();
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i)
        w(i) = spectrum.eigenvectors.col(mode).segment<3>(3 * i).squaredNorm();
    return w;  // eigenvector normalized, so sum = 1
}

double ion_ipr(const ModeSpectrum& spectrum, int mode) {
    return ion_weights(spectrum, mode).squaredNorm();
}

std::vector<int> dominant_ions(const ModeSpectrum& spectrum, int mode, int count) {
    const Eigen::VectorXd w = ion_weights(spectrum, mode);
    std::vector<int> idx(spectrum.n_ions());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return w(a) > w(b); });
    idx.resize(std::min<std::size_t>(idx.size(), count));
    return idx;
}

ModeLocalization localization(const ModeSpectrum& spectrum, int top_count) {
    ModeLocalization loc;
    const int modes = spectrum.n_modes();
    loc.ipr.resize(modes);
    loc.dominant.resize(modes);
    for (int m = 0; m < modes; ++m) {
        loc.ipr[m] = ion_ipr(spectrum, m);
        loc.dominant[m] = dominant_ions(spectrum, m, top_count);
    }
    return loc;
}

SystemState thermal_sample(const ModeSpectrum& spectrum, double kT, Rng& rng,
                           const std::vector<int>* only_modes) {
    const int dof = spectrum.n_modes();
    const int n = spectrum.n_ions();
    for (int m = 0; m < dof; ++m)
        if (spectrum.frequencies(m) < 1e-10)
            throw ZeroFrequencyMode("thermal_sample: mode " + std::to_string(m) +
                                    " has (near) zero frequency");

    std::vector<char> excited(dof, only_modes == nullptr ? 1 : 0);
    if (only_modes != nullptr)
        for (int m : *only_modes) excited.at(m) = 1;

    Eigen::VectorXd dq = Eigen::VectorXd::Zero(dof);
    Eigen::VectorXd dv = Eigen::VectorXd::Zero(dof);
    for (int m = 0; m < dof; ++m) {
        const double phase = 2.0 * M_PI * rng.uniform();  // fixed draw order
        if (!excited[m] || kT <= 0.0) continue;
        const double omega = spectrum.frequencies(m);
        const double amp = std::sqrt(2.0 * kT) / omega;
        dq(m) = amp * std::sin(phase);
        dv(m) = amp * omega * std::cos(phase);
    }
    const Eigen::VectorXd dx = spectrum.eigenvectors * dq;
    const Eigen::VectorXd vx = spectrum.eigenvectors * dv;

    SystemState state;
    state.positions.resize(n);
    state.velocities.resize(n);
    for (int i = 0; i < n; ++i) {
        state.positions[i] = spectrum.equilibrium[i] + dx.segment<3>(3 * i);
        state.velocities[i] = vx.segment<3>(3 * i);
    }
    return state;
}

double dominant_frequency(const std::vector<double>& signal, double sample_dt) {
    const int n = static_cast<int>(signal.size());
    if (n < 8) throw PhysicsError("dominant_frequency: signal too short");

    // Hann-windowed, mean-removed samples
    std::vector<double> w(n);
    double mean = 0.0;
    for (double s : signal) mean += s;
    mean /= n;
    for (int i = 0; i < n; ++i) {
        const double hann = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (n - 1));
        w[i] = (signal[i] - mean) * hann;
    }

    auto magnitude_at = [&](double freq_rad) {
        // direct DFT bin at arbitrary frequency
        double re = 0.0, im = 0.0;
        const double step = freq_rad * sample_dt;
        for (int i = 0; i < n; ++i) {
            re += w[i] * std::cos(step * i);
            im -= w[i] * std::sin(step * i);
        }
        return std::sqrt(re * re + im * im);
    };

    // coarse scan over the FFT grid
    const double bin = 2.0 * M_PI / (n * sample_dt);
    const int half = n / 2;
    double best_mag = -1.0;
    int best_k = 1;
    for (int k = 1; k < half; ++k) {
        const double mag = magnitude_at(k * bin);
        if (mag > best_mag) {
            best_mag = mag;
            best_k = k;
        }
    }

    // refine on a micro-grid around the coarse peak, then parabola
    double lo = (best_k - 1.0) * bin, hi = (best_k + 1.0) * bin;
    double best_f = best_k * bin;
    for (int pass = 0; pass < 3; ++pass) {
        const int grid = 16;
        best_mag = -1.0;
        for (int g = 0; g <= grid; ++g) {
            const double f = lo + (hi - lo) * g / grid;
            const double mag = magnitude_at(f);
            if (mag > best_mag) {
                best_mag = mag;
                best_f = f;
            }
        }
        const double df = (hi - lo) / grid;
        lo = best_f - df;
        hi = best_f + df;
    }
    return best_f;
}

std::vector<AnharmonicPoint> anharmonic_scan(const EquilibriumConfig& config, int mode_index,
                                             const std::vector<double>& amplitudes,
                                             const AnharmonicOptions& opts) {
    const ModeSpectrum spectrum = normal_modes(config);
    if (mode_index < 0 || mode_index >= spectrum.n_modes())
        throw PhysicsError("anharmonic_scan: mode index out of range");
    const double omega0 = spectrum.frequencies(mode_index);
    if (omega0 < 1e-8) throw ZeroFrequencyMode("anharmonic_scan: mode frequency ~ 0");

    const Eigen::VectorXd e = spectrum.eigenvectors.col(mode_index);
    const int n = static_cast<int>(config.positions.size());

    std::vector<AnharmonicPoint> table;
    for (double amplitude : amplitudes) {
        AnharmonicPoint point;
        point.amplitude = amplitude;

        SystemState state = SystemState::at_rest(config.positions);
        for (int i = 0; i < n; ++i) state.positions[i] += amplitude * e.segment<3>(3 * i);

        const double duration = opts.min_periods * 2.0 * M_PI / omega0;
        const long steps = static_cast<long>(std::ceil(duration / opts.dt));
        Integrator integrator(config.trap, opts.dt);
        std::vector<double> q;
        q.reserve(steps / opts.stride + 2);
        bool runaway = false;
        for (long s = 0; s < steps; ++s) {
            integrator.step(state);
            if (s % opts.stride == 0) {
                double proj = 0.0;
                for (int i = 0; i < n; ++i)
                    proj += e.segment<3>(3 * i).dot(state.positions[i] - config.positions[i]);
                q.push_back(proj);
                if (std::abs(proj) > 8.0 * std::abs(amplitude) + 1e-9) {
                    runaway = true;
                    break;
                }
            }
        }
        if (runaway) {
            point.unstable = true;
            point.frequency = 0.0;
        } else {
            point.frequency = dominant_frequency(q, opts.dt * opts.stride);
        }
        table.push_back(point);
    }
    return table;
}

std::vector<TunePoint> tune_scan(int n_ions, const ScaledTrap& trap_base,
                                 const std::vector<double>& ratio_grid,
                                 const ClassifyThresholds& thr) {
    if (ratio_grid.empty()) return {};
    const double base_cy = trap_base.cy;

    auto trap_at = [&](double ratio) {
        return trap_base.with_radial(base_cy, base_cy * ratio * ratio);
    };

    // anchor at the grid point nearest the robust regime ratio ~ 1.05
    int anchor = 0;
    for (int i = 1; i < static_cast<int>(ratio_grid.size()); ++i)
        if (std::abs(ratio_grid[i] - 1.05) < std::abs(ratio_grid[anchor] - 1.05)) anchor = i;

    std::vector<TunePoint> table(ratio_grid.size());
    for (std::size_t i = 0; i < ratio_grid.size(); ++i) {
        table[i].ratio = ratio_grid[i];
        table[i].kink_lost = true;
    }

    // localized-mode identification by character: the kink mode concentrates
    // its transverse motion on the core pair, which no extended mode does.
    // Picking the lowest such mode tracks the physical branch through the
    // 3D-core collapse without eigenvector bookkeeping.
    auto core_transverse_weight = [&](const ModeSpectrum& sp, const KinkDescriptor& kink,
                                      int mode) {
        double total = 0.0;
        for (int ion : kink.core_ion_indices)
            if (ion >= 0)
                total += sp.eigenvectors.col(mode).segment<2>(3 * ion + 1).squaredNorm();
        return total;
    };

    struct Tracker {
        EquilibriumConfig config;
        bool alive = false;
    };

    auto evaluate = [&](Tracker& tracker, double ratio, TunePoint& out) {
        const ScaledTrap trap = trap_at(ratio);
        try {
            EquilibriumConfig eq =
                tracker.alive ? relax(tracker.config.positions, trap)
                              : kink_equilibrium(n_ions, trap, thr);
            KinkDescriptor kink = detect_kink(eq.positions, thr.linear);
            if (!kink.present) throw KinkLost("kink dissolved during re-relaxation");
            const ModeSpectrum sp = normal_modes(eq);
            int mode = -1;
            int argmax = 0;
            double best = -1.0;
            for (int m = 0; m < sp.n_modes(); ++m) {
                const double cw = core_transverse_weight(sp, kink, m);
                if (cw >= 0.15 && mode < 0) mode = m;  // lowest localized mode
                if (cw > best) {
                    best = cw;
                    argmax = m;
                }
            }
            if (mode < 0) mode = argmax;  // weakly localized: take the best available
            out.omega_low = sp.frequencies(mode);
            out.ipr = ion_ipr(sp, mode);
            out.kink_lost = false;
            tracker.config = eq;
            tracker.alive = true;
        } catch (const PhysicsError&) {
            out.kink_lost = true;
            tracker.alive = false;
        }
    };

    Tracker anchor_tracker;
    evaluate(anchor_tracker, ratio_grid[anchor], table[anchor]);

    Tracker up = anchor_tracker;
    for (int i = anchor + 1; i < static_cast<int>(ratio_grid.size()); ++i)
        evaluate(up, ratio_grid[i], table[i]);
    Tracker down = anchor_tracker;
    for (int i = anchor - 1; i >= 0; --i)
        evaluate(down, ratio_grid[i], table[i]);
    return table;
}

}  // namespace kinktrap
