#include <doctest.h>

#include <cmath>

#include "kinktrap/dynamics.hpp"
#include "kinktrap/modes.hpp"
#include "kinktrap/statics.hpp"
#include "test_common.hpp"

using namespace kinktrap;
using kinktrap::testing::default_model;

namespace {

// Adaptive RKF45 for the single-ion RF equations of motion; independent
// oracle for the Verlet integrator.
void rkf45_single_ion(Eigen::Vector3d& x, Eigen::Vector3d& v, const ScaledTrap& trap,
                      double t0, double t1, double tol) {
    auto accel = [&](double t, const Eigen::Vector3d& pos) { return trap.force_at(pos, t); };
    double t = t0;
    double h = 1e-4;
    while (t < t1) {
        if (t + h > t1) h = t1 - t;
        // classic Fehlberg coefficients on the 6D state
        Eigen::Matrix<double, 6, 1> y;
        y << x, v;
        auto f = [&](double tt, const Eigen::Matrix<double, 6, 1>& s) {
            Eigen::Matrix<double, 6, 1> d;
            d.head<3>() = s.tail<3>();
            d.tail<3>() = accel(tt, s.head<3>());
            return d;
        };
        const auto k1 = f(t, y);
        const auto k2 = f(t + h / 4, y + h / 4 * k1);
        const auto k3 = f(t + 3 * h / 8, y + h * (3.0 / 32 * k1 + 9.0 / 32 * k2));
        const auto k4 = f(t + 12 * h / 13,
                          y + h * (1932.0 / 2197 * k1 - 7200.0 / 2197 * k2 + 7296.0 / 2197 * k3));
        const auto k5 = f(t + h, y + h * (439.0 / 216 * k1 - 8.0 * k2 + 3680.0 / 513 * k3 -
                                          845.0 / 4104 * k4));
        const auto k6 = f(t + h / 2, y + h * (-8.0 / 27 * k1 + 2.0 * k2 - 3544.0 / 2565 * k3 +
                                              1859.0 / 4104 * k4 - 11.0 / 40 * k5));
        const Eigen::Matrix<double, 6, 1> y5 =
            y + h * (16.0 / 135 * k1 + 6656.0 / 12825 * k3 + 28561.0 / 56430 * k4 -
                     9.0 / 50 * k5 + 2.0 / 55 * k6);
        const Eigen::Matrix<double, 6, 1> y4 =
            y + h * (25.0 / 216 * k1 + 1408.0 / 2565 * k3 + 2197.0 / 4104 * k4 - 1.0 / 5 * k5);
        const double err = (y5 - y4).norm();
        if (err < tol || h < 1e-12) {
            t += h;
            x = y5.head<3>();
            v = y5.tail<3>();
        }
        const double factor = (err > 0) ? 0.9 * std::pow(tol / err, 0.2) : 2.0;
        h *= std::clamp(factor, 0.2, 2.0);
    }
}

}  // namespace

TEST_CASE("total force basics") {
    const ModelBundle& m = default_model();

    SUBCASE("single ion at the origin feels no force") {
        std::vector<Eigen::Vector3d> f;
        total_force({Eigen::Vector3d::Zero()}, m.trap_secular, 0.0, f);
        CHECK(f[0].norm() == doctest::Approx(0.0));
    }
    SUBCASE("two ions at the analytic separation balance exactly") {
        const double half = 0.5 * std::cbrt(2.0);
        std::vector<Eigen::Vector3d> f;
        total_force({{-half, 0, 0}, {half, 0, 0}}, m.trap_secular, 0.0, f);
        CHECK(f[0].norm() < 1e-14);
        CHECK(f[1].norm() < 1e-14);
    }
    SUBCASE("coulomb part obeys action-reaction to machine precision") {
        Rng rng(3);
        for (int rep = 0; rep < 10; ++rep) {
            Positions pos(5);
            for (auto& r : pos) r = {rng.uniform(-3, 3), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            std::vector<Eigen::Vector3d> f;
            total_force(pos, m.trap_secular, 0.0, f);
            // subtract the trap part; the remainder must sum to zero
            Eigen::Vector3d sum = Eigen::Vector3d::Zero();
            for (int i = 0; i < 5; ++i)
                sum += f[i] + m.trap_secular.curvature(0.0).cwiseProduct(pos[i]);
            CHECK(sum.norm() < 1e-12);
        }
    }
    SUBCASE("coincident ions are rejected") {
        std::vector<Eigen::Vector3d> f;
        CHECK_THROWS_AS(
            total_force({Eigen::Vector3d::Zero(), Eigen::Vector3d(1e-12, 0, 0)},
                        m.trap_secular, 0.0, f),
            CoincidentIons);
    }
}

TEST_CASE("verlet fixed point and timestep guard") {
    const ModelBundle& m = default_model();
    const double half = 0.5 * std::cbrt(2.0);
    SystemState state = SystemState::at_rest({{-half, 0, 0}, {half, 0, 0}});
    const SystemState before = state;
    for (int i = 0; i < 100; ++i) step_verlet(state, m.trap_secular, 0.01);
    for (int i = 0; i < 2; ++i) {
        CHECK((state.positions[i] - before.positions[i]).norm() < 1e-14);
        CHECK(state.velocities[i].norm() < 1e-14);
    }

    const ModelBundle rf = kinktrap::testing::model_with(610e3, 1.05, TrapModel::FullRF);
    SystemState single = SystemState::at_rest({Eigen::Vector3d(0.1, 0.05, 0.02)});
    CHECK_THROWS_AS(step_verlet(single, rf.trap, rf.trap.rf_period() / 10.0), TimestepTooLarge);
}

TEST_CASE("energy conservation over 1e6 undamped steps") {
    const ModelBundle& m = default_model();
    SystemState state = SystemState::at_rest({Eigen::Vector3d(0.7, 0.02, 0.01)});
    state.velocities[0] = {0.0, 0.1, 0.0};

    // windowed means kill the bounded oscillating part of the Verlet error;
    // what remains is the secular drift
    Integrator integ(m.trap_secular, 0.01);
    const double e0 = total_energy(state, m.trap_secular);
    double head = 0.0, tail = 0.0;
    const int window = 100000;
    for (int s = 0; s < window; ++s) {
        integ.step(state);
        head += total_energy(state, m.trap_secular);
    }
    integ.run(state, 800000);
    for (int s = 0; s < window; ++s) {
        integ.step(state);
        tail += total_energy(state, m.trap_secular);
    }
    CHECK(std::abs(tail - head) / window / e0 < 1e-6);

    // closed-form solution: the axial coordinate is x0 cos(t)
    SystemState h = SystemState::at_rest({Eigen::Vector3d(0.5, 0, 0)});
    Integrator integ2(m.trap_secular, 0.001);
    integ2.run(h, 1000);
    CHECK(h.positions[0].x() == doctest::Approx(0.5 * std::cos(1.0)).epsilon(1e-6));
}

TEST_CASE("full-rf single ion matches an adaptive integrator") {
    const ModelBundle rf = kinktrap::testing::model_with(610e3, 1.05, TrapModel::FullRF);
    const double period = rf.trap.rf_period();
    const double dt = period / 200.0;

    SystemState state = SystemState::at_rest({Eigen::Vector3d(0.3, 0.1, 0.05)});
    Eigen::Vector3d x_ref = state.positions[0];
    Eigen::Vector3d v_ref = state.velocities[0];

    Integrator integ(rf.trap, dt);
    const double t_end = 100.0 * period;
    integ.run(state, 100 * 200);
    rkf45_single_ion(x_ref, v_ref, rf.trap, 0.0, t_end, 1e-12);

    CHECK((state.positions[0] - x_ref).norm() / x_ref.norm() < 1e-4);
}

TEST_CASE("full-rf secular frequencies from a long trajectory") {
    // invariant: discrete Fourier analysis of a driven single-ion trajectory
    // recovers the requested secular frequencies to relative 1e-3
    const ModelBundle rf = kinktrap::testing::model_with(610e3, 1.05, TrapModel::FullRF);
    const double dt = rf.trap.rf_period() / 64.0;
    SystemState state = SystemState::at_rest({Eigen::Vector3d(0.2, 0.08, 0.06)});
    Integrator integ(rf.trap, dt);

    const int samples = 1 << 16;
    std::vector<double> xs(samples), ys(samples), zs(samples);
    for (int s = 0; s < samples; ++s) {
        integ.step(state);
        xs[s] = state.positions[0].x();
        ys[s] = state.positions[0].y();
        zs[s] = state.positions[0].z();
    }
    const double wx = kinktrap::dominant_frequency(xs, dt);
    const double wy = kinktrap::dominant_frequency(ys, dt);
    const double wz = kinktrap::dominant_frequency(zs, dt);
    CHECK(wx == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(wy == doctest::Approx(610.0 / 56.0).epsilon(1e-3));
    CHECK(wz == doctest::Approx(1.05 * 610.0 / 56.0).epsilon(1e-3));
}

TEST_CASE("cooling force") {
    const ModelBundle& m = default_model();

    SUBCASE("viscous damping at rest is zero") {
        std::vector<Eigen::Vector3d> f;
        cooling_force({Eigen::Vector3d::Zero()}, ViscousDamping{2.0}, f);
        CHECK(f[0].norm() == 0.0);
    }
    SUBCASE("viscous damping is -gamma v") {
        std::vector<Eigen::Vector3d> f;
        cooling_force({Eigen::Vector3d(0.1, -0.2, 0.3)}, ViscousDamping{2.0}, f);
        CHECK((f[0] - Eigen::Vector3d(-0.2, 0.4, -0.6)).norm() < 1e-15);
    }
    SUBCASE("doppler force magnitude at rest") {
        // hbar k Gamma/2 * s/(1+s+(2 Delta/Gamma)^2) with s=0.2, Delta=-Gamma
        std::vector<Eigen::Vector3d> f;
        cooling_force({Eigen::Vector3d::Zero()}, DopplerScattering{m.laser, false}, f);
        const double expected =
            m.laser.recoil_dv * 0.5 * m.laser.linewidth * 0.2 / (1.0 + 0.2 + 4.0);
        CHECK(f[0].norm() == doctest::Approx(expected).epsilon(1e-12));
        CHECK(f[0].normalized().dot(m.laser.k.normalized()) == doctest::Approx(1.0));
    }
    SUBCASE("linearized damping matches a finite-difference slope") {
        const Eigen::Vector3d khat = m.laser.k.normalized();
        const double dv = 1e-6;
        std::vector<Eigen::Vector3d> fp, fm;
        cooling_force({khat * dv}, DopplerScattering{m.laser, false}, fp);
        cooling_force({-khat * dv}, DopplerScattering{m.laser, false}, fm);
        const double slope_fd = (fp[0] - fm[0]).dot(khat) / (2.0 * dv);

        // analytic derivative of the scattering force along the beam
        const double g = m.laser.linewidth;
        const double x = 2.0 * m.laser.detuning / g;
        const double denom = 1.0 + m.laser.saturation + x * x;
        const double rate = 0.5 * g * m.laser.saturation / denom;
        const double drate = 0.5 * g * m.laser.saturation * (2.0 * x * 2.0 / g) *
                             m.laser.k.norm() / (denom * denom);
        const double slope = m.laser.recoil_dv * drate;
        (void)rate;
        CHECK(slope_fd == doctest::Approx(slope).epsilon(1e-6));
        CHECK(slope_fd < 0.0);  // red detuning damps
    }
}

TEST_CASE("simulate contract") {
    const ModelBundle& m = default_model();
    const double half = 0.5 * std::cbrt(2.0);
    SystemState start = SystemState::at_rest({{-half, 0.01, 0}, {half, -0.01, 0}});

    SUBCASE("zero duration keeps only the initial snapshot") {
        const Trajectory traj = simulate(start, m.trap_secular, std::monostate{}, 0.0, 0.01, 5, 1);
        CHECK(traj.frames.size() == 1);
    }
    SUBCASE("identical seeds give bitwise-identical trajectories") {
        const DopplerScattering cooling{m.laser, true};
        const Trajectory a = simulate(start, m.trap_secular, cooling, 20.0, 0.01, 10, 99);
        const Trajectory b = simulate(start, m.trap_secular, cooling, 20.0, 0.01, 10, 99);
        REQUIRE(a.frames.size() == b.frames.size());
        for (std::size_t f = 0; f < a.frames.size(); ++f)
            for (int i = 0; i < 2; ++i) {
                CHECK(a.frames[f].positions[i] == b.frames[f].positions[i]);
                CHECK(a.frames[f].velocities[i] == b.frames[f].velocities[i]);
            }
    }
    SUBCASE("snapshots are uniformly strided") {
        const Trajectory traj =
            simulate(start, m.trap_secular, std::monostate{}, 10.0, 0.01, 100, 1);
        for (std::size_t f = 1; f + 1 < traj.frames.size(); ++f)
            CHECK(traj.frames[f].time - traj.frames[f - 1].time == doctest::Approx(1.0));
    }
}

TEST_CASE("cooled crystal relaxes to the statics equilibrium") {
    // a thermally kicked zigzag returns to the relaxed configuration under
    // strong damping
    const ModelBundle m = kinktrap::testing::model_with(610e3, 1.34);
    const EquilibriumConfig eq = census_ground_state(31, m.trap_secular);

    SystemState state = SystemState::at_rest(eq.positions);
    Rng rng(5);
    for (auto& r : state.positions)
        r += Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()) * 0.01;
    Integrator integ(m.trap_secular, 0.01);
    integ.set_cooling(ViscousDamping{3.0});
    integ.run(state, 60000);

    double max_dev = 0.0;
    for (int i = 0; i < 31; ++i)
        max_dev = std::max(max_dev, (state.positions[i] - eq.positions[i]).norm());
    CHECK(max_dev < 1e-6);
}

TEST_CASE("micromotion equivalence on a small crystal") {
    // stroboscopic full-RF equilibria match the harmonic ones well below the
    // 0.5 um budget; the full 31-ion case runs in the acceptance suite
    const ModelBundle rf = kinktrap::testing::model_with(610e3, 1.34, TrapModel::FullRF);
    const EquilibriumConfig eq = census_ground_state(5, rf.trap_secular);

    const double dt = rf.trap.rf_period() / 64.0;
    SystemState state = SystemState::at_rest(eq.positions);
    Integrator damp(rf.trap, dt);
    damp.set_cooling(ViscousDamping{2.0});
    damp.run(state, static_cast<int>(150.0 / dt));

    Integrator freerun(rf.trap, dt);
    Positions strobo(5, Eigen::Vector3d::Zero());
    const int periods = 100;
    for (int p = 0; p < periods; ++p) {
        freerun.run(state, 64);
        for (int i = 0; i < 5; ++i) strobo[i] += state.positions[i];
    }
    double avg = 0.0;
    for (int i = 0; i < 5; ++i) avg += (strobo[i] / periods - eq.positions[i]).norm();
    avg = avg * rf.scale.length * 1e6 / 5.0;
    CHECK(avg < 0.5);
}
