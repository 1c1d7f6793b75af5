#include <doctest.h>

#include <cmath>

#include "kinktrap/model.hpp"
#include "kinktrap/rng.hpp"
#include "test_common.hpp"

using namespace kinktrap;

TEST_CASE("doppler limit") {
    SpeciesConfig mg = SpeciesConfig::mg24();
    // direct constant arithmetic as the oracle
    const double expected = phys::hbar * (2.0 * M_PI * 42e6) / (2.0 * phys::k_boltzmann);
    CHECK(doppler_limit(mg) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(doppler_limit(mg) == doctest::Approx(1.0e-3).epsilon(0.05));  // ~1 mK

    mg.natural_linewidth = 2.0 * M_PI * 20e6;
    CHECK(doppler_limit(mg) ==
          doctest::Approx(phys::hbar * mg.natural_linewidth / (2.0 * phys::k_boltzmann))
              .epsilon(1e-14));

    mg.natural_linewidth = 1e-12;  // limit case Gamma -> 0
    CHECK(doppler_limit(mg) < 1e-20);
}

TEST_CASE("unit scale definition and round trip") {
    const SpeciesConfig mg = SpeciesConfig::mg24();
    const double omega_x = 2.0 * M_PI * 56e3;
    const UnitScale scale = UnitScale::from(mg, omega_x);

    // l^3 = q^2/(4 pi eps0 m wx^2), computed independently
    const double l3 = phys::coulomb_constant * mg.charge * mg.charge /
                      (mg.mass * omega_x * omega_x);
    CHECK(scale.length == doctest::Approx(std::cbrt(l3)).epsilon(1e-14));
    CHECK(scale.time == doctest::Approx(1.0 / omega_x).epsilon(1e-14));
    CHECK(scale.energy ==
          doctest::Approx(mg.mass * omega_x * omega_x * scale.length * scale.length)
              .epsilon(1e-14));
    // inter-ion distances at these parameters are tens of micrometers
    CHECK(scale.length > 10e-6);
    CHECK(scale.length < 100e-6);

    // SI -> scaled -> SI identity to relative 1e-12 on random values
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const double meters = rng.uniform(-1e-3, 1e-3);
        CHECK(scale.to_si_length(scale.to_scaled_length(meters)) ==
              doctest::Approx(meters).epsilon(1e-12));
        const double joules = rng.uniform(1e-30, 1e-18);
        CHECK(scale.to_si_energy(scale.to_scaled_energy(joules)) ==
              doctest::Approx(joules).epsilon(1e-12));
    }

    // two-ion separation: d^3 = q^2/(2 pi eps0 m wx^2) equals 2^(1/3) scaled
    const double d_si = std::cbrt(2.0 * phys::coulomb_constant * mg.charge * mg.charge /
                                  (mg.mass * omega_x * omega_x));
    CHECK(scale.to_scaled_length(d_si) == doctest::Approx(std::cbrt(2.0)).epsilon(1e-13));
}

TEST_CASE("make_trap validation") {
    const double rf = 2.0 * M_PI * 6.22e6;
    const double wx = 2.0 * M_PI * 56e3;

    SUBCASE("valid harmonic config") {
        const TrapConfig trap =
            make_trap(rf, wx, 2.0 * M_PI * 320e3, 2.0 * M_PI * 336e3, TrapModel::Harmonic);
        CHECK(trap.secular_z / trap.secular_y == doctest::Approx(1.05));
    }
    SUBCASE("equal frequencies violate the ordering") {
        CHECK_THROWS_AS(make_trap(rf, wx, wx, wx, TrapModel::Harmonic), OrderingViolation);
    }
    SUBCASE("axial above radial violates the ordering") {
        CHECK_THROWS_AS(
            make_trap(rf, 2.0 * M_PI * 400e3, 2.0 * M_PI * 320e3, 2.0 * M_PI * 336e3,
                      TrapModel::Harmonic),
            OrderingViolation);
    }
    SUBCASE("unstable RF drive") {
        CHECK_THROWS_AS(make_trap(2.0 * M_PI * 1.0e6, wx, 2.0 * M_PI * 320e3,
                                  2.0 * M_PI * 336e3, TrapModel::FullRF),
                        StabilityViolation);
    }
    SUBCASE("nonpositive frequency") {
        CHECK_THROWS_AS(make_trap(rf, -wx, 2.0 * M_PI * 320e3, 2.0 * M_PI * 336e3,
                                  TrapModel::Harmonic),
                        ConfigError);
    }
}

TEST_CASE("full-rf calibration reproduces the requested secular frequencies") {
    const double rf = 2.0 * M_PI * 6.22e6;
    const double wx = 2.0 * M_PI * 56e3;
    const double wy = 2.0 * M_PI * 630e3;
    const double wz = 2.0 * M_PI * 661.5e3;
    const TrapConfig trap = make_trap(rf, wx, wy, wz, TrapModel::FullRF);

    // q_radial from the lowest-order Mathieu relation
    CHECK(trap.q_radial() == doctest::Approx(2.0 * std::sqrt(2.0) * wz / rf).epsilon(1e-12));
    CHECK(trap.q_radial() < 0.9);
    // the calibrated drive amplitude is near (but not at) the lowest-order value
    const double q_lowest = 2.0 * std::sqrt(2.0) *
                            std::sqrt(0.5 * (wy * wy + wz * wz)) / rf;
    CHECK(trap.mathieu_q == doctest::Approx(q_lowest).epsilon(0.05));

    // Floquet analysis of the calibrated Hill equations returns the targets
    const double rf_scaled = rf / wx;
    const double ry = floquet_secular_frequency(trap.mathieu_ay, trap.mathieu_q, rf_scaled);
    const double rz = floquet_secular_frequency(trap.mathieu_az, trap.mathieu_q, rf_scaled);
    CHECK(ry == doctest::Approx(wy / wx).epsilon(1e-6));
    CHECK(rz == doctest::Approx(wz / wx).epsilon(1e-6));
}

TEST_CASE("scaled trap and laser") {
    const ModelBundle& m = kinktrap::testing::default_model();

    SUBCASE("harmonic curvature is (1, cy, cz)") {
        const Eigen::Vector3d k = m.trap_secular.curvature(0.37);
        CHECK(k.x() == doctest::Approx(1.0));
        CHECK(k.y() == doctest::Approx(std::pow(610.0 / 56.0, 2)).epsilon(1e-12));
        CHECK(k.z() == doctest::Approx(std::pow(1.05 * 610.0 / 56.0, 2)).epsilon(1e-12));
    }
    SUBCASE("laser scaling") {
        CHECK(m.laser.linewidth == doctest::Approx(2.0 * M_PI * 42e6 / (2.0 * M_PI * 56e3)));
        CHECK(m.laser.detuning == doctest::Approx(-m.laser.linewidth));
        CHECK(m.laser.k.norm() ==
              doctest::Approx(2.0 * M_PI / 280e-9 * m.scale.length).epsilon(1e-12));
        // recoil velocity hbar k / m in scaled units
        const double dv_si = phys::hbar * (2.0 * M_PI / 280e-9) / m.species.mass;
        CHECK(m.laser.recoil_dv == doctest::Approx(dv_si / m.scale.velocity).epsilon(1e-12));
    }
    SUBCASE("round trip through to_si") {
        const TrapConfig back = to_si(m.trap, m.trap_si);
        CHECK(back.secular_y == doctest::Approx(m.trap_si.secular_y).epsilon(1e-12));
        CHECK(back.secular_z == doctest::Approx(m.trap_si.secular_z).epsilon(1e-12));
    }
}

TEST_CASE("deterministic rng and seed derivation") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 2, 4));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));

    // normal sampling moments
    Rng rng(11);
    double sum = 0.0, sum2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sum2 += x * x;
    }
    CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02));
    CHECK(std::abs(sum / n) < 0.02);
    CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));

    // Poisson mean
    double events = 0.0;
    for (int i = 0; i < 100000; ++i) events += rng.poisson(0.37);
    CHECK(events / 100000.0 == doctest::Approx(0.37).epsilon(0.03));
}
