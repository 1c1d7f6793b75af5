#include <doctest.h>

#include <cmath>

#include "kinktrap/statics.hpp"
#include "test_common.hpp"

using namespace kinktrap;
using kinktrap::testing::default_model;

namespace {

// brute-force 1D oracle for the symmetric three-ion chain: scan the outer
// position of (-x, 0, +x) for the energy minimum
double three_ion_outer_position_oracle() {
    auto energy = [](double x) { return x * x + 2.0 / x + 1.0 / (2.0 * x); };
    double lo = 0.5, hi = 2.0;
    for (int i = 0; i < 200; ++i) {
        const double a = lo + (hi - lo) / 3.0;
        const double b = hi - (hi - lo) / 3.0;
        if (energy(a) < energy(b)) hi = b;
        else lo = a;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("two-ion equilibrium separation") {
    const ModelBundle& m = default_model();
    Rng rng(17);
    Positions start(2);
    for (auto& r : start) r = {rng.uniform(-2, 2), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const EquilibriumConfig eq = relax(start, m.trap_secular);
    const double d = (eq.positions[0] - eq.positions[1]).norm();
    CHECK(d == doctest::Approx(std::cbrt(2.0)).epsilon(1e-10));
    CHECK(eq.gradient_norm < 1e-10);
}

TEST_CASE("three-ion equilibrium positions") {
    const ModelBundle& m = default_model();
    const EquilibriumConfig eq = relax(chain_start(3, m.trap_secular), m.trap_secular);
    const auto order = axial_order(eq.positions);
    const double expected = std::cbrt(5.0 / 4.0);
    CHECK(three_ion_outer_position_oracle() == doctest::Approx(expected).epsilon(1e-8));
    CHECK(eq.positions[order[0]].x() == doctest::Approx(-expected).epsilon(1e-8));
    CHECK(std::abs(eq.positions[order[1]].x()) < 1e-8);
    CHECK(eq.positions[order[2]].x() == doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("mirror symmetry of relax") {
    const ModelBundle& m = default_model();
    Positions start = chain_start(12, m.trap_secular, 0.02, 31);
    const EquilibriumConfig eq = relax(start, m.trap_secular);

    Positions mirrored = start;
    for (auto& r : mirrored) r.y() = -r.y();
    const EquilibriumConfig eq_m = relax(mirrored, m.trap_secular);

    CHECK(eq_m.potential_energy == doctest::Approx(eq.potential_energy).epsilon(1e-12));
    for (int i = 0; i < 12; ++i) {
        CHECK(eq_m.positions[i].x() == doctest::Approx(eq.positions[i].x()).epsilon(1e-8));
        CHECK(eq_m.positions[i].y() == doctest::Approx(-eq.positions[i].y()).epsilon(1e-8));
    }
}

TEST_CASE("classification across the structural census") {
    const ModelBundle& m = default_model();
    const auto& thr = m.thresholds;

    SUBCASE("strong radial confinement keeps 10 ions linear") {
        const auto info = classify(census_ground_state(10, m.trap_secular), thr.linear, thr.plane);
        CHECK(info.cls == StructureClass::Linear);
    }
    SUBCASE("27 ions form a zigzag at default parameters") {
        const auto info = classify(census_ground_state(27, m.trap_secular), thr.linear, thr.plane);
        CHECK(info.cls == StructureClass::Zigzag);
        // one ion count below the onset the chain is still linear
        const auto below = classify(census_ground_state(26, m.trap_secular), thr.linear, thr.plane);
        CHECK(below.cls == StructureClass::Linear);
    }
    SUBCASE("53 ions buckle out of the plane by less than a micrometer") {
        const auto info = classify(census_ground_state(53, m.trap_secular), thr.linear, thr.plane);
        CHECK(info.cls == StructureClass::ThreeD);
        CHECK(info.max_out_of_plane * m.scale.length < 1.0e-6);
    }
    SUBCASE("onset values agree with the linear-chain stability analysis") {
        CHECK(linear_chain_transverse_eigenvalue(26, m.trap_secular) > 0.0);
        CHECK(linear_chain_transverse_eigenvalue(27, m.trap_secular) < 0.0);
        CHECK(out_of_plane_eigenvalue(planar_zigzag(52, m.trap_secular)) > 0.0);
        CHECK(out_of_plane_eigenvalue(planar_zigzag(53, m.trap_secular)) < 0.0);
    }
}

TEST_CASE("minimum certification") {
    const ModelBundle& m = default_model();
    const EquilibriumConfig eq = census_ground_state(20, m.trap_secular);
    const Eigen::MatrixXd h = potential_hessian(eq.positions, m.trap_secular);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    CHECK(eig.eigenvalues()(0) > -1e-8);
}

TEST_CASE("kink detection") {
    const ModelBundle& m = default_model();
    const auto& thr = m.thresholds;

    SUBCASE("perfect zigzag carries no charge") {
        const EquilibriumConfig eq = census_ground_state(34, m.trap_secular);
        const KinkDescriptor d = detect_kink(eq, thr);
        CHECK_FALSE(d.present);
        CHECK(d.topological_charge == 0);
        CHECK(d.multiplicity == 0);
    }
    SUBCASE("mirror-composed configuration carries unit charge at the center") {
        const EquilibriumConfig kinked = kink_equilibrium(44, m.trap_secular, thr);
        const KinkDescriptor d = detect_kink(kinked, thr);
        CHECK(d.present);
        CHECK(std::abs(d.topological_charge) == 1);
        CHECK(std::abs(d.lattice_position) < 1.0);
        CHECK(d.multiplicity == 1);
    }
    SUBCASE("kink core extends out of plane while the pure crystal is planar") {
        const EquilibriumConfig kinked = kink_equilibrium(50, m.trap_secular, thr);
        const KinkDescriptor d = detect_kink(kinked, thr);
        const auto pure = classify(census_ground_state(50, m.trap_secular), thr.linear, thr.plane);
        CHECK(pure.cls == StructureClass::Zigzag);  // defect-free crystal planar
        CHECK(d.core_out_of_plane_amplitude * m.scale.length > 1.0e-6);
    }
    SUBCASE("charge is invariant under the global phase flip") {
        const EquilibriumConfig kinked = kink_equilibrium(44, m.trap_secular, thr);
        const KinkDescriptor d = detect_kink(kinked, thr);
        Positions flipped = kinked.positions;
        for (auto& r : flipped) r.y() = -r.y();
        const KinkDescriptor d2 = detect_kink(flipped, thr.linear);
        CHECK(std::abs(d2.topological_charge) == std::abs(d.topological_charge));
        CHECK(d2.axial_position == doctest::Approx(d.axial_position).epsilon(1e-9));
    }
    SUBCASE("two flips raise AmbiguousStructure with the count") {
        const EquilibriumConfig zz = census_ground_state(44, m.trap_secular);
        Positions two = flip_surgery(flip_surgery(zz.positions, 14), 28);
        int mult = 0;
        try {
            detect_kink(two, thr.linear);
        } catch (const AmbiguousStructure& e) {
            mult = e.multiplicity;
        }
        CHECK(mult == 2);
        CHECK(kink_scan(two, thr.linear).size() == 2);
    }
}

TEST_CASE("axial ordering holds in accepted configs") {
    const ModelBundle& m = default_model();
    for (int n : {20, 35, 50}) {
        const EquilibriumConfig eq = census_ground_state(n, m.trap_secular);
        const auto order = axial_order(eq.positions);
        for (int k = 0; k + 1 < n; ++k)
            CHECK(eq.positions[order[k]].x() < eq.positions[order[k + 1]].x());
    }
}
