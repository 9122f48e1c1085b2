#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "hodoflow/geodesics.hpp"
#include "hodoflow/linalg.hpp"
#include "hodoflow/oracle.hpp"

using namespace hodoflow;
using testutil::random_s2_state_banded;
using testutil::random_state;
using testutil::urand;

TEST_CASE("geodesic_rhs from the connection coefficients") {
    const SurfaceChart s2 = SurfaceChart::sphere2(1.0);
    PhaseState eq;
    eq.x = {kPi / 2, 0.0, 0.0};
    eq.u = {0.0, 1.0, 0.0};
    const PhaseDerivative d = geodesic_rhs(s2, eq);
    CHECK(d.dx[0] == 0.0);
    CHECK(d.dx[1] == 1.0);
    CHECK(std::abs(d.du[0]) < 1e-15);
    CHECK(std::abs(d.du[1]) < 1e-15);

    const SurfaceChart cone = SurfaceChart::cone(0.25);
    PhaseState c;
    c.x = {1.0, 0.0, 0.0};
    c.u = {0.0, 2.0, 0.0};
    const PhaseDerivative dc = geodesic_rhs(cone, c);
    CHECK(dc.du[0] == doctest::Approx(1.0));  // alpha r v^2
    CHECK(dc.du[1] == doctest::Approx(0.0));

    const SurfaceChart cyl = SurfaceChart::cylinder(1.0);
    PhaseState y;
    y.x = {0.3, 2.0, 0.0};
    y.u = {0.7, -0.4, 0.0};
    const PhaseDerivative dy = geodesic_rhs(cyl, y);
    CHECK(dy.du[0] == 0.0);
    CHECK(dy.du[1] == 0.0);
}

TEST_CASE("integrate_geodesic reference trajectories") {
    const SurfaceChart s2 = SurfaceChart::sphere2(1.0);
    PhaseState eq;
    eq.x = {kPi / 2, 0.0, 0.0};
    eq.u = {0.0, 1.0, 0.0};
    const Trajectory t1 = integrate_geodesic(s2, eq, kPi, 1e-10);
    CHECK(t1.status == TrajectoryStatus::ok);
    CHECK(std::abs(t1.samples.back().x[0] - kPi / 2) < 1e-9);
    CHECK(std::abs(t1.samples.back().x[1] - kPi) < 1e-9);

    const SurfaceChart cone = SurfaceChart::cone(0.25);
    PhaseState radial;
    radial.x = {1.0, 0.0, 0.0};
    radial.u = {1.0, 0.0, 0.0};
    const Trajectory t2 = integrate_geodesic(cone, radial, 2.0, 1e-10);
    CHECK(t2.samples.back().x[0] == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(t2.samples.back().x[1] == doctest::Approx(0.0));

    // r(t)^2 = r0^2 + H t^2 + 2 t sqrt(H r0^2 - L3^2/alpha) on the cone
    PhaseState spiral;
    spiral.x = {1.0, 0.0, 0.0};
    spiral.u = {0.6, 1.0, 0.0};
    const Trajectory t3 = integrate_geodesic(cone, spiral, 1.0, 1e-12);
    CHECK(std::abs(t3.samples.back().x[0] - std::sqrt(2.81)) < 1e-8);
}

TEST_CASE("trajectory samples are strictly increasing in t") {
    const SurfaceChart s2 = SurfaceChart::sphere2(1.0);
    std::mt19937_64 rng(5);
    const PhaseState st = random_s2_state_banded(s2, rng, 0.2, 0.9);
    const Trajectory traj = integrate_geodesic(s2, st, 4.0, 1e-9);
    for (size_t k = 1; k < traj.samples.size(); ++k)
        REQUIRE(traj.samples[k].t > traj.samples[k - 1].t);

    const Trajectory dense = integrate_geodesic(s2, st, 4.0, 1e-9, 0.05);
    // t = 0, 0.05, ..., then the endpoint; the last grid node may or may not
    // coincide with t_end depending on accumulated rounding
    CHECK(dense.samples.size() >= 81);
    CHECK(dense.samples.size() <= 82);
    CHECK(dense.samples.back().t == doctest::Approx(4.0));
    // Hermite samples stay on the trajectory: check H conservation at samples
    const IntegralSet I0 = integrals_at(s2, dense.samples.front());
    for (const PhaseState& s : dense.samples)
        CHECK(std::abs(integrals_at(s2, s).get("H") - I0.get("H")) < 1e-7);
}

TEST_CASE("integration halts at the chart boundary") {
    const SurfaceChart cone = SurfaceChart::cone(0.25);
    PhaseState inward;
    inward.x = {1.0, 0.0, 0.0};
    inward.u = {-1.0, 0.0, 0.0};
    const Trajectory traj = integrate_geodesic(cone, inward, 2.0, 1e-10);
    CHECK(traj.status == TrajectoryStatus::boundary_hit);
    CHECK(traj.samples.back().x[0] < 1e-9);          // stopped at the tip
    CHECK(traj.samples.back().t == doctest::Approx(1.0).epsilon(1e-6));

    // a meridian geodesic runs into the pole
    const SurfaceChart s2 = SurfaceChart::sphere2(1.0);
    PhaseState meridian;
    meridian.x = {1.0, 0.0, 0.0};
    meridian.u = {-1.0, 0.0, 0.0};
    const Trajectory t2 = integrate_geodesic(s2, meridian, 3.0, 1e-10);
    CHECK(t2.status == TrajectoryStatus::boundary_hit);
    CHECK(t2.samples.back().x[0] < 1e-9);
}

TEST_CASE("integrals_at reference values") {
    const SurfaceChart s2 = SurfaceChart::sphere2(1.0);
    PhaseState eq;
    eq.x = {kPi / 2, 0.0, 0.0};
    eq.u = {0.0, 1.0, 0.0};
    const IntegralSet I = integrals_at(s2, eq);
    CHECK(I.get("H") == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(I.get("L1")) < 1e-15);
    CHECK(std::abs(I.get("L2")) < 1e-15);
    CHECK(I.get("L3") == doctest::Approx(1.0).epsilon(1e-14));

    const SurfaceChart s3 = SurfaceChart::sphere3(1.0);
    PhaseState p;
    p.x = {kPi / 2, kPi / 2, 0.0};
    p.u = {0.0, 0.0, 1.0};
    const IntegralSet J = integrals_at(s3, p);
    CHECK(J.get("L6") == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(J.get("H") == doctest::Approx(1.0).epsilon(1e-14));
    double sum = 0.0;
    for (int i = 1; i <= 6; ++i) sum += std::pow(J.get("L" + std::to_string(i)), 2);
    CHECK(sum == doctest::Approx(J.get("H")).epsilon(1e-13));

    // zero velocity: H = 0 and every momentum vanishes
    PhaseState rest;
    rest.x = {1.1, 0.7, 0.0};
    const IntegralSet K = integrals_at(s2, rest);
    CHECK(K.get("H") == 0.0);
    CHECK(K.get("L1") == 0.0);
    CHECK(K.get("L2") == 0.0);
    CHECK(K.get("L3") == 0.0);
    CHECK_FALSE(K.defined("I1"));  // undefined at zero speed
    CHECK_FALSE(K.defined("I2"));
}

TEST_CASE("integrals_at reports undefined entries per name") {
    const SurfaceChart cone = SurfaceChart::cone(0.25);
    PhaseState radial;
    radial.x = {2.0, 0.5, 0.0};
    radial.u = {0.7, 0.0, 0.0};
    const IntegralSet I = integrals_at(cone, radial);
    CHECK_FALSE(I.defined("I4"));  // divides by v
    CHECK(I.defined("I3"));
    CHECK(I.defined("H"));
    CHECK_THROWS_AS(I.get("I4"), std::runtime_error);
    CHECK_THROWS_AS(I.get("nope"), std::out_of_range);
}

TEST_CASE("pointwise relation checks") {
    const SurfaceChart s2 = SurfaceChart::sphere2(1.0);
    PhaseState a;
    a.x = {kPi / 3, 1.2, 0.0};
    a.u = {0.7, -0.4, 0.0};
    for (const auto& [name, res] : relation_checks(s2, a)) {
        INFO(name);
        CHECK(std::abs(res) < 1e-12);
    }

    const SurfaceChart s3 = SurfaceChart::sphere3(1.0);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        PhaseState b = random_state(s3, rng, 0.3, 1.2);
        // keep well away from the det Q = 0 azimuth for the momentum recombination
        if (std::abs(std::sin(b.x[2])) < 0.25) continue;
        for (const auto& [name, res] : relation_checks(s3, b)) {
            INFO(name, " at trial ", trial);
            CHECK(std::abs(res) < 1e-12);
        }
    }

    // det Q at (pi/2, pi/2, pi/2) is exactly 1
    double P[3][3], Q[3][3];
    const double mid[3] = {kPi / 2, kPi / 2, kPi / 2};
    s3_momentum_matrices(std::span(mid, 3), P, Q);
    CHECK(linalg::det(Q, 3) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(linalg::det(P, 3)) < 1e-15);
}

TEST_CASE("conservation along random geodesics") {
    std::mt19937_64 rng(13);
    const SurfaceChart charts[] = {SurfaceChart::cylinder(1.0), SurfaceChart::cone(0.25),
                                   SurfaceChart::sphere2(1.0), SurfaceChart::sphere3(1.0)};
    for (const SurfaceChart& chart : charts) {
        int done = 0;
        while (done < 10) {
            PhaseState st;
            if (chart.kind == ChartKind::sphere2) {
                st = random_s2_state_banded(chart, rng, 0.15, 0.95);
            } else {
                st = random_state(chart, rng, 0.4, 1.0);
                if (chart.kind == ChartKind::cone && std::abs(st.u[1]) < 0.1) continue;
            }
            const Trajectory traj = integrate_geodesic(chart, st, 10.0, 1e-10);
            if (traj.status != TrajectoryStatus::ok) continue;  // resample boundary hits
            ++done;
            const ConservationReport rep = conservation_report(chart, traj);
            for (const auto& e : rep.entries) {
                if (!e.evaluated) continue;
                INFO(chart.name(), " ", e.name);
                CHECK(e.max_drift < 1e-7);
            }
        }
    }
}

TEST_CASE("sphere2 geodesics trace great circles") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const SurfaceChart s2 = SurfaceChart::sphere2(1.0);
        const PhaseState st = random_s2_state_banded(s2, rng, 0.2, 0.9);
        const IntegralSet I0 = integrals_at(s2, st);
        const double L1 = I0.get("L1"), L2 = I0.get("L2"), L3 = I0.get("L3");
        const double a = std::sqrt(L1 * L1 + L2 * L2) / L3;
        const double alpha_hat = std::atan2(L1, L2);
        const Trajectory traj = integrate_geodesic(s2, st, 8.0, 1e-10);
        REQUIRE(traj.status == TrajectoryStatus::ok);
        for (const PhaseState& s : traj.samples) {
            const double res =
                std::cos(s.x[0]) / std::sin(s.x[0]) + a * std::sin(s.x[1] + alpha_hat);
            CHECK(std::abs(res) < 1e-8);
        }
    }
}

TEST_CASE("sphere3 trajectories reduce to sphere2 in the equatorial slice") {
    const SurfaceChart s3 = SurfaceChart::sphere3(1.0);
    const SurfaceChart s2 = SurfaceChart::sphere2(1.0);
    PhaseState st;
    st.x = {1.1, 0.8, 0.0};
    st.u = {0.4, 0.6, 0.0};  // phi3 = 0, u3 = 0
    // phi2 plays the role of the slice azimuth but is a bounded chart
    // coordinate, so the run must end before the great circle sweeps past pi
    const Trajectory traj = integrate_geodesic(s3, st, 2.0, 1e-11);
    REQUIRE(traj.status == TrajectoryStatus::ok);
    for (const PhaseState& s : traj.samples) {
        CHECK(std::abs(s.x[2]) < 1e-9);   // stays in the slice
        CHECK(std::abs(s.u[2]) < 1e-9);
        const IntegralSet I3 = integrals_at(s3, s);
        PhaseState red;
        red.t = s.t;
        red.x = {s.x[0], s.x[1], 0.0};
        red.u = {s.u[0], s.u[1], 0.0};
        const IntegralSet I2 = integrals_at(s2, red);
        CHECK(I3.get("L1") == doctest::Approx(I2.get("L1")).epsilon(1e-12));
        CHECK(I3.get("L2") == doctest::Approx(I2.get("L2")).epsilon(1e-12));
        CHECK(I3.get("L3") == doctest::Approx(I2.get("L3")).epsilon(1e-12));
        CHECK(std::abs(I3.get("L4")) < 1e-9);
        CHECK(std::abs(I3.get("L5")) < 1e-9);
        CHECK(std::abs(I3.get("L6")) < 1e-9);
    }
}

TEST_CASE("integrate_geodesic validates inputs") {
    const SurfaceChart s2 = SurfaceChart::sphere2(1.0);
    PhaseState st;
    st.x = {1.0, 0.0, 0.0};
    st.u = {0.1, 0.2, 0.0};
    CHECK_THROWS_AS(integrate_geodesic(s2, st, 1.0, -1e-8), std::invalid_argument);
    PhaseState bad;
    bad.x = {-0.2, 0.0, 0.0};
    CHECK_THROWS_AS(integrate_geodesic(s2, bad, 1.0, 1e-8), CoordsOutOfRange);
}
