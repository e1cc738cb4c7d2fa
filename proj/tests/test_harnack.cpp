#include <doctest.h>

#include "helpers.hpp"
#include "kolmo/harnack.hpp"

using namespace kolmo;

namespace {

AdmissibleCurve drift_curve(const OperatorSpec& spec, const GroupPoint& start, double T,
                            int steps = 32) {
    return integrate_admissible(spec, start,
                                ControlGrid::zero(T, steps, spec.effectiveSigma().cols()));
}

}  // namespace

TEST_CASE("tube radius shrinks toward the boundary and with the domain") {
    const OperatorSpec spec = testutil::k2();
    const DilationGroup g = dilation_exponents(spec);
    BoxUnion big(centered_box(2, 2.0, -2.0, 2.0));
    BoxUnion small(centered_box(2, 1.0, -1.0, 1.0));
    const GroupPoint center(Vector::Zero(2), 0.0);
    const double rBig = tube_radius(spec, center, big, g);
    const double rSmall = tube_radius(spec, center, small, g);
    CHECK(rBig > rSmall);
    CHECK(rSmall > 0.1);

    Vector nearEdge(2);
    nearEdge << 0.95, 0.0;
    CHECK(tube_radius(spec, GroupPoint(nearEdge, 0.0), small, g) < rSmall);

    Vector onEdge(2);
    onEdge << 1.0, 0.0;
    CHECK_THROWS_AS(tube_radius(spec, GroupPoint(onEdge, 0.0), small, g), PointOnBoundary);
}

TEST_CASE("zero-control chain uses delta0 = beta r0^2 and k = ceil(T/delta0)") {
    const OperatorSpec spec = testutil::k2();
    BoxUnion domain(centered_box(2, 4.0, -4.0, 4.0));
    HarnackParams params;
    params.rCap = 0.5;
    const double T = 1.0;
    const AdmissibleCurve curve = drift_curve(spec, GroupPoint(Vector::Zero(2), 0.0), T);
    const HarnackChain chain = build_chain(spec, curve, domain, params);
    // domain is large, so r0 saturates at the cap
    CHECK(chain.r0 == doctest::Approx(params.rCap));
    CHECK(chain.delta0 == doctest::Approx(params.cylinder.beta * chain.r0 * chain.r0));
    CHECK(chain.k == static_cast<int>(std::ceil(T / chain.delta0 - 1e-12)));
    CHECK(chain.bound == doctest::Approx(std::pow(params.c, chain.k)));
    CHECK(chain.points.size() == static_cast<size_t>(chain.k) + 1);
}

TEST_CASE("link time offset lands on the K- slice") {
    const OperatorSpec spec = testutil::k2();
    const DilationGroup g = dilation_exponents(spec);
    const CylinderParams p{};
    // omega == 0, a = 0, b = (beta+gamma)/2: link radius r = 1 and gamma(b)
    // sits on the K^-_1 time slice
    const double b = 0.5 * (p.beta + p.gamma);
    const double r = std::sqrt(2.0 * b / (p.beta + p.gamma));
    CHECK(r == doctest::Approx(1.0));
    const AdmissibleCurve curve = drift_curve(spec, GroupPoint(Vector::Zero(2), 0.0), b);
    CHECK(cylinder_contains(curve.trajectory.back(), curve.start, r,
                            CylinderShape::MinusSlice, spec, g, p));
}

TEST_CASE("chain invariants hold for random curves in random domains") {
    Rng rng(77);
    const OperatorSpec spec = testutil::k2();
    const DilationGroup g = dilation_exponents(spec);
    int built = 0;
    for (int trial = 0; trial < 25; ++trial) {
        const double L = 1.5 + 2.0 * rng.uniform();
        BoxUnion domain(centered_box(2, L, -L, L));
        const double T = 0.3 + 0.7 * rng.uniform();
        ControlGrid grid = ControlGrid::zero(T, 32, 1);
        for (int i = 0; i < grid.steps; ++i) grid.omega(i, 0) = 0.6 * (2.0 * rng.uniform() - 1.0);
        const AdmissibleCurve curve =
            integrate_admissible(spec, GroupPoint(Vector::Zero(2), 0.0), grid);
        HarnackParams params;
        params.rCap = 0.4;
        HarnackChain chain;
        try {
            chain = build_chain(spec, curve, domain, params);
        } catch (const CurveExitsDomain&) {
            continue;  // random control left the random box; not a chain case
        }
        ++built;
        CHECK(chain.k == static_cast<int>(std::ceil(T / chain.delta0 - 1e-12)));
        REQUIRE(chain.radii.size() + 1 == chain.points.size());
        for (size_t j = 0; j + 1 < chain.points.size(); ++j) {
            const double r = chain.radii[j];
            // consecutive membership in Q^- and the K^- slice audit
            CHECK(cylinder_contains(chain.points[j + 1], chain.points[j], r,
                                    CylinderShape::MinusBox, spec, g, params.cylinder));
            CHECK(cylinder_contains(chain.points[j + 1], chain.points[j], r,
                                    CylinderShape::MinusSlice, spec, g, params.cylinder));
            // cylinder containment in the domain (sampled corners)
            for (int cx = -1; cx <= 1; cx += 2)
                for (int cy = -1; cy <= 1; cy += 2)
                    for (int ct = -1; ct <= 0; ++ct) {
                        Vector u(2);
                        u << cx, cy;
                        const GroupPoint corner =
                            compose(chain.points[j], dilate(GroupPoint(u, ct - 1e-9), r, g), spec);
                        CHECK(domain.contains(corner));
                    }
        }
    }
    CHECK(built >= 10);
}

TEST_CASE("harnack_bound composes control and chains") {
    const OperatorSpec spec = testutil::k2();
    BoxUnion domain(centered_box(2, 3.0, -3.0, 1.0));
    HarnackParams params;
    params.rCap = 0.4;
    const GroupPoint z0(Vector::Zero(2), 0.0);

    SUBCASE("target = z0 has bound 1") {
        const auto out = harnack_bound(spec, z0, {z0}, domain, params);
        CHECK(out.front().second == doctest::Approx(1.0));
    }
    SUBCASE("drift-flow target gets a finite bound") {
        const double s = 0.6;
        const GroupPoint target(matrix_exponential(s * spec.B) * z0.x, -s);
        const auto out = harnack_bound(spec, z0, {target}, domain, params, 64);
        CHECK(out.front().second >= 1.0);
        CHECK(std::isfinite(out.front().second));
    }
    SUBCASE("a larger domain never worsens the bound") {
        Vector x(2);
        x << 0.2, -0.1;
        const GroupPoint target(x, -0.5);
        BoxUnion larger(centered_box(2, 6.0, -6.0, 1.0));
        const double b1 = harnack_bound(spec, z0, {target}, domain, params, 64).front().second;
        const double b2 = harnack_bound(spec, z0, {target}, larger, params, 64).front().second;
        CHECK(b2 <= b1 + 1e-12);
    }
    SUBCASE("targets above z0 in time are rejected") {
        const GroupPoint above(Vector::Zero(2), 0.5);
        CHECK_THROWS_AS(harnack_bound(spec, z0, {above}, domain, params), TargetNotAttainable);
    }
}

TEST_CASE("strong maximum principle report stays inside the attainable set") {
    const OperatorSpec spec = testutil::k2();
    BoxUnion domain(centered_box(2, 1.0, -1.0, 0.25));
    HarnackParams params;
    params.rCap = 0.25;
    const GroupPoint z0(Vector::Zero(2), 0.0);
    const PropagationReport rep = strong_max_report(spec, z0, domain, params, 6);
    CHECK(rep.attainableCells > 0);
    CHECK(rep.boundedCells > 0);
    CHECK(rep.boundedCells <= rep.attainableCells);
    for (const auto& cell : rep.cells) {
        CHECK(cell.center.t < z0.t);
        if (cell.chainFound) CHECK(cell.bound >= 1.0);
    }
}

TEST_CASE("window energy rule rejects impossible thresholds") {
    const OperatorSpec spec = testutil::k2();
    BoxUnion domain(centered_box(2, 5.0, -5.0, 5.0));
    ControlGrid grid = ControlGrid::zero(1.0, 16, 1);
    for (int i = 0; i < grid.steps; ++i) grid.omega(i, 0) = 50.0;
    const AdmissibleCurve curve =
        integrate_admissible(spec, GroupPoint(Vector::Zero(2), 0.0), grid);
    HarnackParams params;
    params.h = 1e-6;
    params.rCap = 0.5;
    CHECK_THROWS_AS(build_chain(spec, curve, domain, params), Error);
}
