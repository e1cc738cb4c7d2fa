#include <doctest.h>

#include "helpers.hpp"
#include "kolmo/kernel.hpp"
#include "kolmo/lie_group.hpp"

using namespace kolmo;

namespace {

const GroupPoint origin2(Vector::Zero(2), 0.0);

}  // namespace

TEST_CASE("k2 on-diagonal closed form sqrt(3)/(2 pi t^2)") {
    const OperatorSpec spec = testutil::k2();
    for (double t : {0.1, 1.0, 10.0}) {
        const KernelValue v = gamma(spec, GroupPoint(Vector::Zero(2), t), origin2);
        const double expected = std::sqrt(3.0) / (2.0 * M_PI * t * t);
        CHECK(v.value == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("gamma vanishes at and before the pole time") {
    const OperatorSpec spec = testutil::k2();
    Vector x(2);
    x << 0.3, -0.2;
    CHECK(gamma(spec, GroupPoint(x, 0.0), origin2).value == 0.0);
    CHECK(gamma(spec, GroupPoint(x, -1.0), origin2).value == 0.0);
}

TEST_CASE("gamma is invariant under left translation") {
    const OperatorSpec spec = testutil::k2();
    Rng rng(31);
    for (int i = 0; i < 200; ++i) {
        Vector x(2), xi(2), h(2);
        for (int k = 0; k < 2; ++k) {
            x(k) = 2.0 * rng.uniform() - 1.0;
            xi(k) = 2.0 * rng.uniform() - 1.0;
            h(k) = 2.0 * rng.uniform() - 1.0;
        }
        const GroupPoint z(x, 0.4 + rng.uniform());
        const GroupPoint zeta(xi, -rng.uniform());
        const GroupPoint g(h, 2.0 * rng.uniform() - 1.0);
        const double lhs = gamma(spec, z, zeta).logValue;
        const double rhs = gamma(spec, compose(g, z, spec), compose(g, zeta, spec)).logValue;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
        // equivalently gamma(z; zeta) = gamma(zeta^{-1} o z; 0)
        const double canonical = gamma(spec, compose(inverse(zeta, spec), z, spec), origin2).logValue;
        CHECK(lhs == doctest::Approx(canonical).epsilon(1e-9));
    }
}

TEST_CASE("gamma0 is homogeneous of degree -Q") {
    for (const OperatorSpec& spec : {testutil::k2(), testutil::k3()}) {
        const DilationGroup g = dilation_exponents(spec);
        const GroupPoint pole(Vector::Zero(spec.N), 0.0);
        Rng rng(41);
        for (int i = 0; i < 200; ++i) {
            Vector x(spec.N);
            for (int k = 0; k < spec.N; ++k) x(k) = 2.0 * rng.uniform() - 1.0;
            const GroupPoint z(x, 0.2 + rng.uniform());
            const double r = 0.3 + 2.0 * rng.uniform();
            const double lhs = gamma0(spec, dilate(z, r, g)).logValue;
            const double rhs = gamma0(spec, z).logValue - g.Q * std::log(r);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
        }
    }
}

TEST_CASE("gamma solves the PDE (finite-difference residual)") {
    const OperatorSpec spec = testutil::k2_perturbed();
    Vector x(2);
    x << 0.4, -0.3;
    const double t = 0.8, eps = 1e-5;
    auto G = [&](double x1, double x2, double tt) {
        Vector p(2);
        p << x1, x2;
        return gamma(spec, GroupPoint(p, tt), origin2).value;
    };
    const double g0 = G(x(0), x(1), t);
    const double dxx = (G(x(0) + eps, x(1), t) - 2.0 * g0 + G(x(0) - eps, x(1), t)) / (eps * eps);
    const double dx1 = (G(x(0) + eps, x(1), t) - G(x(0) - eps, x(1), t)) / (2.0 * eps);
    const double dx2 = (G(x(0), x(1) + eps, t) - G(x(0), x(1) - eps, t)) / (2.0 * eps);
    const double dt = (G(x(0), x(1), t + eps) - G(x(0), x(1), t - eps)) / (2.0 * eps);
    const Vector bx = spec.B * x;
    const double residual = dxx + bx(0) * dx1 + bx(1) * dx2 - dt;
    CHECK(std::abs(residual) < 1e-4 * std::abs(g0) / (t * t));
}

TEST_CASE("analytic gradient matches central differences") {
    Rng rng(53);
    for (const OperatorSpec& spec :
         {testutil::k2(), testutil::k2_perturbed(), testutil::k3()}) {
        const GroupPoint pole(Vector::Zero(spec.N), 0.0);
        for (int i = 0; i < 30; ++i) {
            Vector x(spec.N);
            for (int k = 0; k < spec.N; ++k) x(k) = 1.5 * (2.0 * rng.uniform() - 1.0);
            const double t = 0.3 + rng.uniform();
            const Vector grad = grad_x_gamma(spec, GroupPoint(x, t), pole);
            const double eps = 1e-6;
            for (int k = 0; k < spec.N; ++k) {
                Vector xp = x, xm = x;
                xp(k) += eps;
                xm(k) -= eps;
                const double fd = (gamma(spec, GroupPoint(xp, t), pole).value -
                                   gamma(spec, GroupPoint(xm, t), pole).value) /
                                  (2.0 * eps);
                const double scale = std::max(std::abs(fd), std::abs(grad(k)));
                if (scale > 1e-12) CHECK(std::abs(grad(k) - fd) / scale < 1e-6);
            }
        }
    }
}

TEST_CASE("normalization against the pole variable is exactly one") {
    CHECK(normalization_check(testutil::k2(), 1.0, 48) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(normalization_check(testutil::k2_perturbed(), 0.7, 48) ==
          doctest::Approx(1.0).epsilon(1e-10));
    // integrating over the living variable instead picks up exp(-t tr B)
    const double trB = 0.3;
    CHECK(normalization_check(testutil::k2_perturbed(), 0.7, 48, true) ==
          doctest::Approx(std::exp(-0.7 * trB)).epsilon(1e-9));
}

TEST_CASE("chapman-kolmogorov reproduction") {
    const OperatorSpec spec = testutil::k2();
    Vector x(2);
    x << 0.5, -0.2;
    const GroupPoint z(x, 1.0);
    CHECK(chapman_check(spec, z, origin2, 0.5, 32) < 1e-8);
    CHECK_THROWS_AS(chapman_check(spec, z, origin2, 1.5, 16), BadTimeOrder);
}

TEST_CASE("superlevel box bounds the superlevel set") {
    const OperatorSpec spec = testutil::k2();
    const GroupPoint z0(Vector::Zero(2), 0.0);
    const double r = 5.0;
    const SpaceTimeBox box = superlevel_box(spec, z0, r);
    CHECK(box.tHi == doctest::Approx(0.0));
    CHECK(box.tLo < 0.0);
    Rng rng(67);
    for (int i = 0; i < 20000; ++i) {
        Vector x(2);
        x(0) = box.xLo(0) + rng.uniform() * (box.xHi(0) - box.xLo(0)) * 1.5 - 0.25 * (box.xHi(0) - box.xLo(0));
        x(1) = box.xLo(1) + rng.uniform() * (box.xHi(1) - box.xLo(1)) * 1.5 - 0.25 * (box.xHi(1) - box.xLo(1));
        const double t = box.tLo * 1.2 * rng.uniform();
        const GroupPoint z(x, t);
        if (superlevel_contains(spec, z, z0, r)) CHECK(box.contains(z));
    }
    CHECK_THROWS_AS(superlevel_box(spec, z0, -1.0), NonPositiveRadius);
}

TEST_CASE("mean value formula verifies on constants (quick)") {
    const OperatorSpec spec = testutil::k2();
    const GroupPoint z0(Vector::Zero(2), 0.0);
    const double err = mean_value_verify(
        spec, z0, 5.0, [](const GroupPoint&) { return 1.0; }, 200000, 2024);
    CHECK(err < 0.02);
    // non-principal drift is rejected
    CHECK_THROWS_AS(mean_value_verify(
                        testutil::k2_perturbed(), z0, 5.0,
                        [](const GroupPoint&) { return 1.0; }, 1000, 1),
                    InputError);
}

TEST_CASE("comparison report epsilon shrinks on nested level sets") {
    const OperatorSpec spec = testutil::k2_perturbed();
    const ComparisonReport rep = comparison_bounds_check(spec, {1.0, 10.0, 100.0}, 4000, 5);
    REQUIRE(rep.epsByLevel.size() == 3);
    CHECK(rep.epsByLevel[0].eps >= rep.epsByLevel[1].eps);
    CHECK(rep.epsByLevel[1].eps >= rep.epsByLevel[2].eps);
    CHECK(rep.cPlus > 0.0);
    CHECK(rep.cMinus < std::numeric_limits<double>::infinity());
}

TEST_CASE("harnack level set membership") {
    const OperatorSpec spec = testutil::k2();
    const DilationGroup g = dilation_exponents(spec);
    const GroupPoint z0(Vector::Zero(2), 0.0);
    const double r = 5.0, eps = 0.05;
    const GroupPoint deep(Vector::Zero(2), -2.0 * eps * std::pow(r, 2.0 / g.Q));
    if (superlevel_contains(spec, deep, z0, r))
        CHECK(harnack_levelset_contains(spec, deep, z0, r, eps, g));
    const GroupPoint shallow(Vector::Zero(2), -0.5 * eps * std::pow(r, 2.0 / g.Q));
    CHECK_FALSE(harnack_levelset_contains(spec, shallow, z0, r, eps, g));
}
