#include <doctest.h>

#include "helpers.hpp"
#include "kolmo/gramian.hpp"

using namespace kolmo;

TEST_CASE("k2 Gramian closed forms") {
    const OperatorSpec spec = testutil::k2();
    const GramianBundle b = gramian(spec, 1.0);
    CHECK(b.C(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.C(0, 1) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(b.C(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(b.Cinv(0, 0) == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(b.Cinv(0, 1) == doctest::Approx(6.0).epsilon(1e-10));
    CHECK(b.Cinv(1, 1) == doctest::Approx(12.0).epsilon(1e-10));

    for (double t : {0.1, 0.7, 2.0, 10.0}) {
        const GramianBundle bt = gramian(spec, t);
        CHECK(std::exp(bt.logDetC) ==
              doctest::Approx(std::pow(t, 4) / 12.0).epsilon(1e-9));
        // transition matrix: E(t) = exp(-tB) = [[1,0],[-t,1]]
        CHECK(bt.E(0, 0) == doctest::Approx(1.0));
        CHECK(bt.E(1, 0) == doctest::Approx(-t));
    }
}

TEST_CASE("two computation routes agree on random specs") {
    Rng rng(21);
    for (int i = 0; i < 60; ++i) {
        const OperatorSpec spec = testutil::random_spec(rng);
        const double t = 0.05 + 2.0 * rng.uniform();
        // gramian() itself cross-checks block exponential vs quadrature
        CHECK_NOTHROW(gramian(spec, t, true, true));
    }
}

TEST_CASE("dilation-invariant specs scale as C(t) = D0(rt) C(1) D0(rt)") {
    const OperatorSpec spec = testutil::k2();
    const DilationGroup g = dilation_exponents(spec);
    const Matrix c1 = gramian(spec, 1.0).C;
    for (double t : {0.3, 1.7, 4.0}) {
        const Matrix d = spatial_dilation(g, std::sqrt(t));
        const Matrix expected = d * c1 * d;
        const Matrix got = gramian(spec, t).C;
        CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-10 * expected.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("gramian rejects non-positive times and singular cases") {
    const OperatorSpec spec = testutil::k2();
    CHECK_THROWS_AS(gramian(spec, 0.0), NonPositiveTime);
    CHECK_THROWS_AS(gramian(spec, -1.0), NonPositiveTime);

    // decoupled degenerate direction: C(t) singular
    OperatorSpec bad;
    bad.N = 2;
    bad.A = Matrix::Zero(2, 2);
    bad.A(0, 0) = 1.0;
    bad.B = Matrix::Zero(2, 2);
    bad.m = {1, 1};
    CHECK_THROWS_AS(gramian(bad, 1.0, true, false), GramianSingular);
    const GramianBundle b = gramian(bad, 1.0, false, false);
    CHECK_FALSE(b.positive);
}

TEST_CASE("cache returns shared bundles") {
    GramianCache cache(testutil::k2());
    auto a = cache.at(0.5);
    auto b = cache.at(0.5);
    CHECK(a.get() == b.get());
    CHECK(a->t == doctest::Approx(0.5));
}
