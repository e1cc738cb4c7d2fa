#include <doctest.h>

#include "helpers.hpp"
#include "kolmo/operator_model.hpp"

using namespace kolmo;

TEST_CASE("k2 validates and exposes the block structure") {
    const OperatorSpec spec = testutil::k2();
    CHECK(spec.N == 2);
    CHECK(spec.m0() == 1);
    CHECK(spec.kappa() == 1);
    CHECK(spec.dilationInvariant());
    const DilationGroup g = dilation_exponents(spec);
    CHECK(g.q == std::vector<int>{1, 3});
    CHECK(g.Q == 4);
}

TEST_CASE("k3 has homogeneous dimension 9") {
    const DilationGroup g = dilation_exponents(testutil::k3());
    CHECK(g.q == std::vector<int>{1, 3, 5});
    CHECK(g.Q == 9);
}

TEST_CASE("validation rejects malformed input") {
    Matrix A = Matrix::Zero(2, 2);
    A(0, 0) = 1.0;
    Matrix B = Matrix::Zero(2, 2);
    B(1, 0) = 1.0;

    SUBCASE("non-symmetric A") {
        Matrix bad = A;
        bad(0, 1) = 0.5;
        CHECK_THROWS_AS(validate_operator(bad, B, std::nullopt, {1, 1}), NotSymmetric);
    }
    SUBCASE("A leaking outside the diffusive block") {
        Matrix bad = A;
        bad(1, 1) = 1.0;
        CHECK_THROWS_AS(validate_operator(bad, B, std::nullopt, {1, 1}), InputError);
    }
    SUBCASE("rank-deficient subdiagonal block") {
        Matrix bad = Matrix::Zero(2, 2);
        CHECK_THROWS_AS(validate_operator(A, bad, std::nullopt, {1, 1}), BlockRankDeficient);
    }
    SUBCASE("strata sizes must sum to N") {
        CHECK_THROWS_AS(validate_operator(A, B, std::nullopt, {1, 1, 1}), DimensionMismatch);
    }
    SUBCASE("increasing strata rejected") {
        Matrix A3 = Matrix::Zero(3, 3);
        A3(0, 0) = 1.0;
        Matrix B3 = Matrix::Zero(3, 3);
        B3(1, 0) = 1.0;
        B3(2, 0) = 1.0;
        CHECK_THROWS_AS(validate_operator(A3, B3, std::nullopt, {1, 2}), InputError);
    }
    SUBCASE("sigma must factor A") {
        Matrix sigma = Matrix::Zero(2, 1);
        sigma(0, 0) = 1.0;  // sigma sigma^T / 2 = diag(1/2, 0) != A
        CHECK_THROWS_AS(validate_operator(A, B, sigma, {1, 1}), InputError);
    }
    SUBCASE("entries below the subdiagonal rejected") {
        Matrix A3 = Matrix::Zero(3, 3);
        A3(0, 0) = 1.0;
        Matrix B3 = Matrix::Zero(3, 3);
        B3(1, 0) = 1.0;
        B3(2, 1) = 1.0;
        B3(2, 0) = 0.7;  // below B_1
        CHECK_THROWS_AS(validate_operator(A3, B3, std::nullopt, {1, 1, 1}), InputError);
    }
}

TEST_CASE("effectiveSigma factors A for random specs") {
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        const OperatorSpec spec = testutil::random_spec(rng);
        const Matrix s = spec.effectiveSigma();
        CHECK((spec.A - 0.5 * s * s.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("dilations act with the anisotropic exponents") {
    const OperatorSpec spec = testutil::k2();
    const DilationGroup g = dilation_exponents(spec);
    Vector x(2);
    x << 2.0, -3.0;
    const GroupPoint z(x, 0.5);
    const GroupPoint d = dilate(z, 2.0, g);
    CHECK(d.x(0) == doctest::Approx(4.0));
    CHECK(d.x(1) == doctest::Approx(-24.0));
    CHECK(d.t == doctest::Approx(2.0));
    CHECK_THROWS_AS(dilate(z, 0.0, g), NonPositiveRadius);
}

TEST_CASE("scaled drift converges to the principal part") {
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        const OperatorSpec spec = testutil::random_spec(rng);
        const DilationGroup g = dilation_exponents(spec);
        // exact law: B_r = r^2 D0(1/r) B D0(r)
        const double r = 0.37;
        const Matrix lhs = scaled_B(spec.B, r, g);
        const Matrix rhs =
            r * r * spatial_dilation(g, 1.0 / r) * spec.B * spatial_dilation(g, r);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + rhs.cwiseAbs().maxCoeff()));
        const Matrix limit = scaled_B(spec.B, 1e-8, g);
        CHECK((limit - spec.principalB()).cwiseAbs().maxCoeff() < 1e-10);
    }
}
