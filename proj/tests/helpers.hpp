#pragma once

#include "kolmo/operator_model.hpp"
#include "kolmo/rng.hpp"

#include <cmath>
#include <vector>

namespace testutil {

using kolmo::Matrix;
using kolmo::OperatorSpec;
using kolmo::Vector;

/// Kolmogorov's 1934 operator: dx1^2 + x1 dx2 - dt.
inline OperatorSpec k2() {
    Matrix A = Matrix::Zero(2, 2);
    A(0, 0) = 1.0;
    Matrix B = Matrix::Zero(2, 2);
    B(1, 0) = 1.0;
    Matrix sigma = Matrix::Zero(2, 1);
    sigma(0, 0) = std::sqrt(2.0);
    return kolmo::validate_operator(A, B, sigma, {1, 1});
}

/// Three-level chain (Q = 9): dx1^2 + x1 dx2 + x2 dx3 - dt.
inline OperatorSpec k3() {
    Matrix A = Matrix::Zero(3, 3);
    A(0, 0) = 1.0;
    Matrix B = Matrix::Zero(3, 3);
    B(1, 0) = 1.0;
    B(2, 1) = 1.0;
    Matrix sigma = Matrix::Zero(3, 1);
    sigma(0, 0) = std::sqrt(2.0);
    return kolmo::validate_operator(A, B, sigma, {1, 1, 1});
}

/// K2 with a nonzero starred entry B(0,0) = 0.3 (non-dilation-invariant,
/// tr B != 0).
inline OperatorSpec k2_perturbed(double b00 = 0.3) {
    Matrix A = Matrix::Zero(2, 2);
    A(0, 0) = 1.0;
    Matrix B = Matrix::Zero(2, 2);
    B(1, 0) = 1.0;
    B(0, 0) = b00;
    Matrix sigma = Matrix::Zero(2, 1);
    sigma(0, 0) = std::sqrt(2.0);
    return kolmo::validate_operator(A, B, sigma, {1, 1});
}

/// Random valid block-form spec: random non-increasing strata, SPD A0 with
/// eigenvalues in [1/2, 2], full-rank subdiagonal blocks, arbitrary starred
/// blocks on and above the diagonal.
inline OperatorSpec random_spec(kolmo::Rng& rng, int maxN = 5) {
    while (true) {
        std::vector<int> m;
        int n = 0;
        int prev = 1 + static_cast<int>(rng.uniform() * 2.0);  // m0 in {1,2,3}
        prev = std::min(prev + 1, 3);
        for (int j = 0; j < 3; ++j) {
            int mj = 1 + static_cast<int>(rng.uniform() * prev);
            mj = std::min(mj, prev);
            if (j == 0) mj = prev;
            if (n + mj > maxN) break;
            m.push_back(mj);
            n += mj;
            prev = mj;
            if (rng.uniform() < 0.4) break;
        }
        if (m.empty()) continue;
        const int N = n;
        const int m0 = m[0];

        // A0 = Q diag(lam) Q^T with lam in [1/2, 2]
        Matrix G(m0, m0);
        for (int i = 0; i < m0; ++i)
            for (int j = 0; j < m0; ++j) G(i, j) = rng.gaussian();
        Eigen::HouseholderQR<Matrix> qr(G);
        Matrix Q = qr.householderQ();
        Vector lam(m0);
        for (int i = 0; i < m0; ++i) lam(i) = 0.5 + 1.5 * rng.uniform();
        Matrix A = Matrix::Zero(N, N);
        A.topLeftCorner(m0, m0) = Q * lam.asDiagonal() * Q.transpose();

        Matrix B = Matrix::Zero(N, N);
        std::vector<int> off(m.size() + 1, 0);
        for (size_t j = 0; j < m.size(); ++j) off[j + 1] = off[j] + m[j];
        // blocks on and above the block diagonal: arbitrary
        for (size_t bi = 0; bi < m.size(); ++bi)
            for (size_t bj = bi; bj < m.size(); ++bj)
                for (int r = 0; r < m[bi]; ++r)
                    for (int c = 0; c < m[bj]; ++c)
                        B(off[bi] + r, off[bj] + c) = rng.gaussian();
        // subdiagonal blocks: random with full row rank (retry on failure)
        bool ok = true;
        for (size_t j = 1; j < m.size(); ++j) {
            Matrix bj(m[j], m[j - 1]);
            for (int r = 0; r < m[j]; ++r)
                for (int c = 0; c < m[j - 1]; ++c) bj(r, c) = rng.gaussian();
            if (kolmo::numeric_rank(bj) < m[j]) {
                ok = false;
                break;
            }
            B.block(off[j], off[j - 1], m[j], m[j - 1]) = bj;
        }
        if (!ok) continue;
        try {
            return kolmo::validate_operator(A, B, std::nullopt, m, 2.5);
        } catch (const kolmo::InputError&) {
            continue;
        }
    }
}

/// Random spec violating hypoellipticity: a diffusive block that the drift
/// never couples into the degenerate directions.
inline OperatorSpec broken_spec(kolmo::Rng& rng, int maxN = 5) {
    OperatorSpec spec = random_spec(rng, maxN);
    if (spec.kappa() == 0) {
        // append a fully decoupled degenerate coordinate
        const int N = spec.N + 1;
        Matrix A = Matrix::Zero(N, N);
        A.topLeftCorner(spec.N, spec.N) = spec.A;
        Matrix B = Matrix::Zero(N, N);
        B.topLeftCorner(spec.N, spec.N) = spec.B;
        OperatorSpec out;
        out.N = N;
        out.A = A;
        out.B = B;
        out.m = spec.m;
        out.m.push_back(1);
        out.lambda = spec.lambda;
        return out;
    }
    // sever the last subdiagonal block
    OperatorSpec out = spec;
    const int j = out.kappa();
    out.B.block(out.strataOffset(j), out.strataOffset(j - 1), out.m[j], out.m[j - 1]).setZero();
    return out;
}

}  // namespace testutil
