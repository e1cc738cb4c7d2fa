#pragma once

#include "kolmo/gramian.hpp"
#include "kolmo/linalg.hpp"
#include "kolmo/operator_model.hpp"

#include <optional>

namespace kolmo {

struct ConditionReport {
    bool c1 = false;  ///< Hormander bracket rank
    int c1Dimension = 0;
    bool c2 = false;  ///< no B-invariant subspace inside Ker A
    bool c3 = false;  ///< C(1) positive definite
    double c3MinEigenvalue = 0.0;
    bool c4 = false;  ///< Kalman rank
    int kalmanRank = 0;
    bool c5 = false;  ///< block-form validity (when strata supplied)
    bool consistent = false;
};

enum class BoundaryVerdict { Barrier, NonRegular, Undetermined };

/// Kalman rank of [sigma | B sigma | ... | B^{N-1} sigma].
inline std::pair<int, bool> kalman_rank(const Matrix& sigma, const Matrix& B) {
    const int n = static_cast<int>(B.rows());
    if (B.cols() != n || sigma.rows() != n)
        throw DimensionMismatch("kalman_rank: inconsistent dimensions");
    const int m = static_cast<int>(sigma.cols());
    Matrix stack(n, n * m);
    Matrix cur = sigma;
    for (int i = 0; i < n; ++i) {
        stack.middleCols(i * m, m) = cur;
        cur = B * cur;
    }
    const int r = numeric_rank(stack);
    return {r, r == n};
}

/// Hormander rank via the bracket structure of constant fields: each
/// commutator [.., Y] maps a constant field with coefficient v to Bv, so the
/// generated spatial span is grown iteratively from the columns of sigma.
/// Returns (holds, generatedDimension) with the +1 for the time direction
/// carried by Y.
inline std::pair<bool, int> hormander_bracket_rank(const Matrix& sigma, const Matrix& B) {
    const int n = static_cast<int>(B.rows());
    if (B.cols() != n || sigma.rows() != n)
        throw DimensionMismatch("hormander_bracket_rank: inconsistent dimensions");
    if (sigma.cols() == 0) return {false, 1};  // only the time direction
    // Incremental orthonormal basis of span{B^i sigma_col}.
    std::vector<Vector> basis;
    const double scale = std::max({sigma.cwiseAbs().maxCoeff(), 1.0});
    std::vector<Vector> frontier;
    for (int k = 0; k < sigma.cols(); ++k) frontier.push_back(sigma.col(k));
    int guard = 0;
    while (!frontier.empty() && static_cast<int>(basis.size()) < n && guard++ <= n + 1) {
        std::vector<Vector> added;
        for (const Vector& v : frontier) {
            Vector w = v;
            for (const Vector& b : basis) w -= b.dot(w) * b;
            if (w.norm() > 1e-10 * scale) {
                w.normalize();
                basis.push_back(w);
                added.push_back(w);
            }
        }
        frontier.clear();
        for (const Vector& b : added) frontier.push_back(B * b);
    }
    const int dim = static_cast<int>(basis.size()) + 1;  // Y spans the time direction
    return {dim == n + 1, dim};
}

/// C2: true iff the largest B^T-invariant subspace contained in Ker(A) is
/// trivial, via the fixed point V_{k+1} = V_k cap (B^T)^{-1} V_k.
/// (The transpose matches the drift convention drift(x) = Bx: the dual of
/// the Kalman stack lives in Ker(sigma^T) = Ker(A).)
inline bool invariant_subspace_check(const Matrix& A, const Matrix& B) {
    const int n = static_cast<int>(A.rows());
    Matrix V = nullspace(A);  // columns span V_0 = Ker A
    const Matrix Bt = B.transpose();
    for (int it = 0; it <= n; ++it) {
        if (V.cols() == 0) return true;
        // preimage of span(V) under B^T: null(P_perp B^T) where P_perp = I - V V^T
        const Matrix Pperp = Matrix::Identity(n, n) - V * V.transpose();
        const Matrix pre = nullspace(Pperp * Bt);
        // intersect span(V) with span(pre): null([I-VV^T; I-pre pre^T])
        Matrix stacked(2 * n, n);
        stacked.topRows(n) = Pperp;
        stacked.bottomRows(n) = Matrix::Identity(n, n) - pre * pre.transpose();
        const Matrix inter = nullspace(stacked);
        if (inter.cols() == V.cols()) return false;  // stabilized, nontrivial
        V = inter;
    }
    return V.cols() == 0;
}

/// C3 at a single time: minimum eigenvalue of C(t) against a relative
/// threshold tol * trace / N.
inline std::pair<bool, double> gramian_positivity(const OperatorSpec& spec, double t,
                                                  double tol = 1e-9) {
    if (t <= 0.0) throw NonPositiveTime("gramian_positivity: t must be positive");
    const Matrix c = gramian_block_exponential(spec.B, spec.A, t);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (c + c.transpose()));
    const double minEig = es.eigenvalues().minCoeff();
    const double thresh = tol * std::max(c.trace(), 0.0) / spec.N;
    return {minEig > thresh, minEig};
}

/// C5: structural block-form validity of the supplied strata.
inline bool block_form_valid(const OperatorSpec& spec) {
    try {
        validate_operator(spec.A, spec.B, std::nullopt, spec.m, spec.lambda);
        return true;
    } catch (const InputError&) {
        return false;
    }
}

/// Runs C1-C5 and the mutual-consistency flag.  Never throws on a negative
/// verdict; an inconsistency is reported, not raised.
inline ConditionReport check_all(const OperatorSpec& spec, bool checkC5 = true) {
    ConditionReport rep;
    const Matrix sigma = spec.effectiveSigma();
    auto [hold1, dim1] = hormander_bracket_rank(sigma, spec.B);
    rep.c1 = hold1;
    rep.c1Dimension = dim1;
    rep.c2 = invariant_subspace_check(spec.A, spec.B);
    auto [hold3, minEig3] = gramian_positivity(spec, 1.0);
    rep.c3 = hold3;
    rep.c3MinEigenvalue = minEig3;
    auto [rank4, hold4] = kalman_rank(sigma, spec.B);
    rep.c4 = hold4;
    rep.kalmanRank = rank4;
    rep.c5 = checkC5 && block_form_valid(spec);
    rep.consistent = (rep.c1 == rep.c2) && (rep.c2 == rep.c3) && (rep.c3 == rep.c4);
    return rep;
}

/// Pointwise boundary classifier: barrier when the normal is diffusive or
/// the drift field Y(z0) = (B x0, -1) points along the outer normal.
inline BoundaryVerdict fichera_classify(const OperatorSpec& spec, const GroupPoint& z0,
                                        const Vector& nu, double tol = 1e-10) {
    if (static_cast<int>(nu.size()) != spec.N + 1)
        throw DimensionMismatch("fichera_classify: nu must live in R^{N+1}");
    if (nu.norm() == 0.0) throw ZeroNormal("fichera_classify: nu must be nonzero");
    const Vector nux = nu.head(spec.N);
    const double diffusive = nux.dot(spec.A * nux);
    if (diffusive > tol) return BoundaryVerdict::Barrier;
    // Y(z0) = (B x0, -1)
    const double drift = (spec.B * z0.x).dot(nux) - nu(spec.N);
    if (drift > tol) return BoundaryVerdict::Barrier;
    if (drift < -tol) return BoundaryVerdict::NonRegular;
    return BoundaryVerdict::Undetermined;
}

}  // namespace kolmo
