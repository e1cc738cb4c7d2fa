#pragma once

#include "kolmo/linalg.hpp"
#include "kolmo/types.hpp"

#include <numeric>
#include <optional>
#include <vector>

namespace kolmo {

/// Anisotropic dilation family D(r) = diag(r^{q_1},...,r^{q_N}, r^2).
struct DilationGroup {
    std::vector<int> q;  ///< spatial exponents, q_j = 2j+1 on stratum j
    int Q = 0;           ///< homogeneous spatial dimension, Q = sum (2j+1) m_j

    static constexpr int timeExponent = 2;
};

/// A constant-coefficient Kolmogorov operator Tr(A D^2) + <Bx, D> - d_t in
/// the canonical block basis.  Drift convention: drift(x) = B x, so
/// E(t) = exp(-tB) and the subdiagonal block B_j sits at row stratum j,
/// column stratum j-1.
struct OperatorSpec {
    int N = 0;
    Matrix A;                     ///< N x N, only the upper-left m0 x m0 block nonzero
    Matrix B;                     ///< N x N drift matrix in block form
    std::optional<Matrix> sigma;  ///< N x m with A = sigma sigma^T / 2 when given
    std::vector<int> m;           ///< strata sizes (m0,...,m_kappa)
    double lambda = 1.0;          ///< ellipticity bound: eig(A0) in [1/lambda, lambda]

    int m0() const { return m.empty() ? N : m[0]; }
    int kappa() const { return static_cast<int>(m.size()) - 1; }

    Matrix A0() const { return A.topLeftCorner(m0(), m0()); }

    /// Offset of stratum j within 1..N.
    int strataOffset(int j) const {
        int off = 0;
        for (int i = 0; i < j; ++i) off += m[i];
        return off;
    }

    /// Diffusion factor with A = sigma sigma^T / 2; computed from A when not
    /// supplied (rank-revealing symmetric factor).
    Matrix effectiveSigma() const {
        if (sigma) return *sigma;
        Eigen::SelfAdjointEigenSolver<Matrix> es(A);
        const Vector& lam = es.eigenvalues();
        const double thresh = lam.cwiseAbs().maxCoeff() * 1e-12;
        std::vector<int> keep;
        for (int i = 0; i < lam.size(); ++i)
            if (lam(i) > thresh) keep.push_back(i);
        Matrix s(N, static_cast<int>(keep.size()));
        for (size_t k = 0; k < keep.size(); ++k)
            s.col(static_cast<int>(k)) = es.eigenvectors().col(keep[k]) * std::sqrt(2.0 * lam(keep[k]));
        return s;
    }

    /// Principal-part drift: all starred blocks zeroed, subdiagonal kept.
    Matrix principalB() const {
        Matrix b0 = Matrix::Zero(N, N);
        for (int j = 1; j <= kappa(); ++j) {
            const int ro = strataOffset(j), co = strataOffset(j - 1);
            b0.block(ro, co, m[j], m[j - 1]) = B.block(ro, co, m[j], m[j - 1]);
        }
        return b0;
    }

    bool dilationInvariant(double tol = 1e-12) const {
        return (B - principalB()).cwiseAbs().maxCoeff() <= tol;
    }

    /// Copy of the spec with B replaced by the principal part B0.
    OperatorSpec principalPart() const {
        OperatorSpec p = *this;
        p.B = principalB();
        return p;
    }
};

namespace detail {

inline double default_lambda(const Matrix& a0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a0);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo <= 0.0) throw A0NotPositive("A0 is not positive definite");
    return std::max(hi, 1.0 / lo);
}

}  // namespace detail

/// Validates (A, B, sigma, m) against the class-K block structure and
/// returns the finished spec.  Rank decisions use singular values above
/// 1e-10 times the largest one.
inline OperatorSpec validate_operator(Matrix A, Matrix B,
                                      std::optional<Matrix> sigma,
                                      std::vector<int> m,
                                      std::optional<double> lambda = std::nullopt) {
    const int N = static_cast<int>(A.rows());
    if (A.cols() != N || B.rows() != N || B.cols() != N)
        throw DimensionMismatch("A and B must be square with equal dimension");
    if (!A.allFinite() || !B.allFinite()) throw NonFinite("matrix entries must be finite");
    if (m.empty()) m = {N};
    if (std::accumulate(m.begin(), m.end(), 0) != N)
        throw DimensionMismatch("strata sizes must sum to N");
    for (size_t j = 0; j + 1 < m.size(); ++j)
        if (m[j] < m[j + 1]) throw InputError("strata sizes must be non-increasing");
    if (m.back() < 1) throw InputError("strata sizes must be positive");

    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff()))
        throw NotSymmetric("A must be symmetric");

    OperatorSpec spec;
    spec.N = N;
    spec.A = std::move(A);
    spec.B = std::move(B);
    spec.m = std::move(m);

    const int m0 = spec.m0();
    // Outside the diffusive block A must vanish.
    if (N > m0) {
        const double offNorm =
            std::max(spec.A.bottomRows(N - m0).cwiseAbs().maxCoeff(),
                     spec.A.rightCols(N - m0).cwiseAbs().maxCoeff());
        if (offNorm > 1e-12 * std::max(1.0, spec.A.cwiseAbs().maxCoeff()))
            throw InputError("A must vanish outside the upper-left m0 x m0 block");
    }

    spec.lambda = lambda ? *lambda : detail::default_lambda(spec.A0());
    {
        Eigen::SelfAdjointEigenSolver<Matrix> es(spec.A0());
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        const double tol = 1e-9 * std::max(1.0, hi);
        if (lo < 1.0 / spec.lambda - tol || hi > spec.lambda + tol)
            throw A0NotPositive("eigenvalues of A0 must lie in [1/lambda, lambda]");
    }

    if (sigma) {
        if (sigma->rows() != N) throw DimensionMismatch("sigma must have N rows");
        const Matrix res = spec.A - 0.5 * (*sigma) * sigma->transpose();
        if (res.cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, spec.A.cwiseAbs().maxCoeff()))
            throw InputError("sigma does not factor A: ||A - sigma sigma^T/2|| too large");
        spec.sigma = std::move(sigma);
    }

    // Subdiagonal blocks must have full row rank; everything below them zero.
    for (int j = 1; j <= spec.kappa(); ++j) {
        const int ro = spec.strataOffset(j), co = spec.strataOffset(j - 1);
        const Matrix bj = spec.B.block(ro, co, spec.m[j], spec.m[j - 1]);
        if (numeric_rank(bj) < spec.m[j])
            throw BlockRankDeficient(j, "block B_" + std::to_string(j) + " has deficient rank");
        for (int i = j + 1; i <= spec.kappa(); ++i) {
            const Matrix below = spec.B.block(spec.strataOffset(i), co, spec.m[i], spec.m[j - 1]);
            if (below.cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, spec.B.cwiseAbs().maxCoeff()))
                throw InputError("B has nonzero entries below the subdiagonal blocks");
        }
    }
    return spec;
}

inline DilationGroup dilation_exponents(const OperatorSpec& spec) {
    DilationGroup g;
    g.q.reserve(spec.N);
    g.Q = 0;
    for (size_t j = 0; j < spec.m.size(); ++j) {
        const int qj = 2 * static_cast<int>(j) + 1;
        for (int i = 0; i < spec.m[j]; ++i) g.q.push_back(qj);
        g.Q += qj * spec.m[j];
    }
    return g;
}

/// Spatial dilation matrix D0(r).
inline Matrix spatial_dilation(const DilationGroup& g, double r) {
    Matrix d = Matrix::Zero(static_cast<int>(g.q.size()), static_cast<int>(g.q.size()));
    for (size_t i = 0; i < g.q.size(); ++i) d(i, i) = std::pow(r, g.q[i]);
    return d;
}

inline GroupPoint dilate(const GroupPoint& z, double r, const DilationGroup& g) {
    if (r <= 0.0) throw NonPositiveRadius("dilate: r must be positive");
    GroupPoint out = z;
    for (int i = 0; i < z.dim(); ++i) out.x(i) = std::pow(r, g.q[i]) * z.x(i);
    out.t = r * r * z.t;
    return out;
}

/// Scaled drift B_r with block (i,j) multiplied by r^{2(j-i+1)}; converges
/// to the principal part B0 as r -> 0.
inline Matrix scaled_B(const Matrix& B, double r, const DilationGroup& g) {
    if (r <= 0.0) throw NonPositiveRadius("scaled_B: r must be positive");
    const int n = static_cast<int>(g.q.size());
    Matrix out(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            // exponent 2(j-i+1) in stratum indices; q = 2*stratum+1.
            const int si = (g.q[i] - 1) / 2, sj = (g.q[j] - 1) / 2;
            out(i, j) = B(i, j) * std::pow(r, 2 * (sj - si + 1));
        }
    return out;
}

}  // namespace kolmo
