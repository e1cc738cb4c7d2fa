#pragma once

#include "kolmo/types.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace kolmo {

/// Matrix exponential by scaling-and-squaring with Pade approximants.
/// Nilpotent inputs (the common case here) reproduce the truncated series
/// to machine precision.
inline Matrix matrix_exponential(const Matrix& m) {
    if (!m.allFinite()) throw NonFinite("matrix_exponential: non-finite entries");
    return m.exp();
}

/// Orthonormal basis of the null space of m, columns of the result.
/// Threshold is relative to the largest singular value.
inline Matrix nullspace(const Matrix& m, double relTol = 1e-10) {
    if (m.rows() == 0 || m.cols() == 0) return Matrix::Identity(m.cols(), m.cols());
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double thresh = (sv.size() > 0 ? sv(0) : 0.0) * relTol;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > thresh) ++rank;
    return svd.matrixV().rightCols(m.cols() - rank);
}

inline int numeric_rank(const Matrix& m, double relTol = 1e-10) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    const double thresh = sv(0) * relTol;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > thresh) ++rank;
    return rank;
}

/// Symmetric square root of a PSD matrix.  Eigenvalues slightly below zero
/// are clamped; a negative eigenvalue beyond relClamp * trace throws.
inline Matrix symmetric_sqrt(const Matrix& m, double relClamp = 1e-12) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    Vector lam = es.eigenvalues();
    const double floorVal = -relClamp * std::max(m.trace(), 1.0);
    for (int i = 0; i < lam.size(); ++i) {
        if (lam(i) < floorVal)
            throw NumericalError("symmetric_sqrt: matrix is not positive semidefinite");
        lam(i) = std::sqrt(std::max(lam(i), 0.0));
    }
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace kolmo
