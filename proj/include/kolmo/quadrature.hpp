#pragma once

#include "kolmo/types.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace kolmo {

/// Gauss-Hermite rule for integrals against exp(-x^2) on the real line.
/// Nodes and weights via Golub-Welsch on the Jacobi matrix.
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussHermite(int n) {
        Matrix jac = Matrix::Zero(n, n);
        for (int k = 1; k < n; ++k) {
            const double b = std::sqrt(k / 2.0);
            jac(k, k - 1) = b;
            jac(k - 1, k) = b;
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(jac);
        nodes.resize(n);
        weights.resize(n);
        const double mu0 = std::sqrt(M_PI);
        for (int i = 0; i < n; ++i) {
            nodes[i] = es.eigenvalues()(i);
            const double v0 = es.eigenvectors()(0, i);
            weights[i] = mu0 * v0 * v0;
        }
    }
};

namespace detail {

template <typename F, typename V>
void adaptive_simpson_rec(const F& f, double a, double b, const V& fa, const V& fm,
                          const V& fb, const V& whole, double tol, int depth, V& acc) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const V flm = f(lm), frm = f(rm);
    const V left = (b - a) / 12.0 * (fa + 4.0 * flm + fm);
    const V right = (b - a) / 12.0 * (fm + 4.0 * frm + fb);
    const V delta = left + right - whole;
    const double err = delta.cwiseAbs().maxCoeff();
    if (depth <= 0 || err < 15.0 * tol) {
        acc += left + right + delta / 15.0;
        return;
    }
    adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1, acc);
    adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1, acc);
}

}  // namespace detail

/// Adaptive Simpson quadrature of a matrix-valued function on [a, b].
inline Matrix adaptive_simpson(const std::function<Matrix(double)>& f, double a, double b,
                               double tol = 1e-10, int maxDepth = 40) {
    const Matrix fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const Matrix whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    Matrix acc = Matrix::Zero(fa.rows(), fa.cols());
    detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, maxDepth, acc);
    return acc;
}

}  // namespace kolmo
