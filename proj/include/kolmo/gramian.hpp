#pragma once

#include "kolmo/linalg.hpp"
#include "kolmo/operator_model.hpp"
#include "kolmo/quadrature.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace kolmo {

/// E(t) = exp(-tB), the Gramian C(t) = int_0^t E(s) A E(s)^T ds and its
/// derived quantities, all for one fixed t.
struct GramianBundle {
    double t = 0.0;
    Matrix E;
    Matrix C;
    Matrix Cinv;        ///< valid only when positive (hypoelliptic case)
    double logDetC = 0.0;
    double minEig = 0.0;
    bool positive = false;
};

inline Matrix transition_matrix(const OperatorSpec& spec, double t) {
    return matrix_exponential(-t * spec.B);
}

/// C(t) by the augmented-block exponential: for M = [[-B, A],[0, B^T]],
/// exp(Mt) has top-right block C(t) * exp(B^T t).
inline Matrix gramian_block_exponential(const Matrix& B, const Matrix& A, double t) {
    const int n = static_cast<int>(B.rows());
    Matrix m = Matrix::Zero(2 * n, 2 * n);
    m.topLeftCorner(n, n) = -B;
    m.topRightCorner(n, n) = A;
    m.bottomRightCorner(n, n) = B.transpose();
    const Matrix e = matrix_exponential(m * t);
    return e.topRightCorner(n, n) * e.bottomRightCorner(n, n).inverse();
}

/// C(t) by adaptive quadrature of E(s) A E(s)^T; the independent route.
inline Matrix gramian_quadrature(const Matrix& B, const Matrix& A, double t,
                                 double tol = 1e-12) {
    auto integrand = [&](double s) -> Matrix {
        const Matrix Es = matrix_exponential(-s * B);
        return Es * A * Es.transpose();
    };
    // absolute tolerance relative to the integrand magnitude, probed on a
    // coarse grid, so the recursion depth stays bounded when exp(-sB) grows
    double scale = std::max(1e-300, A.cwiseAbs().maxCoeff());
    for (int k = 1; k <= 8; ++k)
        scale = std::max(scale, integrand(t * k / 8.0).cwiseAbs().maxCoeff());
    return adaptive_simpson(integrand, 0.0, t, tol * scale * t);
}

/// Computes the bundle at time t.  The block-exponential value is
/// cross-checked against quadrature to relative 1e-9.
/// requirePositive selects whether a singular C(t) is an error.
inline GramianBundle gramian(const OperatorSpec& spec, double t, bool requirePositive = true,
                             bool crossCheck = true) {
    if (t <= 0.0) throw NonPositiveTime("gramian: t must be positive");
    GramianBundle b;
    b.t = t;
    b.E = transition_matrix(spec, t);
    Matrix c = gramian_block_exponential(spec.B, spec.A, t);
    c = 0.5 * (c + c.transpose());  // symmetrize roundoff
    if (crossCheck) {
        const Matrix cq = gramian_quadrature(spec.B, spec.A, t);
        const double scale = std::max(c.cwiseAbs().maxCoeff(), 1e-300);
        if ((c - cq).cwiseAbs().maxCoeff() > 1e-9 * scale)
            throw NumericalError("gramian: block-exponential and quadrature disagree");
    }
    b.C = c;
    Eigen::SelfAdjointEigenSolver<Matrix> es(b.C);
    b.minEig = es.eigenvalues().minCoeff();
    const double tr = b.C.trace();
    b.positive = b.minEig > 1e-13 * std::max(tr, 1e-300);
    if (b.positive) {
        b.Cinv = b.C.inverse();
        b.Cinv = 0.5 * (b.Cinv + b.Cinv.transpose());
        b.logDetC = 0.0;
        for (int i = 0; i < es.eigenvalues().size(); ++i)
            b.logDetC += std::log(es.eigenvalues()(i));
    } else if (requirePositive) {
        throw GramianSingular("gramian: C(t) is singular at t=" + std::to_string(t));
    }
    return b;
}

/// Read-mostly per-spec cache of bundles keyed by t.
class GramianCache {
public:
    explicit GramianCache(OperatorSpec spec) : spec_(std::move(spec)) {}

    const OperatorSpec& spec() const { return spec_; }

    std::shared_ptr<const GramianBundle> at(double t) const {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = cache_.find(t);
            if (it != cache_.end()) return it->second;
        }
        auto bundle = std::make_shared<GramianBundle>(gramian(spec_, t, true, false));
        std::lock_guard<std::mutex> lock(mutex_);
        return cache_.emplace(t, std::move(bundle)).first->second;
    }

private:
    OperatorSpec spec_;
    mutable std::mutex mutex_;
    mutable std::map<double, std::shared_ptr<const GramianBundle>> cache_;
};

}  // namespace kolmo
