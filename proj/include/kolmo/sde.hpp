#pragma once

#include "kolmo/gramian.hpp"
#include "kolmo/operator_model.hpp"
#include "kolmo/rng.hpp"

#include <cmath>
#include <vector>

namespace kolmo {

/// Columns are independent samples of X_t in R^N.
struct SampleBatch {
    Matrix samples;      ///< N x count
    double t = 0.0;
    std::uint64_t seed = 0;

    long count() const { return samples.cols(); }
    Vector mean() const { return samples.rowwise().mean(); }
    Matrix covariance() const {
        const Vector mu = mean();
        const Matrix centered = samples.colwise() - mu;
        return centered * centered.transpose() / static_cast<double>(samples.cols() - 1);
    }
};

/// Exact sampling of the linear SDE dX = B X dt + sigma dW at time t from x0:
/// X_t ~ N(e^{tB} x0, Cov(t)) with Cov(t) = 2 e^{tB} C(t) e^{tB^T}
/// (= int_0^t e^{sB} sigma sigma^T e^{sB^T} ds).
inline SampleBatch sample_exact(const OperatorSpec& spec, const Vector& x0, double t,
                                long count, std::uint64_t seed) {
    if (t <= 0.0) throw NonPositiveTime("sample_exact: t must be positive");
    if (count <= 0) throw BadSampleCount("sample_exact: count must be positive");
    if (x0.size() != spec.N) throw DimensionMismatch("sample_exact: x0 has wrong dimension");
    const GramianBundle b = gramian(spec, t, false, false);
    const Matrix etB = matrix_exponential(t * spec.B);
    Matrix cov = 2.0 * etB * b.C * etB.transpose();
    cov = 0.5 * (cov + cov.transpose());
    const Matrix factor = symmetric_sqrt(cov);
    const Vector mu = etB * x0;

    SampleBatch batch;
    batch.t = t;
    batch.seed = seed;
    batch.samples.resize(spec.N, count);
    Rng rng(seed);
    Vector xi(spec.N);
    for (long k = 0; k < count; ++k) {
        for (int i = 0; i < spec.N; ++i) xi(i) = rng.gaussian();
        batch.samples.col(k) = mu + factor * xi;
    }
    return batch;
}

/// Euler-Maruyama on the same SDE: X <- X + B X dt + sigma sqrt(dt) xi.
inline SampleBatch euler_maruyama(const OperatorSpec& spec, const Vector& x0, double t,
                                  int steps, long count, std::uint64_t seed) {
    if (t <= 0.0) throw NonPositiveTime("euler_maruyama: t must be positive");
    if (steps <= 0) throw BadStep("euler_maruyama: steps must be positive");
    if (count <= 0) throw BadSampleCount("euler_maruyama: count must be positive");
    if (x0.size() != spec.N) throw DimensionMismatch("euler_maruyama: x0 has wrong dimension");
    const Matrix sigma = spec.effectiveSigma();
    const int m = static_cast<int>(sigma.cols());
    const double dt = t / steps;
    const double sqdt = std::sqrt(dt);

    SampleBatch batch;
    batch.t = t;
    batch.seed = seed;
    batch.samples.resize(spec.N, count);
    Rng root(seed);
    Vector xi(m);
    for (long k = 0; k < count; ++k) {
        Rng rng = root.split(static_cast<std::uint64_t>(k));
        Vector x = x0;
        for (int s = 0; s < steps; ++s) {
            for (int i = 0; i < m; ++i) xi(i) = rng.gaussian();
            x += spec.B * x * dt + sigma * (sqdt * xi);
        }
        batch.samples.col(k) = x;
    }
    return batch;
}

struct MomentReport {
    Vector meanError;        ///< empirical mean minus e^{tB} x0
    Matrix covarianceError;  ///< empirical covariance minus the exact one
    double maxWhitenedSkewness = 0.0;
    double maxWhitenedExcessKurtosis = 0.0;
    double meanErrorNorm = 0.0;
    double covarianceErrorNorm = 0.0;  ///< relative Frobenius
};

/// Compares empirical first/second moments with the closed form and checks
/// Gaussianity of whitened marginals through skewness / excess kurtosis.
inline MomentReport moment_check(const OperatorSpec& spec, const SampleBatch& batch,
                                 const Vector& x0) {
    if (batch.count() < 2) throw BadSampleCount("moment_check: need at least 2 samples");
    const GramianBundle b = gramian(spec, batch.t, false, false);
    const Matrix etB = matrix_exponential(batch.t * spec.B);
    Matrix cov = 2.0 * etB * b.C * etB.transpose();
    cov = 0.5 * (cov + cov.transpose());

    MomentReport rep;
    rep.meanError = batch.mean() - etB * x0;
    rep.covarianceError = batch.covariance() - cov;
    rep.meanErrorNorm = rep.meanError.norm();
    rep.covarianceErrorNorm = rep.covarianceError.norm() / std::max(cov.norm(), 1e-300);

    // whiten in the range of cov (pseudo-inverse sqrt handles degenerate axes)
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    const double tr = std::max(cov.trace(), 1e-300);
    Matrix whitener = Matrix::Zero(spec.N, spec.N);
    int active = 0;
    for (int i = 0; i < spec.N; ++i) {
        const double ev = es.eigenvalues()(i);
        if (ev > 1e-12 * tr) {
            whitener.row(active++) =
                es.eigenvectors().col(i).transpose() / std::sqrt(ev);
        }
    }
    const Vector mu = batch.mean();
    const Matrix z = whitener.topRows(active) * (batch.samples.colwise() - mu);
    for (int i = 0; i < active; ++i) {
        const auto row = z.row(i);
        const double m2 = row.array().square().mean();
        const double m3 = row.array().cube().mean();
        const double m4 = row.array().square().square().mean();
        const double sk = m3 / std::pow(m2, 1.5);
        const double ku = m4 / (m2 * m2) - 3.0;
        rep.maxWhitenedSkewness = std::max(rep.maxWhitenedSkewness, std::abs(sk));
        rep.maxWhitenedExcessKurtosis = std::max(rep.maxWhitenedExcessKurtosis, std::abs(ku));
    }
    return rep;
}

/// Relative gap between the kernel and a histogram-free density estimate:
/// compares Gamma's Gaussian (for the pole at the origin) against the
/// empirical density of exact samples via the average log-likelihood identity
/// E[-log p(X)] = N/2 (1 + log(2 pi)) + 1/2 log det Cov.  Returns the
/// relative entropy-surrogate error.
inline double density_consistency(const OperatorSpec& spec, const SampleBatch& batch) {
    const GramianBundle b = gramian(spec, batch.t, true, false);
    const Matrix etB = matrix_exponential(batch.t * spec.B);
    Matrix cov = 2.0 * etB * b.C * etB.transpose();
    cov = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    double logDet = 0.0;
    for (int i = 0; i < spec.N; ++i) logDet += std::log(es.eigenvalues()(i));
    const double expected = 0.5 * spec.N * (1.0 + std::log(2.0 * M_PI)) + 0.5 * logDet;

    const Matrix covInv = cov.inverse();
    const Vector mu = batch.mean();
    double acc = 0.0;
    for (long k = 0; k < batch.count(); ++k) {
        const Vector d = batch.samples.col(k) - mu;
        acc += 0.5 * d.dot(covInv * d) + 0.5 * spec.N * std::log(2.0 * M_PI) + 0.5 * logDet;
    }
    acc /= static_cast<double>(batch.count());
    return std::abs(acc - expected) / std::abs(expected);
}

}  // namespace kolmo
