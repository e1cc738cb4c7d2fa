#pragma once

#include "kolmo/domain.hpp"
#include "kolmo/gramian.hpp"
#include "kolmo/lie_group.hpp"
#include "kolmo/operator_model.hpp"
#include "kolmo/quadrature.hpp"
#include "kolmo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace kolmo {

/// Kernel evaluation carried in log space; the linear value is derived.
struct KernelValue {
    double value = 0.0;
    double logValue = -std::numeric_limits<double>::infinity();

    static KernelValue zero() { return KernelValue{}; }
    static KernelValue fromLog(double lv) {
        return KernelValue{std::exp(lv), lv};
    }
};

namespace detail {

inline double log_gamma_w(const OperatorSpec& spec, const GramianBundle& b, const Vector& w) {
    const int n = spec.N;
    return -0.5 * n * std::log(4.0 * M_PI) - 0.5 * b.logDetC -
           0.25 * w.dot(b.Cinv * w) - b.t * spec.B.trace();
}

}  // namespace detail

/// Fundamental solution at living point z with pole zeta, evaluated with a
/// precomputed bundle for s = z.t - zeta.t.
inline KernelValue gamma(const OperatorSpec& spec, const GroupPoint& z, const GroupPoint& zeta,
                         const GramianBundle& b) {
    const double s = z.t - zeta.t;
    if (s <= 0.0) return KernelValue::zero();
    const Vector w = z.x - b.E * zeta.x;
    return KernelValue::fromLog(detail::log_gamma_w(spec, b, w));
}

/// Fundamental solution at living point z with pole zeta:
/// Gamma(x - E(t-tau) xi, t - tau); zero for t - tau <= 0.
inline KernelValue gamma(const OperatorSpec& spec, const GroupPoint& z, const GroupPoint& zeta,
                         const GramianCache* cache = nullptr) {
    const double s = z.t - zeta.t;
    if (s <= 0.0) return KernelValue::zero();
    if (cache) return gamma(spec, z, zeta, *cache->at(s));
    return gamma(spec, z, zeta, gramian(spec, s, true, false));
}

/// Fundamental solution of the principal-part operator (B replaced by B0).
inline KernelValue gamma0(const OperatorSpec& spec, const GroupPoint& z) {
    const OperatorSpec p = spec.principalPart();
    return gamma(p, z, GroupPoint(Vector::Zero(spec.N), 0.0));
}

/// Analytic spatial gradient in the living variable: -Gamma * C^{-1} w / 2.
inline Vector grad_x_gamma(const OperatorSpec& spec, const GroupPoint& z,
                           const GroupPoint& zeta) {
    const double s = z.t - zeta.t;
    if (s <= 0.0) throw GramianSingular("grad_x_gamma: requires t - tau > 0");
    const GramianBundle b = gramian(spec, s, true, false);
    const Vector w = z.x - b.E * zeta.x;
    const double g = std::exp(detail::log_gamma_w(spec, b, w));
    return -0.5 * g * (b.Cinv * w);
}

// ---------------------------------------------------------------------------
// Super-level sets Omega_r(z0) = { z : Gamma(z0; z) > 1/r }.
// Here z0 is the living point and z the pole, so members lie strictly below
// z0 in time.
// ---------------------------------------------------------------------------

inline bool superlevel_contains(const OperatorSpec& spec, const GroupPoint& z,
                                const GroupPoint& z0, double r) {
    if (r <= 0.0) throw NonPositiveRadius("superlevel_contains: r must be positive");
    const KernelValue g = gamma(spec, z0, z);
    return g.logValue > -std::log(r);
}

namespace detail {

/// log of the on-diagonal profile sup_x Gamma(x, s) = Gamma at w = 0.
inline double ondiag_log(const OperatorSpec& spec, double s) {
    const GramianBundle b = gramian(spec, s, true, false);
    return -0.5 * spec.N * std::log(4.0 * M_PI) - 0.5 * b.logDetC - s * spec.B.trace();
}

/// Smallest depth at which C(s) is numerically positive; below it eigenvalue
/// roundoff makes the bundle unusable.
inline double min_positive_time(const OperatorSpec& spec) {
    double s = 1e-12;
    for (int i = 0; i < 120 && !gramian(spec, s, false, false).positive; ++i) s *= 4.0;
    return s;
}

/// Largest s with ondiag_log(s) >= logLevel, bracketed by geometric scan and
/// refined by bisection.  Throws if the profile never drops below the level.
inline double ondiag_time_extent(const OperatorSpec& spec, double logLevel) {
    double lo = min_positive_time(spec);
    if (ondiag_log(spec, lo) < logLevel)
        throw NumericalError("superlevel set is empty at this level");
    double hi = lo;
    bool bracketed = false;
    for (int i = 0; i < 200; ++i) {
        hi *= 2.0;
        if (ondiag_log(spec, hi) < logLevel) {
            bracketed = true;
            break;
        }
        lo = hi;
    }
    if (!bracketed)
        throw NumericalError("superlevel set appears unbounded in time");
    for (int i = 0; i < 200 && (hi - lo) > 1e-14 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (ondiag_log(spec, mid) >= logLevel ? lo : hi) = mid;
    }
    return hi;
}

}  // namespace detail

/// Axis-aligned bounding box of Omega_r(z0) in the pole variable (xi, tau).
/// Per depth s the slice is the ellipsoid 1/4 <C(s)^{-1} w, w> < L(s) mapped
/// through xi = E(-s)(x0 - w); the box unions per-coordinate extents over a
/// scan of depths.
inline SpaceTimeBox superlevel_box(const OperatorSpec& spec, const GroupPoint& z0, double r,
                                   int scanResolution = 512) {
    if (r <= 0.0) throw NonPositiveRadius("superlevel_box: r must be positive");
    const double logLevel = -std::log(r);
    const double sMax = detail::ondiag_time_extent(spec, logLevel);
    SpaceTimeBox box;
    box.xLo = Vector::Constant(spec.N, std::numeric_limits<double>::infinity());
    box.xHi = Vector::Constant(spec.N, -std::numeric_limits<double>::infinity());
    box.tLo = z0.t - sMax;
    box.tHi = z0.t;
    for (int k = 1; k <= scanResolution; ++k) {
        const double s = sMax * k / scanResolution;
        const GramianBundle b = gramian(spec, s, true, false);
        const double L = detail::ondiag_log(spec, s) - logLevel;
        if (L <= 0.0) continue;
        const Matrix Em = matrix_exponential(s * spec.B);  // E(-s)
        const Vector center = Em * z0.x;
        const Matrix cov = Em * b.C * Em.transpose();
        for (int i = 0; i < spec.N; ++i) {
            const double ext = std::sqrt(std::max(4.0 * L * cov(i, i), 0.0));
            box.xLo(i) = std::min(box.xLo(i), center(i) - ext);
            box.xHi(i) = std::max(box.xHi(i), center(i) + ext);
        }
    }
    for (int i = 0; i < spec.N; ++i) {
        if (!std::isfinite(box.xLo(i))) {  // degenerate: collapse to the center
            box.xLo(i) = z0.x(i);
            box.xHi(i) = z0.x(i);
        }
    }
    return box;
}

/// Mean-value kernel M(z0; z) = <A D_x Gamma, D_x Gamma> / Gamma^2 with the
/// gradient taken in the integration (pole) variable z = (xi, tau):
/// D_xi log Gamma = E(s)^T C(s)^{-1} w / 2.
inline double mean_value_kernel(const OperatorSpec& spec, const GroupPoint& z0,
                                const GroupPoint& z) {
    const double s = z0.t - z.t;
    if (s <= 0.0) throw PoleEvaluation("mean_value_kernel: Gamma(z0; z) vanishes");
    const GramianBundle b = gramian(spec, s, true, false);
    const Vector w = z0.x - b.E * z.x;
    const Vector v = 0.5 * b.E.transpose() * (b.Cinv * w);
    return v.dot(spec.A * v);
}

/// Monte Carlo verification of u(z0) = (1/r) int_{Omega_r(z0)} M u dz.
/// Rejection sampling over per-depth-stratum bounding boxes; strata are
/// geometric in depth with sample allocation proportional to the exact
/// slab mass of the constant solution.  Returns |estimate - u(z0)|/|u(z0)|.
inline double mean_value_verify(const OperatorSpec& spec, const GroupPoint& z0, double r,
                                const std::function<double(const GroupPoint&)>& u,
                                long mcSamples, std::uint64_t seed,
                                std::optional<GroupPoint> uPole = std::nullopt) {
    if (r <= 0.0) throw NonPositiveRadius("mean_value_verify: r must be positive");
    if (!spec.dilationInvariant(1e-12))
        throw InputError("mean_value_verify: requires B in principal form B0");
    const double logLevel = -std::log(r);
    const double sMax = detail::ondiag_time_extent(spec, logLevel);

    if (uPole) {
        const SpaceTimeBox box = superlevel_box(spec, z0, r);
        if (box.contains(*uPole) || uPole->t > box.tLo)
            throw PoleInsideDomain("mean_value_verify: test-solution pole meets the domain");
    }

    const int numStrata = 256;
    const double p = 2.0;  // geometric clustering of strata toward the pole
    std::vector<double> edges(numStrata + 1);
    for (int k = 0; k <= numStrata; ++k)
        edges[k] = sMax * std::pow(double(k) / numStrata, p);
    // keep sampling depths where C(s) is numerically positive; the excluded
    // slab [0, s_min] carries vanishing mass
    edges[0] = std::min(0.5 * edges[1], detail::min_positive_time(spec));

    // Exact slab mass of the u == 1 case for allocation.
    std::vector<double> mass(numStrata, 0.0);
    double massSum = 0.0;
    for (int k = 0; k < numStrata; ++k) {
        const double s = 0.5 * (edges[k] + edges[k + 1]);
        const GramianBundle b = gramian(spec, s, true, false);
        const double L = detail::ondiag_log(spec, s) - logLevel;
        if (L <= 0.0) continue;
        const Matrix q = b.E.transpose() * b.Cinv * b.E;
        // int over the slice of M dxi = sqrt(det C) * pi^{N/2}/Gamma(N/2+1)
        //   * L^{N/2+1} * 2/(N+2) * ... ; a proportional surrogate suffices:
        mass[k] = std::exp(0.5 * b.logDetC) * std::pow(L, 2.0) *
                  (spec.A * q).trace() * (edges[k + 1] - edges[k]);
        massSum += mass[k];
    }
    if (massSum <= 0.0) throw NumericalError("mean_value_verify: empty super-level set");

    Rng rootRng(seed);
    double total = 0.0;
    for (int k = 0; k < numStrata; ++k) {
        if (mass[k] <= 0.0) continue;
        const long per = std::max<long>(16, static_cast<long>(mcSamples * mass[k] / massSum));
        const double s0 = edges[k], s1 = edges[k + 1];
        // stratum bounding extents from a few depth probes
        Vector lo = Vector::Constant(spec.N, std::numeric_limits<double>::infinity());
        Vector hi = Vector::Constant(spec.N, -std::numeric_limits<double>::infinity());
        bool any = false;
        for (int j = 1; j <= 4; ++j) {
            const double s = s0 + (s1 - s0) * j / 4.0;
            const double L = detail::ondiag_log(spec, s) - logLevel;
            if (L <= 0.0) continue;
            any = true;
            const GramianBundle b = gramian(spec, s, true, false);
            const Matrix Em = matrix_exponential(s * spec.B);
            const Vector center = Em * z0.x;
            const Matrix cov = Em * b.C * Em.transpose();
            for (int i = 0; i < spec.N; ++i) {
                const double ext = std::sqrt(std::max(4.0 * L * cov(i, i), 0.0));
                lo(i) = std::min(lo(i), center(i) - ext);
                hi(i) = std::max(hi(i), center(i) + ext);
            }
        }
        if (!any) continue;
        double vol = s1 - s0;
        for (int i = 0; i < spec.N; ++i) vol *= (hi(i) - lo(i));
        Rng rng = rootRng.split(static_cast<std::uint64_t>(k));
        double acc = 0.0;
        GroupPoint z(Vector::Zero(spec.N), 0.0);
        for (long n = 0; n < per; ++n) {
            const double s = s0 + rng.uniform() * (s1 - s0);
            for (int i = 0; i < spec.N; ++i)
                z.x(i) = lo(i) + rng.uniform() * (hi(i) - lo(i));
            z.t = z0.t - s;
            const KernelValue g = gamma(spec, z0, z);
            if (g.logValue <= logLevel) continue;  // rejection on membership
            acc += mean_value_kernel(spec, z0, z) * u(z);
        }
        total += vol * acc / static_cast<double>(per);
    }
    const double estimate = total / r;
    const double ref = u(z0);
    return std::abs(estimate - ref) / std::abs(ref);
}

// ---------------------------------------------------------------------------
// Kernel identities: normalization, Chapman-Kolmogorov, comparison bounds.
// ---------------------------------------------------------------------------

/// Numerically integrates Gamma(x,t; xi,tau) over the pole variable xi via
/// tensor Gauss-Hermite in whitened coordinates; expected value 1.
inline double normalization_check(const OperatorSpec& spec, double t, int nodes = 64,
                                  bool overLivingVariable = false) {
    if (t <= 0.0) throw NonPositiveTime("normalization_check: t must be positive");
    const GramianBundle b = gramian(spec, t, true, false);
    const Matrix chalf = symmetric_sqrt(b.C);
    const GaussHermite gh(nodes);
    const GroupPoint zx(Vector::Zero(spec.N), t);
    const GroupPoint zeta0(Vector::Zero(spec.N), 0.0);
    // w = 2 C^{1/2} y; over xi: xi = E(-t)(x - w), Jacobian |det E(-t)| 2^N sqrt(det C)
    // over x: x = E(t) xi + w, Jacobian 2^N sqrt(det C)
    const Matrix Eminus = matrix_exponential(t * spec.B);
    double logJac = spec.N * std::log(2.0) + 0.5 * b.logDetC;
    if (!overLivingVariable) logJac += t * spec.B.trace();  // log |det E(-t)|

    // tensor product over N dimensions, recursively
    double sum = 0.0;
    std::vector<int> idx(spec.N, 0);
    Vector y(spec.N);
    while (true) {
        double wgt = 1.0, y2 = 0.0;
        for (int i = 0; i < spec.N; ++i) {
            wgt *= gh.weights[idx[i]];
            y(i) = gh.nodes[idx[i]];
            y2 += y(i) * y(i);
        }
        const Vector w = 2.0 * (chalf * y);
        KernelValue g;
        if (!overLivingVariable) {
            const GroupPoint zeta(Eminus * (zx.x - w), 0.0);
            g = gamma(spec, zx, zeta, b);
        } else {
            const GroupPoint z(b.E * zeta0.x + w, t);
            g = gamma(spec, z, zeta0, b);
        }
        sum += wgt * std::exp(g.logValue + y2 + logJac);
        int d = 0;
        while (d < spec.N && ++idx[d] == nodes) idx[d++] = 0;
        if (d == spec.N) break;
    }
    return sum;
}

/// Relative error of the reproduction identity
/// Gamma(x,t;xi,tau) = int Gamma(x,t;y,s) Gamma(y,s;xi,tau) dy,
/// the right side integrated by Gauss-Hermite around the product-Gaussian
/// minimizer.
inline double chapman_check(const OperatorSpec& spec, const GroupPoint& z,
                            const GroupPoint& zeta, double s, int nodes = 40) {
    if (!(zeta.t < s && s < z.t)) throw BadTimeOrder("chapman_check: need tau < s < t");
    const GramianBundle b1 = gramian(spec, z.t - s, true, false);
    const GramianBundle b2 = gramian(spec, s - zeta.t, true, false);
    // exponent F(y) = 1/4 (x-E1 y)^T C1i (x-E1 y) + 1/4 (y-mu)^T C2i (y-mu)
    const Vector mu = b2.E * zeta.x;
    const Matrix H = 0.5 * (b1.E.transpose() * b1.Cinv * b1.E + b2.Cinv);
    const Vector rhs = 0.5 * (b1.E.transpose() * (b1.Cinv * z.x) + b2.Cinv * mu);
    const Vector ystar = H.ldlt().solve(rhs);
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    Matrix hInvHalf = es.eigenvectors() *
                      es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                      es.eigenvectors().transpose();
    double logJac = 0.5 * spec.N * std::log(2.0);
    for (int i = 0; i < spec.N; ++i) logJac -= 0.5 * std::log(es.eigenvalues()(i));

    const GaussHermite gh(nodes);
    std::vector<int> idx(spec.N, 0);
    Vector u(spec.N);
    double sum = 0.0;
    while (true) {
        double wgt = 1.0, u2 = 0.0;
        for (int i = 0; i < spec.N; ++i) {
            wgt *= gh.weights[idx[i]];
            u(i) = gh.nodes[idx[i]];
            u2 += u(i) * u(i);
        }
        const Vector y = ystar + std::sqrt(2.0) * (hInvHalf * u);
        const GroupPoint mid(y, s);
        const KernelValue ga = gamma(spec, z, mid, b1);
        const KernelValue gb = gamma(spec, mid, zeta, b2);
        sum += wgt * std::exp(ga.logValue + gb.logValue + u2 + logJac);
        int d = 0;
        while (d < spec.N && ++idx[d] == nodes) idx[d++] = 0;
        if (d == spec.N) break;
    }
    const KernelValue lhs = gamma(spec, z, zeta);
    return std::abs(sum - lhs.value) / lhs.value;
}

struct ComparisonRow {
    double K = 0.0;
    double eps = 0.0;
    long count = 0;
};

struct ComparisonReport {
    std::vector<ComparisonRow> epsByLevel;  ///< max |Gamma/Gamma0 - 1| per level
    double cPlus = 0.0;                      ///< empirical max Gamma / Gamma+
    double cMinus = 0.0;                     ///< empirical min Gamma / Gamma-
};

/// Samples the ratio Gamma/Gamma0 on nested super-level families of Gamma0
/// and the two-sided bounds against the lambda^{+-1} comparison kernels.
inline ComparisonReport comparison_bounds_check(const OperatorSpec& spec,
                                                const std::vector<double>& levels,
                                                long samples = 20000,
                                                std::uint64_t seed = 12345) {
    ComparisonReport rep;
    const OperatorSpec p = spec.principalPart();
    OperatorSpec plus = spec, minus = spec;
    plus.A.setZero();
    minus.A.setZero();
    plus.A.topLeftCorner(spec.m0(), spec.m0()) =
        spec.lambda * Matrix::Identity(spec.m0(), spec.m0());
    minus.A.topLeftCorner(spec.m0(), spec.m0()) =
        (1.0 / spec.lambda) * Matrix::Identity(spec.m0(), spec.m0());
    plus.sigma.reset();
    minus.sigma.reset();

    rep.epsByLevel.reserve(levels.size());
    for (double K : levels) rep.epsByLevel.push_back({K, 0.0, 0});
    rep.cPlus = 0.0;
    rep.cMinus = std::numeric_limits<double>::infinity();

    Rng rng(seed);
    const GroupPoint origin(Vector::Zero(spec.N), 0.0);
    for (long n = 0; n < samples; ++n) {
        // depth log-uniform over several decades; spatial point Gaussian in
        // the principal-part whitened metric
        const double s = std::exp(std::log(1e-4) + rng.uniform() * std::log(1.0 / 1e-4));
        const GramianBundle b0 = gramian(p, s, true, false);
        const Matrix chalf = symmetric_sqrt(b0.C);
        Vector y(spec.N);
        for (int i = 0; i < spec.N; ++i) y(i) = rng.gaussian();
        const GroupPoint z(chalf * y, s);

        const double lg0 = gamma(p, z, origin).logValue;
        const double lg = gamma(spec, z, origin).logValue;
        const double ratio = std::exp(lg - lg0);
        for (auto& row : rep.epsByLevel) {
            if (lg0 >= std::log(row.K)) {
                row.eps = std::max(row.eps, std::abs(ratio - 1.0));
                ++row.count;
            }
        }
        const double lgPlus = gamma(plus, z, origin).logValue;
        const double lgMinus = gamma(minus, z, origin).logValue;
        rep.cPlus = std::max(rep.cPlus, std::exp(lg - lgPlus));
        rep.cMinus = std::min(rep.cMinus, std::exp(lg - lgMinus));
    }
    return rep;
}

/// Membership in K_r(z0, eps) = Omega_r(z0) cap { t <= t0 - eps r^{2/Q} }.
inline bool harnack_levelset_contains(const OperatorSpec& spec, const GroupPoint& z,
                                      const GroupPoint& z0, double r, double eps,
                                      const DilationGroup& g) {
    if (r <= 0.0 || eps <= 0.0)
        throw NonPositiveRadius("harnack_levelset_contains: r and eps must be positive");
    if (z.t > z0.t - eps * std::pow(r, 2.0 / g.Q)) return false;
    return superlevel_contains(spec, z, z0, r);
}

}  // namespace kolmo
