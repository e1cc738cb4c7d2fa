#pragma once

#include "kolmo/gramian.hpp"
#include "kolmo/operator_model.hpp"

#include <cmath>
#include <vector>

namespace kolmo {

/// Group law (x,t) o (xi,tau) = (xi + E(tau) x, t + tau).
inline GroupPoint compose(const GroupPoint& z, const GroupPoint& w, const OperatorSpec& spec) {
    return GroupPoint(w.x + transition_matrix(spec, w.t) * z.x, z.t + w.t);
}

/// Inverse (x,t)^{-1} = (-E(-t) x, -t).
inline GroupPoint inverse(const GroupPoint& z, const OperatorSpec& spec) {
    return GroupPoint(-(transition_matrix(spec, -z.t) * z.x), -z.t);
}

/// Additive anisotropic semi-norm |t|^{1/2} + sum |x_j|^{1/q_j}.
inline double norm_additive(const GroupPoint& z, const DilationGroup& g) {
    double n = std::sqrt(std::abs(z.t));
    for (int i = 0; i < z.dim(); ++i)
        n += std::pow(std::abs(z.x(i)), 1.0 / g.q[i]);
    return n;
}

/// Implicit homogeneous norm: the unique r > 0 with
/// sum_j x_j^2 / r^{2 q_j} + t^2 / r^4 = 1, solved by bisection.
inline double norm_implicit(const GroupPoint& z, const DilationGroup& g, double relTol = 1e-12) {
    double scale = std::sqrt(std::abs(z.t));
    for (int i = 0; i < z.dim(); ++i) scale = std::max(scale, std::abs(z.x(i)));
    if (scale == 0.0) throw ZeroPoint("norm_implicit: z must be nonzero");

    auto lhs = [&](double r) {
        double s = z.t * z.t / std::pow(r, 4);
        for (int i = 0; i < z.dim(); ++i)
            s += z.x(i) * z.x(i) / std::pow(r, 2 * g.q[i]);
        return s;
    };
    // lhs is strictly decreasing in r; bracket the root.
    double lo = scale, hi = scale;
    while (lhs(lo) < 1.0) lo /= 2.0;
    while (lhs(hi) > 1.0) hi *= 2.0;
    while (hi - lo > relTol * hi) {
        const double mid = 0.5 * (lo + hi);
        (lhs(mid) > 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Quasi-distance d(z, w) = || z^{-1} o w || (additive norm).
inline double distance(const GroupPoint& z, const GroupPoint& w, const OperatorSpec& spec,
                       const DilationGroup& g) {
    return norm_additive(compose(inverse(z, spec), w, spec), g);
}

// ---------------------------------------------------------------------------
// Cylinder geometry.
// ---------------------------------------------------------------------------

enum class CylinderShape {
    UnitBox,    ///< Q = ]-1,1[^N x ]-1,0[
    PlusBox,    ///< Q+ = D0(delta)(]-1,1[^N) x ]-alpha,0[
    MinusBox,   ///< Q- = D0(delta)(]-1,1[^N) x ]-gamma,-beta[
    FullBox,    ///< ]-1,1[^{N+1}
    MinusSlice  ///< K- = D0(delta)(]-1,1[^N) x {-(beta+gamma)/2}
};

struct CylinderParams {
    double alpha = 0.25;
    double beta = 0.5;
    double gamma = 0.75;
    double delta = 0.5;

    void check() const {
        if (!(0.0 < alpha && alpha < beta && beta < gamma && gamma < 1.0))
            throw InputError("cylinder parameters must satisfy 0 < alpha < beta < gamma < 1");
        if (!(0.0 < delta && delta < 1.0))
            throw InputError("cylinder parameter delta must lie in (0,1)");
    }
};

/// Membership of z in the r-scaled, center-translated cylinder: tests
/// D(1/r)(center^{-1} o z) against the unit-scale shape.
inline bool cylinder_contains(const GroupPoint& z, const GroupPoint& center, double r,
                              CylinderShape shape, const OperatorSpec& spec,
                              const DilationGroup& g,
                              const CylinderParams& p = CylinderParams{},
                              double sliceRelTol = 1e-9) {
    if (r <= 0.0) throw NonPositiveRadius("cylinder_contains: r must be positive");
    p.check();
    const GroupPoint u = dilate(compose(inverse(center, spec), z, spec), 1.0 / r, g);

    auto spatialInUnit = [&](double halfWidthScale) {
        for (int i = 0; i < u.dim(); ++i) {
            const double hw = std::pow(halfWidthScale, g.q[i]);
            if (std::abs(u.x(i)) >= hw) return false;
        }
        return true;
    };

    switch (shape) {
        case CylinderShape::UnitBox:
            return spatialInUnit(1.0) && u.t > -1.0 && u.t < 0.0;
        case CylinderShape::PlusBox:
            return spatialInUnit(p.delta) && u.t > -p.alpha && u.t < 0.0;
        case CylinderShape::MinusBox:
            return spatialInUnit(p.delta) && u.t > -p.gamma && u.t < -p.beta;
        case CylinderShape::FullBox:
            return spatialInUnit(1.0) && std::abs(u.t) < 1.0;
        case CylinderShape::MinusSlice:
            return spatialInUnit(p.delta) &&
                   std::abs(u.t + 0.5 * (p.beta + p.gamma)) <= sliceRelTol;
    }
    return false;
}

/// Empirical Holder seminorm max |f(z)-f(w)| / d(z,w)^alpha over all pairs.
inline double holder_seminorm(const std::vector<std::pair<GroupPoint, double>>& samples,
                              double alpha, const OperatorSpec& spec, const DilationGroup& g) {
    if (samples.size() < 2) throw DegenerateSample("holder_seminorm: need at least 2 samples");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InputError("holder exponent must be in (0,1]");
    double best = 0.0;
    bool anyDistinct = false;
    for (size_t i = 0; i < samples.size(); ++i)
        for (size_t j = i + 1; j < samples.size(); ++j) {
            const double d = distance(samples[i].first, samples[j].first, spec, g);
            if (d == 0.0) continue;
            anyDistinct = true;
            best = std::max(best, std::abs(samples[i].second - samples[j].second) /
                                      std::pow(d, alpha));
        }
    if (!anyDistinct) throw DegenerateSample("holder_seminorm: all points coincide");
    return best;
}

}  // namespace kolmo
