#pragma once

#include "kolmo/domain.hpp"
#include "kolmo/gramian.hpp"
#include "kolmo/operator_model.hpp"
#include "kolmo/rng.hpp"
#include "kolmo/structural.hpp"

#include <cmath>
#include <deque>
#include <vector>

namespace kolmo {

/// Piecewise-constant control on a uniform grid over [0, T].
struct ControlGrid {
    double T = 0.0;
    int steps = 0;
    Matrix omega;  ///< steps x m0, row i is the value on [i*dt, (i+1)*dt[

    double dt() const { return T / steps; }
    double energy() const {
        return omega.squaredNorm() * dt();
    }
    static ControlGrid zero(double T, int steps, int m0) {
        ControlGrid g;
        g.T = T;
        g.steps = steps;
        g.omega = Matrix::Zero(steps, m0);
        return g;
    }
};

/// A curve following gamma' = sum_k omega_k X_k + Y, i.e.
/// x' = Bx + sigma omega / sqrt(2), t' = -1.
struct AdmissibleCurve {
    GroupPoint start;
    ControlGrid control;
    std::vector<GroupPoint> trajectory;  ///< steps + 1 grid nodes
};

namespace detail {

/// Psi(dt) = int_0^dt exp(s M) ds via the augmented exponential
/// exp(dt [[M, I], [0, 0]]) = [[exp(dt M), Psi(dt)], [0, I]].
inline Matrix flow_integral(const Matrix& M, double dt) {
    const int n = static_cast<int>(M.rows());
    Matrix aug = Matrix::Zero(2 * n, 2 * n);
    aug.topLeftCorner(n, n) = M;
    aug.topRightCorner(n, n) = Matrix::Identity(n, n);
    return matrix_exponential(aug * dt).topRightCorner(n, n);
}

}  // namespace detail

/// Exact per-cell integration of the admissible-curve ODE.
inline AdmissibleCurve integrate_admissible(const OperatorSpec& spec, const GroupPoint& start,
                                            const ControlGrid& control) {
    if (control.steps <= 0 || control.omega.rows() != control.steps)
        throw EmptyControl("integrate_admissible: control grid is empty");
    if (control.T <= 0.0) throw NonPositiveTime("integrate_admissible: T must be positive");
    const Matrix sigma = spec.effectiveSigma();
    if (control.omega.cols() != sigma.cols())
        throw DimensionMismatch("integrate_admissible: control width != sigma columns");
    const double dt = control.dt();
    const Matrix step = matrix_exponential(dt * spec.B);
    const Matrix gain = detail::flow_integral(spec.B, dt) * (sigma / std::sqrt(2.0));

    AdmissibleCurve curve;
    curve.start = start;
    curve.control = control;
    curve.trajectory.reserve(control.steps + 1);
    GroupPoint z = start;
    curve.trajectory.push_back(z);
    for (int i = 0; i < control.steps; ++i) {
        z.x = step * z.x + gain * control.omega.row(i).transpose();
        z.t = start.t - (i + 1) * dt;
        curve.trajectory.push_back(z);
    }
    return curve;
}

/// Minimal-L2-energy control for x' = -Bx + sigma omega steering x0 at t0 to
/// x1 at t1 (t0 < t1), discretized as the exact least-squares problem on the
/// grid; the grid solution converges to
/// omega*(s) = sigma^T E(t1-s)^T W(tau)^{-1} (x1 - E(tau) x0), W = 2C.
inline ControlGrid reach_min_energy(const OperatorSpec& spec, const Vector& x0, double t0,
                                    const Vector& x1, double t1, int steps) {
    if (!(t0 < t1)) throw BadTimeOrder("reach_min_energy: need t0 < t1");
    if (steps <= 0) throw BadStep("reach_min_energy: steps must be positive");
    const Matrix sigma = spec.effectiveSigma();
    if (!kalman_rank(sigma, spec.B).second)
        throw NotControllable("reach_min_energy: Kalman rank condition fails");
    const int n = spec.N;
    const int m = static_cast<int>(sigma.cols());
    const double tau = t1 - t0;
    const double dt = tau / steps;

    const Matrix Edt = matrix_exponential(-dt * spec.B);           // E(dt)
    const Matrix psiSigma = detail::flow_integral(-spec.B, dt) * sigma;
    const Vector d = x1 - matrix_exponential(-tau * spec.B) * x0;

    // M_i = E(tau - s_{i+1}) Psi(dt) sigma = E(dt)^{steps-1-i} Psi(dt) sigma
    std::vector<Matrix> M(steps);
    Matrix f = Matrix::Identity(n, n);
    for (int i = steps - 1; i >= 0; --i) {
        M[i] = f * psiSigma;
        f = Edt * f;
    }
    Matrix G = Matrix::Zero(n, n);
    for (int i = 0; i < steps; ++i) G += M[i] * M[i].transpose() / dt;
    const Vector y = G.ldlt().solve(d);

    ControlGrid grid = ControlGrid::zero(tau, steps, m);
    for (int i = 0; i < steps; ++i)
        grid.omega.row(i) = (M[i].transpose() * y / dt).transpose();

    // re-integrate and require the endpoint to hit x1
    Vector x = x0;
    for (int i = 0; i < steps; ++i)
        x = Edt * x + psiSigma * grid.omega.row(i).transpose();
    if ((x - x1).norm() > 1e-8 * (1.0 + x1.norm()))
        throw NumericalError("reach_min_energy: re-integrated endpoint misses the target");
    return grid;
}

/// Minimal control energy (x1 - E(tau) x0)^T G^{-1} (x1 - E(tau) x0) with
/// G = W(tau) = 2C(tau); altNormalization uses G = C(tau) instead (a
/// convention that appears in parts of the literature).
inline double optimal_cost(const OperatorSpec& spec, const Vector& x0, const Vector& x1,
                           double tau, bool altNormalization = false) {
    if (tau <= 0.0) throw NonPositiveTime("optimal_cost: tau must be positive");
    if (!kalman_rank(spec.effectiveSigma(), spec.B).second)
        throw NotControllable("optimal_cost: Kalman rank condition fails");
    const GramianBundle b = gramian(spec, tau, true, false);
    const Vector d = x1 - b.E * x0;
    const Matrix G = altNormalization ? b.C : Matrix(2.0 * b.C);
    return d.dot(G.ldlt().solve(d));
}

/// Minimal-energy admissible curve from z0 to z1 (z1.t < z0.t): the
/// forward-time optimal control, reversed and rescaled into the
/// X_k = sigma_k / sqrt(2) parametrization.  Curve energy is
/// 2 * optimal_cost of the underlying steering problem.
inline AdmissibleCurve min_energy_curve(const OperatorSpec& spec, const GroupPoint& z0,
                                        const GroupPoint& z1, int steps) {
    if (!(z1.t < z0.t)) throw BadTimeOrder("min_energy_curve: need z1.t < z0.t");
    const ControlGrid fwd = reach_min_energy(spec, z1.x, z1.t, z0.x, z0.t, steps);
    ControlGrid rev = fwd;
    for (int i = 0; i < steps; ++i)
        rev.omega.row(i) = -std::sqrt(2.0) * fwd.omega.row(steps - 1 - i);
    AdmissibleCurve curve = integrate_admissible(spec, z0, rev);
    if ((curve.trajectory.back().x - z1.x).norm() > 1e-7 * (1.0 + z1.x.norm()))
        throw NumericalError("min_energy_curve: endpoint mismatch after reversal");
    return curve;
}

// ---------------------------------------------------------------------------
// Attainable sets by grid reachability.
// ---------------------------------------------------------------------------

struct ControlClass {
    enum class Kind { Unbounded, Bounded, L2Budget };
    Kind kind = Kind::Unbounded;
    double bound = 0.0;   ///< M for Bounded
    double budget = 0.0;  ///< h for L2Budget

    static ControlClass unbounded() { return {Kind::Unbounded, 0.0, 0.0}; }
    static ControlClass boundedBy(double M) {
        if (M <= 0.0) throw InputError("ControlClass: bound must be positive");
        return {Kind::Bounded, M, 0.0};
    }
    static ControlClass l2Budget(double h) {
        if (h <= 0.0) throw InputError("ControlClass: budget must be positive");
        return {Kind::L2Budget, 0.0, h};
    }
};

/// Occupancy grid of the attainable set of z0 in a box-union domain.
/// Cells are spatial boxes per time layer; for L2Budget the remaining budget
/// is quantized as an extra state coordinate.
struct AttainableGrid {
    SpaceTimeBox bounds;       ///< spatial bounding box; time range [tLo, z0.t]
    int cellsPerAxis = 0;
    int timeLayers = 0;
    int budgetLevels = 1;
    double dt = 0.0;
    Vector cellWidth;
    GroupPoint origin;
    std::vector<std::vector<char>> marked;  ///< [layer][cell * budgetLevels + level]

    long spatialCells() const {
        long c = 1;
        for (int i = 0; i < cellWidth.size(); ++i) c *= cellsPerAxis;
        return c;
    }
    long spatialIndex(const Vector& x) const {
        long idx = 0;
        for (int i = 0; i < x.size(); ++i) {
            long k = static_cast<long>(std::floor((x(i) - bounds.xLo(i)) / cellWidth(i)));
            if (k < 0 || k >= cellsPerAxis) return -1;
            idx = idx * cellsPerAxis + k;
        }
        return idx;
    }
    Vector cellCenter(long idx) const {
        const int n = static_cast<int>(cellWidth.size());
        Vector c(n);
        for (int i = n - 1; i >= 0; --i) {
            const long k = idx % cellsPerAxis;
            idx /= cellsPerAxis;
            c(i) = bounds.xLo(i) + (k + 0.5) * cellWidth(i);
        }
        return c;
    }
    /// Nearest layer; marks live at the discrete times t_l = origin.t - l*dt.
    int layerOf(double t) const {
        return static_cast<int>(std::lround((origin.t - t) / dt));
    }
    bool cellMarked(int layer, long cell) const {
        if (layer < 0 || layer >= static_cast<int>(marked.size()) || cell < 0) return false;
        for (int b = 0; b < budgetLevels; ++b)
            if (marked[layer][cell * budgetLevels + b]) return true;
        return false;
    }
    bool contains(const GroupPoint& z) const {
        return cellMarked(layerOf(z.t), spatialIndex(z.x));
    }
};

/// Builds the occupancy grid by breadth-first propagation down the time
/// layers.  One layer step propagates each marked cell box through the exact
/// one-step affine map and marks successor cells whose centers it covers.
inline AttainableGrid attainable_grid(const OperatorSpec& spec, const GroupPoint& z0,
                                      const BoxUnion& domain, const ControlClass& cls,
                                      int resolution = 64) {
    if (resolution < 2) throw InputError("attainable_grid: resolution must be >= 2");
    if (!domain.contains(z0)) throw PointOutsideDomain("attainable_grid: z0 outside domain");
    const Matrix sigma = spec.effectiveSigma();
    const int n = spec.N;
    const int m = static_cast<int>(sigma.cols());

    AttainableGrid g;
    g.bounds = domain.boundingBox();
    g.bounds.tHi = z0.t;
    g.cellsPerAxis = resolution;
    g.cellWidth = (g.bounds.xHi - g.bounds.xLo) / resolution;
    g.origin = z0;

    const double depth = z0.t - g.bounds.tLo;
    if (depth <= 0.0) throw NonPositiveTime("attainable_grid: domain has no depth below z0");
    // Time step: for bounded controls the per-step diffusive displacement
    // must match the cell width exactly, otherwise the center-marking rule
    // either inflates the cone (snapping outward every layer) or starves it.
    double dtTarget = depth / resolution;
    if (cls.kind == ControlClass::Kind::Bounded) {
        const double wMin = g.cellWidth.head(spec.m0()).minCoeff();
        const double speed = cls.bound * sigma.cwiseAbs().rowwise().sum().head(spec.m0()).maxCoeff() /
                             std::sqrt(2.0);
        if (speed > 0.0) dtTarget = std::min(wMin / speed, depth / 2.0);
    }
    g.timeLayers = std::max(2, static_cast<int>(std::round(depth / dtTarget)));
    g.dt = depth / g.timeLayers;
    g.budgetLevels = (cls.kind == ControlClass::Kind::L2Budget) ? 16 : 1;

    const long cells = g.spatialCells();
    g.marked.assign(g.timeLayers + 1, std::vector<char>(cells * g.budgetLevels, 0));

    const long startCell = g.spatialIndex(z0.x);
    if (startCell < 0) throw PointOutsideDomain("attainable_grid: z0 outside bounding box");
    g.marked[0][startCell * g.budgetLevels + (g.budgetLevels - 1)] = 1;

    const Matrix step = matrix_exponential(g.dt * spec.B);
    const Matrix stepAbs = step.cwiseAbs();
    const Matrix gain = detail::flow_integral(spec.B, g.dt) * (sigma / std::sqrt(2.0));
    const Matrix gainAbs = gain.cwiseAbs();
    const double budgetUnit =
        (cls.kind == ControlClass::Kind::L2Budget) ? cls.budget / g.budgetLevels : 0.0;

    // per-axis half-width of the control offset for a given |omega| sup-bound
    auto controlHalfWidth = [&](double omegaMax) -> Vector {
        return gainAbs * Vector::Constant(m, omegaMax);
    };

    std::vector<long> multiIndex(n);
    for (int layer = 0; layer < g.timeLayers; ++layer) {
        const double tNext = z0.t - (layer + 1) * g.dt;
        auto& cur = g.marked[layer];
        auto& nxt = g.marked[layer + 1];
        for (long cell = 0; cell < cells; ++cell) {
            bool anyBudget = false;
            for (int b = 0; b < g.budgetLevels; ++b) anyBudget |= (cur[cell * g.budgetLevels + b] != 0);
            if (!anyBudget) continue;
            const Vector c0 = g.cellCenter(cell);
            const Vector h0 = 0.5 * g.cellWidth;
            const Vector c1 = step * c0;
            const Vector hDrift = stepAbs * h0;

            for (int b = 0; b < g.budgetLevels; ++b) {
                if (!cur[cell * g.budgetLevels + b]) continue;
                // enumerate energy spends q * budgetUnit (q = 0 keeps level)
                const int maxSpend = (cls.kind == ControlClass::Kind::L2Budget) ? b + 1 : 1;
                for (int q = 0; q < maxSpend || (q == 0); ++q) {
                    double omegaMax = 0.0;
                    int nextLevel = b;
                    if (cls.kind == ControlClass::Kind::Bounded) {
                        omegaMax = cls.bound;
                    } else if (cls.kind == ControlClass::Kind::Unbounded) {
                        // effectively unconstrained; cap by traversing the box
                        omegaMax = 1e3;
                    } else {
                        omegaMax = std::sqrt(q * budgetUnit / g.dt);
                        nextLevel = b - q;
                    }
                    const Vector h1 = hDrift + controlHalfWidth(omegaMax);
                    // iterate cells whose centers fall in [c1-h1, c1+h1]
                    bool empty = false;
                    std::vector<long> lo(n), hi(n);
                    for (int i = 0; i < n; ++i) {
                        const double a = c1(i) - h1(i), bb = c1(i) + h1(i);
                        lo[i] = static_cast<long>(std::ceil((a - g.bounds.xLo(i)) / g.cellWidth(i) - 0.5));
                        hi[i] = static_cast<long>(std::floor((bb - g.bounds.xLo(i)) / g.cellWidth(i) - 0.5));
                        lo[i] = std::max(lo[i], 0L);
                        hi[i] = std::min(hi[i], static_cast<long>(g.cellsPerAxis - 1));
                        if (lo[i] > hi[i]) empty = true;
                    }
                    if (empty) {
                        if (cls.kind != ControlClass::Kind::L2Budget) break;
                        continue;
                    }
                    for (int i = 0; i < n; ++i) multiIndex[i] = lo[i];
                    while (true) {
                        long idx = 0;
                        for (int i = 0; i < n; ++i) idx = idx * g.cellsPerAxis + multiIndex[i];
                        const Vector cc = g.cellCenter(idx);
                        if (domain.contains(GroupPoint(cc, tNext)))
                            nxt[idx * g.budgetLevels + nextLevel] = 1;
                        int d = n - 1;
                        for (; d >= 0; --d) {
                            if (++multiIndex[d] <= hi[d]) break;
                            multiIndex[d] = lo[d];
                        }
                        if (d < 0) break;
                    }
                    if (cls.kind != ControlClass::Kind::L2Budget) break;
                }
            }
        }
    }
    return g;
}

/// Membership of z's grid cell in the attainable set of z0.
inline bool attainable_contains(const OperatorSpec& spec, const GroupPoint& z0,
                                const GroupPoint& z, const BoxUnion& domain,
                                const ControlClass& cls, int resolution = 64) {
    if (!domain.contains(z)) throw PointOutsideDomain("attainable_contains: z outside domain");
    const AttainableGrid g = attainable_grid(spec, z0, domain, cls, resolution);
    if (z.t > z0.t) return false;
    return g.contains(z);
}

/// Endpoints of n random admissible curves with controls drawn from the
/// class; curves are truncated at the domain boundary.
inline std::vector<GroupPoint> attainable_sample(const OperatorSpec& spec, const GroupPoint& z0,
                                                 const BoxUnion& domain, const ControlClass& cls,
                                                 long n, std::uint64_t seed) {
    if (!domain.contains(z0)) throw PointOutsideDomain("attainable_sample: z0 outside domain");
    if (n <= 0) throw BadSampleCount("attainable_sample: n must be positive");
    const Matrix sigma = spec.effectiveSigma();
    const int m = static_cast<int>(sigma.cols());
    const double depth = z0.t - domain.boundingBox().tLo;
    Rng root(seed);
    std::vector<GroupPoint> endpoints;
    endpoints.reserve(n);
    for (long k = 0; k < n; ++k) {
        Rng rng = root.split(static_cast<std::uint64_t>(k));
        const int steps = 8 + static_cast<int>(rng.uniform() * 56.0);
        const double T = depth * (0.05 + 0.95 * rng.uniform());
        ControlGrid grid = ControlGrid::zero(T, steps, m);
        double remaining = cls.budget;
        for (int i = 0; i < steps; ++i)
            for (int j = 0; j < m; ++j) {
                double w = 0.0;
                switch (cls.kind) {
                    case ControlClass::Kind::Bounded:
                        w = cls.bound * (2.0 * rng.uniform() - 1.0);
                        break;
                    case ControlClass::Kind::Unbounded:
                        w = 3.0 * rng.gaussian();
                        break;
                    case ControlClass::Kind::L2Budget: {
                        const double cap = std::sqrt(std::max(remaining, 0.0) / grid.dt());
                        w = cap * (2.0 * rng.uniform() - 1.0);
                        remaining -= w * w * grid.dt();
                        break;
                    }
                }
                grid.omega(i, j) = w;
            }
        const AdmissibleCurve curve = integrate_admissible(spec, z0, grid);
        GroupPoint last = curve.trajectory.front();
        for (size_t i = 1; i < curve.trajectory.size(); ++i) {
            if (!domain.contains(curve.trajectory[i])) break;
            last = curve.trajectory[i];
        }
        if (last.t < z0.t) endpoints.push_back(last);
    }
    return endpoints;
}

}  // namespace kolmo
