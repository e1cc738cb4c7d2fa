#pragma once

#include "kolmo/control.hpp"
#include "kolmo/domain.hpp"
#include "kolmo/lie_group.hpp"
#include "kolmo/operator_model.hpp"

#include <cmath>
#include <vector>

namespace kolmo {

struct HarnackParams {
    double c = M_E;   ///< Harnack constant per step (reported, not derived)
    double h = 1.0;   ///< per-window control-energy threshold
    CylinderParams cylinder;
    double rCap = 1.0;
    /// When set, uses the time-vs-radius relation delta0 <= beta * r0 verbatim
    /// instead of the dilation-consistent delta0 <= beta * r0^2.
    bool literalTimeScale = false;

    void check() const {
        cylinder.check();
        if (c < 1.0) throw InputError("HarnackParams: c must be >= 1");
        if (h <= 0.0) throw InputError("HarnackParams: h must be positive");
        if (rCap <= 0.0) throw InputError("HarnackParams: r_cap must be positive");
    }
};

struct CylinderDescriptor {
    GroupPoint center;
    double radius = 0.0;
};

struct HarnackChain {
    std::vector<GroupPoint> points;
    std::vector<double> radii;  ///< link radius between points[j] and points[j+1]
    int k = 0;
    double bound = 1.0;  ///< c^k
    double r0 = 0.0;
    double delta0 = 0.0;
    CylinderDescriptor terminalNeighborhood;
};

/// Curve position at arbitrary parameter s, exact within each control cell.
inline GroupPoint curve_point(const OperatorSpec& spec, const AdmissibleCurve& curve, double s) {
    if (s < 0.0 || s > curve.control.T + 1e-12)
        throw InputError("curve_point: parameter outside [0, T]");
    s = std::min(s, curve.control.T);
    const double dt = curve.control.dt();
    int cell = std::min(static_cast<int>(s / dt), curve.control.steps - 1);
    const double u = s - cell * dt;
    const GroupPoint& base = curve.trajectory[cell];
    if (u <= 0.0) return base;
    const Matrix sigma = spec.effectiveSigma();
    const Matrix step = matrix_exponential(u * spec.B);
    const Matrix gain = detail::flow_integral(spec.B, u) * (sigma / std::sqrt(2.0));
    return GroupPoint(step * base.x + gain * curve.control.omega.row(cell).transpose(),
                      base.t - u);
}

namespace detail {

/// Sample points on the boundary of the unit box in R^{N+1}: corners, face
/// centers and edge subdivisions.
inline std::vector<GroupPoint> unit_box_boundary_samples(int n, int edgeSamples = 4) {
    std::vector<GroupPoint> pts;
    const int dim = n + 1;
    // corners
    for (long mask = 0; mask < (1L << dim); ++mask) {
        Vector x(n);
        for (int i = 0; i < n; ++i) x(i) = (mask >> i & 1) ? 1.0 : -1.0;
        pts.emplace_back(x, (mask >> n & 1) ? 1.0 : -1.0);
    }
    // face centers
    for (int i = 0; i < dim; ++i)
        for (int sgn = -1; sgn <= 1; sgn += 2) {
            Vector x = Vector::Zero(n);
            double t = 0.0;
            if (i < n) x(i) = sgn; else t = sgn;
            pts.emplace_back(x, t);
        }
    // edge interior samples: vary one coordinate, others at +-1
    for (int i = 0; i < dim; ++i) {
        for (long mask = 0; mask < (1L << (dim - 1)); ++mask) {
            for (int e = 1; e <= edgeSamples; ++e) {
                const double v = -1.0 + 2.0 * e / (edgeSamples + 1);
                Vector x(n);
                double t;
                int bit = 0;
                for (int j = 0; j < dim; ++j) {
                    double val = (j == i) ? v : ((mask >> bit++ & 1) ? 1.0 : -1.0);
                    if (j < n) x(j) = val; else t = val;
                }
                pts.emplace_back(x, t);
            }
        }
    }
    return pts;
}

/// Predicate: all sampled boundary points of the box z0 o D(r)([-1,1]^{N+1})
/// lie in the domain.
inline bool box_fits(const OperatorSpec& spec, const DilationGroup& g, const GroupPoint& z0,
                     double r, const BoxUnion& domain,
                     const std::vector<GroupPoint>& samples) {
    for (const auto& u : samples) {
        const GroupPoint z = compose(z0, dilate(u, r, g), spec);
        if (!domain.contains(z)) return false;
    }
    return true;
}

}  // namespace detail

/// r(s) = sup { r > 0 : Q~_r(gamma(s)) subset of Omega }, by bisection on the
/// sampled-boundary predicate; conservative relative tolerance 1e-6.
inline double tube_radius(const OperatorSpec& spec, const GroupPoint& z, const BoxUnion& domain,
                          const DilationGroup& g, double rMax = 64.0) {
    static thread_local std::vector<GroupPoint> samples;
    static thread_local int samplesDim = -1;
    if (samplesDim != spec.N) {
        samples = detail::unit_box_boundary_samples(spec.N);
        samplesDim = spec.N;
    }
    double lo = 1e-9;
    if (!detail::box_fits(spec, g, z, lo, domain, samples))
        throw PointOnBoundary("tube_radius: point is on or beyond the boundary");
    double hi = lo;
    while (hi < rMax && detail::box_fits(spec, g, z, 2.0 * hi, domain, samples)) hi *= 2.0;
    if (hi >= rMax) return rMax;
    double bad = 2.0 * hi;
    while (bad - hi > 1e-6 * hi) {
        const double mid = 0.5 * (hi + bad);
        (detail::box_fits(spec, g, z, mid, domain, samples) ? hi : bad) = mid;
    }
    return hi;  // lower bound of the true sup
}

inline double tube_radius(const OperatorSpec& spec, const AdmissibleCurve& curve,
                          const BoxUnion& domain, double s) {
    const DilationGroup g = dilation_exponents(spec);
    return tube_radius(spec, curve_point(spec, curve, s), domain, g);
}

namespace detail {

/// Maximum of int_a^{a+width} |omega|^2 over all windows inside [0, T].
inline double max_window_energy(const ControlGrid& grid, double width) {
    const double dt = grid.dt();
    std::vector<double> rate(grid.steps);
    for (int i = 0; i < grid.steps; ++i) rate[i] = grid.omega.row(i).squaredNorm();
    double best = 0.0;
    auto windowEnergy = [&](double a) {
        const double b = std::min(a + width, grid.T);
        double e = 0.0;
        const int i0 = std::max(0, static_cast<int>(a / dt));
        const int i1 = std::min(grid.steps - 1, static_cast<int>(b / dt));
        for (int i = i0; i <= i1; ++i) {
            const double lo = std::max(a, i * dt), hi = std::min(b, (i + 1) * dt);
            if (hi > lo) e += rate[i] * (hi - lo);
        }
        return e;
    };
    // the maximum over window starts is attained with a window edge on a grid
    // edge; scan both alignments
    for (int i = 0; i <= grid.steps; ++i) {
        const double edge = i * dt;
        if (edge <= grid.T - width) best = std::max(best, windowEnergy(edge));
        if (edge - width >= 0.0) best = std::max(best, windowEnergy(edge - width));
    }
    best = std::max(best, windowEnergy(std::max(0.0, grid.T - width)));
    return best;
}

}  // namespace detail

/// Builds the Harnack chain along an admissible curve inside the domain.
inline HarnackChain build_chain(const OperatorSpec& spec, const AdmissibleCurve& curve,
                                const BoxUnion& domain, const HarnackParams& params) {
    params.check();
    const DilationGroup g = dilation_exponents(spec);
    const double T = curve.control.T;
    const double dt = curve.control.dt();

    // r0 = min over sampled s of min(r(s), r_cap); nodes plus midpoints
    double r0 = params.rCap;
    for (int i = 0; i <= 2 * curve.control.steps; ++i) {
        const double s = T * i / (2.0 * curve.control.steps);
        GroupPoint zs = curve_point(spec, curve, s);
        if (!domain.contains(zs)) throw CurveExitsDomain("build_chain: curve leaves the domain");
        r0 = std::min(r0, tube_radius(spec, zs, domain, g, params.rCap));
    }

    const double beta = params.cylinder.beta, gamma = params.cylinder.gamma;
    double delta0Max = params.literalTimeScale ? beta * r0 : beta * r0 * r0;
    delta0Max = std::min(delta0Max, T);

    // largest delta0 <= delta0Max whose every window keeps energy <= h
    double delta0 = delta0Max;
    if (detail::max_window_energy(curve.control, delta0) > params.h) {
        double lo = dt, hi = delta0;
        if (detail::max_window_energy(curve.control, lo) > params.h)
            throw EnergyWindowUnsatisfiable(
                "build_chain: no window width above the grid step satisfies the bound");
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            (detail::max_window_energy(curve.control, mid) <= params.h ? lo : hi) = mid;
        }
        delta0 = lo;
    }

    // assemble points s_j = j*delta0 (+ terminal), halving delta0 when a link
    // fails the slice membership (control energy concentrated where the link
    // geometry cannot absorb it)
    for (int attempt = 0; attempt < 48; ++attempt) {
        HarnackChain chain;
        chain.r0 = r0;
        chain.delta0 = delta0;
        const double kd = std::ceil(T / delta0 - 1e-12);
        if (!(kd >= 1.0) || kd > 1e7)
            throw EnergyWindowUnsatisfiable("build_chain: chain length overflow");
        const int k = static_cast<int>(kd);
        chain.k = k;
        std::vector<double> sVals;
        for (int j = 0; j < k; ++j) sVals.push_back(j * delta0);
        sVals.push_back(T);
        for (double s : sVals) chain.points.push_back(curve_point(spec, curve, s));

        bool ok = true;
        for (int j = 0; j + 1 <= k && ok; ++j) {
            const double ds = sVals[j + 1] - sVals[j];
            if (ds <= 0.0) continue;
            const double r = std::sqrt(2.0 * ds / (beta + gamma));
            chain.radii.push_back(r);
            ok = cylinder_contains(chain.points[j + 1], chain.points[j], r,
                                   CylinderShape::MinusBox, spec, g, params.cylinder) &&
                 cylinder_contains(chain.points[j + 1], chain.points[j], r,
                                   CylinderShape::MinusSlice, spec, g, params.cylinder);
        }
        if (ok) {
            chain.bound = std::pow(params.c, chain.k);
            if (!chain.radii.empty()) {
                chain.terminalNeighborhood.center = chain.points.back();
                chain.terminalNeighborhood.radius = chain.radii.back();
            } else {
                chain.terminalNeighborhood.center = curve.start;
                chain.terminalNeighborhood.radius = r0;
            }
            return chain;
        }
        delta0 *= 0.5;
        if (delta0 < 1e-12 * T)
            throw EnergyWindowUnsatisfiable("build_chain: link membership unattainable");
    }
    throw EnergyWindowUnsatisfiable("build_chain: link membership unattainable");
}

/// Per-target Harnack bounds along minimal-energy connecting curves.
inline std::vector<std::pair<GroupPoint, double>> harnack_bound(
    const OperatorSpec& spec, const GroupPoint& z0, const std::vector<GroupPoint>& targets,
    const BoxUnion& domain, const HarnackParams& params, int steps = 256) {
    params.check();
    std::vector<std::pair<GroupPoint, double>> out;
    out.reserve(targets.size());
    for (const auto& target : targets) {
        if (target.t == z0.t && (target.x - z0.x).norm() == 0.0) {
            out.emplace_back(target, 1.0);  // empty chain
            continue;
        }
        if (!(target.t < z0.t))
            throw TargetNotAttainable("harnack_bound: target not below z0 in time");
        AdmissibleCurve curve;
        try {
            curve = min_energy_curve(spec, z0, target, steps);
        } catch (const Error&) {
            throw TargetNotAttainable("harnack_bound: no admissible connecting curve");
        }
        for (const auto& p : curve.trajectory)
            if (!domain.contains(p))
                throw TargetNotAttainable("harnack_bound: connecting curve exits the domain");
        const HarnackChain chain = build_chain(spec, curve, domain, params);
        out.emplace_back(target, chain.bound);
    }
    return out;
}

struct PropagationCell {
    GroupPoint center;
    bool chainFound = false;
    double bound = std::numeric_limits<double>::infinity();
};

struct PropagationReport {
    std::vector<PropagationCell> cells;  ///< certified zero-propagation region
    int attainableCells = 0;
    int boundedCells = 0;
};

/// Annotates attainable cells with Harnack bounds: the certified propagation
/// region of the strong maximum principle for solutions vanishing at z0.
inline PropagationReport strong_max_report(const OperatorSpec& spec, const GroupPoint& z0,
                                           const BoxUnion& domain, const HarnackParams& params,
                                           int sampleResolution = 8,
                                           const ControlClass& cls = ControlClass::boundedBy(1.0)) {
    params.check();
    const AttainableGrid grid = attainable_grid(spec, z0, domain, cls, sampleResolution);
    PropagationReport rep;
    const long cells = grid.spatialCells();
    for (int layer = 1; layer <= grid.timeLayers; ++layer) {
        const double t = z0.t - layer * grid.dt;
        for (long cell = 0; cell < cells; ++cell) {
            if (!grid.cellMarked(layer, cell)) continue;
            ++rep.attainableCells;
            PropagationCell pc;
            pc.center = GroupPoint(grid.cellCenter(cell), t);
            try {
                auto bounds = harnack_bound(spec, z0, {pc.center}, domain, params, 64);
                pc.chainFound = true;
                pc.bound = bounds.front().second;
                ++rep.boundedCells;
            } catch (const Error&) {
                pc.chainFound = false;
            }
            rep.cells.push_back(pc);
        }
    }
    return rep;
}

}  // namespace kolmo
