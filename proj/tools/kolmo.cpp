// kolmo: command-line front end for the library.
// Exit codes: 0 success, 1 input error, 2 negative mathematical verdict,
// 3 numerical failure, 4 missing determinism flags.

#include <CLI11.hpp>

#include "kolmo/control.hpp"
#include "kolmo/harnack.hpp"
#include "kolmo/kernel.hpp"
#include "kolmo/lie_group.hpp"
#include "kolmo/operator_io.hpp"
#include "kolmo/sde.hpp"
#include "kolmo/structural.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace kolmo;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string meta_line(const std::string& what) {
    char buf[64];
    std::time_t now = std::time(nullptr);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return "# kolmo " + what + " generated " + buf;
}

Vector parse_vector(const std::string& s) {
    std::vector<double> vals;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        vals.push_back(std::stod(tok));
    }
    Vector v(static_cast<int>(vals.size()));
    for (size_t i = 0; i < vals.size(); ++i) v(static_cast<int>(i)) = vals[i];
    return v;
}

GroupPoint parse_point(const std::string& s, int n) {
    const Vector v = parse_vector(s);
    if (v.size() != n + 1)
        throw InputError("point must have N+1 comma-separated entries (x...,t)");
    return GroupPoint(v.head(n), v(n));
}

std::vector<GroupPoint> read_points(std::istream& in, int n) {
    std::vector<GroupPoint> pts;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        pts.push_back(parse_point(line, n));
    }
    return pts;
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw InputError("cannot open output file: " + path);
    return file;
}

struct Common {
    std::string operatorFile;
    std::string output;
    bool noMeta = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("operator", c.operatorFile, "operator JSON file")->required();
    cmd->add_option("-o,--output", c.output, "output file (default stdout)");
    cmd->add_flag("--no-meta", c.noMeta, "suppress the timestamped metadata header");
}

ControlClass parse_class(const std::string& name, double M, double h) {
    if (name == "unbounded") return ControlClass::unbounded();
    if (name == "bounded") return ControlClass::boundedBy(M);
    if (name == "l2budget") return ControlClass::l2Budget(h);
    throw InputError("unknown control class: " + name);
}

int run(int argc, char** argv) {
    CLI::App app{"Numerical toolkit for constant-coefficient degenerate Kolmogorov operators"};
    app.require_subcommand(1);

    if (const char* threads = std::getenv("KOLMO_THREADS")) {
        const int k = std::atoi(threads);
        if (k > 0) Eigen::setNbThreads(k);
    }

    // ------------------------------------------------------------- classify
    Common cClassify;
    auto* classify = app.add_subcommand("classify", "hypoellipticity conditions C1-C5");
    add_common(classify, cClassify);

    // ----------------------------------------------------------------- geom
    Common cGeom;
    std::string geomPoints;
    double geomRadius = 1.0;
    auto* geom = app.add_subcommand("geom", "Lie-group distances and cylinder membership");
    add_common(geom, cGeom);
    geom->add_option("--points", geomPoints, "CSV file of points x...,t (default stdin)");
    geom->add_option("--radius", geomRadius, "cylinder radius for membership columns");

    // --------------------------------------------------------------- kernel
    Common cKernel;
    std::string kernelMode = "eval", kernelPoints;
    double kernelR = 8.0, kernelT = 1.0, kernelS = 0.5;
    std::string kernelX;
    long kernelSamples = 200000;
    int kernelResolution = 64;
    std::optional<std::uint64_t> kernelSeed;
    std::string kernelLevels = "1,10,100,1000";
    auto* kernel = app.add_subcommand("kernel", "fundamental-solution evaluation and checks");
    kernel->add_option("mode", kernelMode, "eval|meanvalue|chapman|bounds")->required();
    add_common(kernel, cKernel);
    kernel->add_option("--points", kernelPoints, "eval: CSV of x...,t,xi...,tau rows");
    kernel->add_option("--r", kernelR, "meanvalue: super-level parameter r");
    kernel->add_option("--t", kernelT, "chapman: outer time");
    kernel->add_option("--s", kernelS, "chapman: intermediate time");
    kernel->add_option("--x", kernelX, "chapman: living spatial point (comma separated)");
    kernel->add_option("--samples", kernelSamples, "Monte Carlo samples");
    kernel->add_option("--resolution", kernelResolution, "Gauss-Hermite nodes");
    kernel->add_option("--seed", kernelSeed, "RNG seed (required for meanvalue/bounds)");
    kernel->add_option("--levels", kernelLevels, "bounds: comma-separated K levels");

    // ------------------------------------------------------------- simulate
    Common cSim;
    std::string simMethod = "exact", simX0;
    double simT = 1.0, simDt = 1e-3;
    long simN = 1000;
    std::optional<std::uint64_t> simSeed;
    auto* simulate = app.add_subcommand("simulate", "SDE sampling (exact or Euler-Maruyama)");
    add_common(simulate, cSim);
    simulate->add_option("--method", simMethod, "exact|em");
    simulate->add_option("--t", simT, "horizon");
    simulate->add_option("--dt", simDt, "Euler-Maruyama step");
    simulate->add_option("--n", simN, "sample count");
    simulate->add_option("--x0", simX0, "initial point (comma separated, default 0)");
    simulate->add_option("--seed", simSeed, "RNG seed (required)");

    // -------------------------------------------------------------- control
    Common cCtl;
    std::string ctlMode = "cost", ctlX0, ctlX1, ctlZ0, ctlClass = "bounded", ctlGridOut;
    double ctlT0 = 0.0, ctlT1 = 1.0, ctlTau = 1.0, ctlM = 1.0, ctlH = 1.0, ctlBoxL = 1.0,
           ctlDepth = 1.0;
    int ctlSteps = 1024, ctlResolution = 64;
    long ctlSampleN = 0;
    bool ctlAltNorm = false;
    std::optional<std::uint64_t> ctlSeed;
    auto* control = app.add_subcommand("control", "minimal-energy control and attainable sets");
    control->add_option("mode", ctlMode, "reach|cost|attainable")->required();
    add_common(control, cCtl);
    control->add_option("--x0", ctlX0, "start state (comma separated)");
    control->add_option("--x1", ctlX1, "target state (comma separated)");
    control->add_option("--t0", ctlT0, "reach: start time");
    control->add_option("--t1", ctlT1, "reach: end time");
    control->add_option("--tau", ctlTau, "cost: horizon");
    control->add_option("--steps", ctlSteps, "reach: control grid steps");
    control->add_flag("--alt-normalization", ctlAltNorm, "cost: use G = C(tau)");
    control->add_option("--z0", ctlZ0, "attainable: start point x...,t");
    control->add_option("--class", ctlClass, "attainable: unbounded|bounded|l2budget");
    control->add_option("--bound", ctlM, "attainable: bound M for the bounded class");
    control->add_option("--budget", ctlH, "attainable: L2 budget h");
    control->add_option("--box", ctlBoxL, "attainable: spatial half-width of the domain box");
    control->add_option("--depth", ctlDepth, "attainable: time depth of the domain box");
    control->add_option("--resolution", ctlResolution, "attainable: cells per axis");
    control->add_option("--sample", ctlSampleN, "attainable: also sample n random endpoints");
    control->add_option("--grid-out", ctlGridOut, "attainable: occupancy-grid JSON file");
    control->add_option("--seed", ctlSeed, "RNG seed (required when sampling)");

    // -------------------------------------------------------------- harnack
    Common cHk;
    std::string hkMode = "chain", hkZ0, hkZ1, hkTargets;
    double hkC = M_E, hkH = 1.0, hkRcap = 1.0, hkBoxL = 1.0, hkDepth = 1.0;
    int hkSteps = 256, hkResolution = 8;
    auto* harnack = app.add_subcommand("harnack", "Harnack chains and the maximum principle");
    harnack->add_option("mode", hkMode, "chain|bound|maxprinciple")->required();
    add_common(harnack, cHk);
    harnack->add_option("--z0", hkZ0, "source point x...,t");
    harnack->add_option("--z1", hkZ1, "chain: target point x...,t");
    harnack->add_option("--targets", hkTargets, "bound: CSV file of target points");
    harnack->add_option("--c", hkC, "Harnack constant per step");
    harnack->add_option("--energy-window", hkH, "window energy threshold");
    harnack->add_option("--r-cap", hkRcap, "radius cap r0");
    harnack->add_option("--box", hkBoxL, "domain spatial half-width");
    harnack->add_option("--depth", hkDepth, "domain time depth below z0");
    harnack->add_option("--steps", hkSteps, "connecting-curve steps");
    harnack->add_option("--resolution", hkResolution, "maxprinciple: grid resolution");

    CLI11_PARSE(app, argc, argv);

    // ------------------------------------------------------------- dispatch
    if (classify->parsed()) {
        const OperatorSpec spec = load_operator(cClassify.operatorFile, /*validate=*/false);
        const ConditionReport rep = check_all(spec);
        json j;
        j["c1_hormander"] = rep.c1;
        j["c1_dimension"] = rep.c1Dimension;
        j["c2_invariant_subspace"] = rep.c2;
        j["c3_gramian_positive"] = rep.c3;
        j["c3_min_eigenvalue"] = rep.c3MinEigenvalue;
        j["c4_kalman"] = rep.c4;
        j["c4_rank"] = rep.kalmanRank;
        j["c5_block_form"] = rep.c5;
        j["consistent"] = rep.consistent;
        j["hypoelliptic"] = rep.c1 && rep.consistent;
        if (!cClassify.noMeta) j["_meta"] = meta_line("classify");
        std::ofstream file;
        std::ostream& out = open_output(file, cClassify.output);
        out << j.dump(2) << "\n";
        return (rep.c1 && rep.consistent) ? 0 : 2;
    }

    if (geom->parsed()) {
        const OperatorSpec spec = load_operator(cGeom.operatorFile);
        const DilationGroup g = dilation_exponents(spec);
        std::vector<GroupPoint> pts;
        if (!geomPoints.empty()) {
            std::ifstream in(geomPoints);
            if (!in) throw InputError("cannot open points file: " + geomPoints);
            pts = read_points(in, spec.N);
        } else {
            pts = read_points(std::cin, spec.N);
        }
        std::ofstream file;
        std::ostream& out = open_output(file, cGeom.output);
        if (!cGeom.noMeta) out << meta_line("geom") << "\n";
        out << "z,w,d,in_unit,in_plus,in_minus\n";
        for (size_t i = 0; i < pts.size(); ++i)
            for (size_t j = 0; j < pts.size(); ++j) {
                if (i == j) continue;
                const double d = distance(pts[i], pts[j], spec, g);
                auto member = [&](CylinderShape shape) {
                    return cylinder_contains(pts[j], pts[i], geomRadius, shape, spec, g) ? 1 : 0;
                };
                out << i << "," << j << "," << fmt(d) << ","
                    << member(CylinderShape::UnitBox) << "," << member(CylinderShape::PlusBox)
                    << "," << member(CylinderShape::MinusBox) << "\n";
            }
        return 0;
    }

    if (kernel->parsed()) {
        const OperatorSpec spec = load_operator(cKernel.operatorFile);
        std::ofstream file;
        std::ostream& out = open_output(file, cKernel.output);
        if (kernelMode == "eval") {
            std::vector<Vector> rows;
            auto readRows = [&](std::istream& in) {
                std::string line;
                while (std::getline(in, line)) {
                    if (line.empty() || line[0] == '#') continue;
                    rows.push_back(parse_vector(line));
                }
            };
            if (!kernelPoints.empty()) {
                std::ifstream in(kernelPoints);
                if (!in) throw InputError("cannot open points file: " + kernelPoints);
                readRows(in);
            } else {
                readRows(std::cin);
            }
            if (!cKernel.noMeta) out << meta_line("kernel eval") << "\n";
            out << "gamma,log_gamma\n";
            for (const Vector& row : rows) {
                if (row.size() != 2 * (spec.N + 1))
                    throw InputError("kernel eval rows need x...,t,xi...,tau");
                const GroupPoint z(row.head(spec.N), row(spec.N));
                const GroupPoint zeta(row.segment(spec.N + 1, spec.N), row(2 * spec.N + 1));
                const KernelValue v = gamma(spec, z, zeta);
                out << fmt(v.value) << "," << fmt(v.logValue) << "\n";
            }
            return 0;
        }
        if (kernelMode == "meanvalue") {
            if (!kernelSeed) {
                std::cerr << "kernel meanvalue requires --seed\n";
                return 4;
            }
            const GroupPoint z0(Vector::Zero(spec.N), 0.0);
            const double err = mean_value_verify(
                spec, z0, kernelR, [](const GroupPoint&) { return 1.0; }, kernelSamples,
                *kernelSeed);
            if (!cKernel.noMeta) out << meta_line("kernel meanvalue") << "\n";
            out << "r,samples,relative_error\n";
            out << fmt(kernelR) << "," << kernelSamples << "," << fmt(err) << "\n";
            return 0;
        }
        if (kernelMode == "chapman") {
            Vector x = kernelX.empty() ? Vector(Vector::Zero(spec.N)) : parse_vector(kernelX);
            if (x.size() != spec.N) throw InputError("--x must have N entries");
            const GroupPoint z(x, kernelT);
            const GroupPoint zeta(Vector::Zero(spec.N), 0.0);
            const double err = chapman_check(spec, z, zeta, kernelS, kernelResolution);
            if (!cKernel.noMeta) out << meta_line("kernel chapman") << "\n";
            out << "t,s,relative_error\n";
            out << fmt(kernelT) << "," << fmt(kernelS) << "," << fmt(err) << "\n";
            return 0;
        }
        if (kernelMode == "bounds") {
            if (!kernelSeed) {
                std::cerr << "kernel bounds requires --seed\n";
                return 4;
            }
            std::vector<double> levels;
            {
                const Vector v = parse_vector(kernelLevels);
                for (int i = 0; i < v.size(); ++i) levels.push_back(v(i));
            }
            const ComparisonReport rep =
                comparison_bounds_check(spec, levels, kernelSamples, *kernelSeed);
            if (!cKernel.noMeta) out << meta_line("kernel bounds") << "\n";
            out << "K,eps,count,c_plus,c_minus\n";
            for (const auto& row : rep.epsByLevel)
                out << fmt(row.K) << "," << fmt(row.eps) << "," << row.count << ","
                    << fmt(rep.cPlus) << "," << fmt(rep.cMinus) << "\n";
            return 0;
        }
        throw InputError("unknown kernel mode: " + kernelMode);
    }

    if (simulate->parsed()) {
        if (!simSeed) {
            std::cerr << "simulate requires --seed\n";
            return 4;
        }
        const OperatorSpec spec = load_operator(cSim.operatorFile);
        Vector x0 = simX0.empty() ? Vector(Vector::Zero(spec.N)) : parse_vector(simX0);
        SampleBatch batch;
        if (simMethod == "exact") {
            batch = sample_exact(spec, x0, simT, simN, *simSeed);
        } else if (simMethod == "em") {
            const int steps = std::max(1, static_cast<int>(std::round(simT / simDt)));
            batch = euler_maruyama(spec, x0, simT, steps, simN, *simSeed);
        } else {
            throw InputError("unknown method: " + simMethod);
        }
        std::ofstream file;
        std::ostream& out = open_output(file, cSim.output);
        if (!cSim.noMeta) out << meta_line("simulate " + simMethod) << "\n";
        for (int i = 0; i < spec.N; ++i) out << (i ? "," : "") << "x" << (i + 1);
        out << "\n";
        for (long k = 0; k < batch.count(); ++k) {
            for (int i = 0; i < spec.N; ++i)
                out << (i ? "," : "") << fmt(batch.samples(i, k));
            out << "\n";
        }
        return 0;
    }

    if (control->parsed()) {
        const OperatorSpec spec = load_operator(cCtl.operatorFile);
        std::ofstream file;
        std::ostream& out = open_output(file, cCtl.output);
        if (ctlMode == "reach") {
            const Vector x0 = ctlX0.empty() ? Vector(Vector::Zero(spec.N)) : parse_vector(ctlX0);
            const Vector x1 = parse_vector(ctlX1);
            const ControlGrid grid = reach_min_energy(spec, x0, ctlT0, x1, ctlT1, ctlSteps);
            if (!cCtl.noMeta) out << meta_line("control reach") << "\n";
            out << "energy," << fmt(grid.energy()) << "\n";
            out << "step";
            for (int j = 0; j < grid.omega.cols(); ++j) out << ",omega" << (j + 1);
            out << "\n";
            for (int i = 0; i < grid.steps; ++i) {
                out << i;
                for (int j = 0; j < grid.omega.cols(); ++j) out << "," << fmt(grid.omega(i, j));
                out << "\n";
            }
            return 0;
        }
        if (ctlMode == "cost") {
            const Vector x0 = ctlX0.empty() ? Vector(Vector::Zero(spec.N)) : parse_vector(ctlX0);
            const Vector x1 = parse_vector(ctlX1);
            const double cost = optimal_cost(spec, x0, x1, ctlTau, ctlAltNorm);
            if (!cCtl.noMeta) out << meta_line("control cost") << "\n";
            out << "tau,cost\n" << fmt(ctlTau) << "," << fmt(cost) << "\n";
            return 0;
        }
        if (ctlMode == "attainable") {
            const GroupPoint z0 =
                ctlZ0.empty() ? GroupPoint(Vector::Zero(spec.N), 0.0) : parse_point(ctlZ0, spec.N);
            BoxUnion domain(centered_box(spec.N, ctlBoxL, z0.t - ctlDepth, z0.t));
            const ControlClass cls = parse_class(ctlClass, ctlM, ctlH);
            const AttainableGrid grid = attainable_grid(spec, z0, domain, cls, ctlResolution);
            if (!ctlGridOut.empty()) {
                json j;
                j["cells_per_axis"] = grid.cellsPerAxis;
                j["time_layers"] = grid.timeLayers;
                j["dt"] = grid.dt;
                json layers = json::array();
                for (int l = 0; l <= grid.timeLayers; ++l) {
                    json marked = json::array();
                    for (long c = 0; c < grid.spatialCells(); ++c)
                        if (grid.cellMarked(l, c)) marked.push_back(c);
                    layers.push_back(marked);
                }
                j["marked"] = layers;
                if (!cCtl.noMeta) j["_meta"] = meta_line("control attainable");
                std::ofstream gf(ctlGridOut);
                gf << j.dump() << "\n";
            }
            if (!cCtl.noMeta) out << meta_line("control attainable") << "\n";
            for (int i = 0; i < spec.N; ++i) out << "x" << (i + 1) << ",";
            out << "t\n";
            if (ctlSampleN > 0) {
                if (!ctlSeed) {
                    std::cerr << "control attainable --sample requires --seed\n";
                    return 4;
                }
                for (const auto& p :
                     attainable_sample(spec, z0, domain, cls, ctlSampleN, *ctlSeed)) {
                    for (int i = 0; i < spec.N; ++i) out << fmt(p.x(i)) << ",";
                    out << fmt(p.t) << "\n";
                }
            } else {
                for (int l = 0; l <= grid.timeLayers; ++l)
                    for (long c = 0; c < grid.spatialCells(); ++c) {
                        if (!grid.cellMarked(l, c)) continue;
                        const Vector x = grid.cellCenter(c);
                        for (int i = 0; i < spec.N; ++i) out << fmt(x(i)) << ",";
                        out << fmt(z0.t - l * grid.dt) << "\n";
                    }
            }
            return 0;
        }
        throw InputError("unknown control mode: " + ctlMode);
    }

    if (harnack->parsed()) {
        const OperatorSpec spec = load_operator(cHk.operatorFile);
        HarnackParams params;
        params.c = hkC;
        params.h = hkH;
        params.rCap = hkRcap;
        const GroupPoint z0 =
            hkZ0.empty() ? GroupPoint(Vector::Zero(spec.N), 0.0) : parse_point(hkZ0, spec.N);
        BoxUnion domain(centered_box(spec.N, hkBoxL, z0.t - hkDepth, z0.t + 0.25));
        std::ofstream file;
        std::ostream& out = open_output(file, cHk.output);
        if (hkMode == "chain") {
            const GroupPoint z1 = parse_point(hkZ1, spec.N);
            const AdmissibleCurve curve = min_energy_curve(spec, z0, z1, hkSteps);
            const HarnackChain chain = build_chain(spec, curve, domain, params);
            json j;
            j["k"] = chain.k;
            j["bound"] = chain.bound;
            j["r0"] = chain.r0;
            j["delta0"] = chain.delta0;
            json pts = json::array(), radii = json::array();
            for (const auto& p : chain.points) {
                json pj = json::array();
                for (int i = 0; i < spec.N; ++i) pj.push_back(p.x(i));
                pj.push_back(p.t);
                pts.push_back(pj);
            }
            for (double r : chain.radii) radii.push_back(r);
            j["points"] = pts;
            j["radii"] = radii;
            if (!cHk.noMeta) j["_meta"] = meta_line("harnack chain");
            out << j.dump(2) << "\n";
            return 0;
        }
        if (hkMode == "bound") {
            std::vector<GroupPoint> targets;
            if (!hkTargets.empty()) {
                std::ifstream in(hkTargets);
                if (!in) throw InputError("cannot open targets file: " + hkTargets);
                targets = read_points(in, spec.N);
            } else if (!hkZ1.empty()) {
                targets.push_back(parse_point(hkZ1, spec.N));
            } else {
                throw InputError("harnack bound needs --targets or --z1");
            }
            const auto bounds = harnack_bound(spec, z0, targets, domain, params, hkSteps);
            if (!cHk.noMeta) out << meta_line("harnack bound") << "\n";
            for (int i = 0; i < spec.N; ++i) out << "x" << (i + 1) << ",";
            out << "t,bound\n";
            double cK = 0.0;
            for (const auto& [target, bound] : bounds) {
                for (int i = 0; i < spec.N; ++i) out << fmt(target.x(i)) << ",";
                out << fmt(target.t) << "," << fmt(bound) << "\n";
                cK = std::max(cK, bound);
            }
            out << "# C_K," << fmt(cK) << "\n";
            return 0;
        }
        if (hkMode == "maxprinciple") {
            const PropagationReport rep =
                strong_max_report(spec, z0, domain, params, hkResolution);
            json j;
            j["attainable_cells"] = rep.attainableCells;
            j["bounded_cells"] = rep.boundedCells;
            json cells = json::array();
            for (const auto& cell : rep.cells) {
                json cj;
                json xj = json::array();
                for (int i = 0; i < spec.N; ++i) xj.push_back(cell.center.x(i));
                cj["x"] = xj;
                cj["t"] = cell.center.t;
                cj["chain"] = cell.chainFound;
                if (cell.chainFound) cj["bound"] = cell.bound;
                cells.push_back(cj);
            }
            j["cells"] = cells;
            if (!cHk.noMeta) j["_meta"] = meta_line("harnack maxprinciple");
            out << j.dump(2) << "\n";
            return 0;
        }
        throw InputError("unknown harnack mode: " + hkMode);
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const kolmo::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const kolmo::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const kolmo::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    }
}
