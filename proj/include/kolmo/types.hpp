#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>

namespace kolmo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A point z = (x, t) of the space-time group R^{N+1}.
struct GroupPoint {
    Vector x;
    double t = 0.0;

    GroupPoint() = default;
    GroupPoint(Vector x_, double t_) : x(std::move(x_)), t(t_) {}

    int dim() const { return static_cast<int>(x.size()); }

    bool allFinite() const { return x.allFinite() && std::isfinite(t); }
};

// ---------------------------------------------------------------------------
// Error hierarchy.  Every failure mode named by a module contract maps to a
// subclass so callers (and the CLI) can translate them into exit codes.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InputError : Error {
    using Error::Error;
};

struct NumericalError : Error {
    using Error::Error;
};

struct DimensionMismatch : InputError {
    using InputError::InputError;
};
struct NotSymmetric : InputError {
    using InputError::InputError;
};
struct A0NotPositive : InputError {
    using InputError::InputError;
};
struct BlockRankDeficient : InputError {
    int blockIndex;
    BlockRankDeficient(int j, const std::string& msg) : InputError(msg), blockIndex(j) {}
};
struct NonPositiveRadius : InputError {
    using InputError::InputError;
};
struct NonPositiveTime : InputError {
    using InputError::InputError;
};
struct BadTimeOrder : InputError {
    using InputError::InputError;
};
struct NonFinite : InputError {
    using InputError::InputError;
};
struct ZeroPoint : InputError {
    using InputError::InputError;
};
struct ZeroNormal : InputError {
    using InputError::InputError;
};
struct DegenerateSample : InputError {
    using InputError::InputError;
};
struct GramianSingular : NumericalError {
    using NumericalError::NumericalError;
};
struct PoleEvaluation : NumericalError {
    using NumericalError::NumericalError;
};
struct PoleInsideDomain : InputError {
    using InputError::InputError;
};
struct BadSampleCount : InputError {
    using InputError::InputError;
};
struct BadStep : InputError {
    using InputError::InputError;
};
struct EmptyControl : InputError {
    using InputError::InputError;
};
struct NotControllable : InputError {
    using InputError::InputError;
};
struct PointOutsideDomain : InputError {
    using InputError::InputError;
};
struct PointOnBoundary : InputError {
    using InputError::InputError;
};
struct CurveExitsDomain : InputError {
    using InputError::InputError;
};
struct EnergyWindowUnsatisfiable : NumericalError {
    using NumericalError::NumericalError;
};
struct TargetNotAttainable : InputError {
    using InputError::InputError;
};

}  // namespace kolmo
