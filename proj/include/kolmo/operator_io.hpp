#pragma once

#include "kolmo/operator_model.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>
#include <vector>

namespace kolmo {

using json = nlohmann::json;

namespace detail {

inline Matrix matrix_from_json(const json& j, const std::string& key) {
    if (!j.is_array() || j.empty() || !j.front().is_array())
        throw InputError("operator file: '" + key + "' must be a 2-d array");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j.front().size());
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (static_cast<int>(j[r].size()) != cols)
            throw InputError("operator file: ragged rows in '" + key + "'");
        for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

inline json matrix_to_json(const Matrix& m) {
    json j = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        j.push_back(row);
    }
    return j;
}

}  // namespace detail

/// Parses {"N", "A", "B", "sigma"?, "m", "lambda"?}.  With validate=false the
/// block-form and ellipticity checks are skipped (classification must be able
/// to look at operators that are not hypoelliptic), keeping only shape,
/// finiteness and symmetry.
inline OperatorSpec operator_from_json(const json& j, bool validate = true) {
    for (const char* key : {"N", "A", "B", "m"})
        if (!j.contains(key))
            throw InputError(std::string("operator file: missing key '") + key + "'");
    const int n = j.at("N").get<int>();
    Matrix A = detail::matrix_from_json(j.at("A"), "A");
    Matrix B = detail::matrix_from_json(j.at("B"), "B");
    if (A.rows() != n || B.rows() != n)
        throw DimensionMismatch("operator file: matrices do not match N");
    std::optional<Matrix> sigma;
    if (j.contains("sigma") && !j.at("sigma").is_null())
        sigma = detail::matrix_from_json(j.at("sigma"), "sigma");
    std::vector<int> m = j.at("m").get<std::vector<int>>();
    std::optional<double> lambda;
    if (j.contains("lambda") && !j.at("lambda").is_null())
        lambda = j.at("lambda").get<double>();
    if (validate)
        return validate_operator(std::move(A), std::move(B), std::move(sigma), std::move(m),
                                 lambda);

    if (A.cols() != n || B.cols() != n)
        throw DimensionMismatch("operator file: matrices must be N x N");
    if (!A.allFinite() || !B.allFinite()) throw NonFinite("matrix entries must be finite");
    if ((A - A.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff()))
        throw NotSymmetric("A must be symmetric");
    if (m.empty()) m = {n};
    OperatorSpec spec;
    spec.N = n;
    spec.A = std::move(A);
    spec.B = std::move(B);
    spec.sigma = std::move(sigma);
    spec.m = std::move(m);
    spec.lambda = lambda.value_or(1.0);
    return spec;
}

inline json operator_to_json(const OperatorSpec& spec) {
    json j;
    j["N"] = spec.N;
    j["A"] = detail::matrix_to_json(spec.A);
    j["B"] = detail::matrix_to_json(spec.B);
    if (spec.sigma) j["sigma"] = detail::matrix_to_json(*spec.sigma);
    j["m"] = spec.m;
    j["lambda"] = spec.lambda;
    return j;
}

inline OperatorSpec load_operator(const std::string& path, bool validate = true) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open operator file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError(std::string("operator file is not valid JSON: ") + e.what());
    }
    return operator_from_json(j, validate);
}

inline void save_operator(const OperatorSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open for writing: " + path);
    out << operator_to_json(spec).dump(2) << "\n";
}

}  // namespace kolmo
