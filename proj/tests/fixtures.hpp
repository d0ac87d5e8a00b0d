#pragma once

#include <cstdint>
#include <random>

#include "gainform/gainform.hpp"

// Shared test fixtures: the two three-state buffer plants used throughout,
// their synthesized gains in exact rationals, and the matching optimal norm
// levels frozen from a high-precision eigensolve of A^2 + B B^T.
namespace fixtures {

inline gainform::LtiSystem buffer_network() {
    Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
    a.diagonal() << -1.0, -3.0, -2.0;
    Eigen::Matrix3d b;
    b << -1, 0, 0, 1, 1, -1, 0, 0, 1;
    return gainform::validate_system(a, b);
}

// B^T A^{-1} for buffer_network, exact rationals.
inline Eigen::Matrix3d network_sparse_gain() {
    Eigen::Matrix3d l;
    l << 1.0, -1.0 / 3.0, 0.0, 0.0, -1.0 / 3.0, 0.0, 0.0, 1.0 / 3.0, -0.5;
    return l;
}

// Dense gain produced by a Riccati-iteration design for the same plant,
// printed at two decimals; optimal up to that rounding.
inline Eigen::Matrix3d network_dense_gain() {
    Eigen::Matrix3d l;
    l << 0.93, -0.11, 0.00, -0.05, -0.17, -0.01, 0.04, 0.16, -0.26;
    return l;
}

inline gainform::LtiSystem buffer_chain() {
    Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
    a.diagonal() << -1.0, -2.0, -4.0;
    Eigen::MatrixXd b(3, 2);
    b << -1, 0, 1, -1, 0, 1;
    return gainform::validate_system(a, b);
}

inline Eigen::MatrixXd buffer_chain_gain() {
    Eigen::MatrixXd l(2, 3);
    l << 1.0, -0.5, 0.0, 0.0, 0.5, -0.25;
    return l;
}

// 1/sqrt(lambda_min(A^2 + B B^T)), 40-digit eigensolve rounded to double.
inline constexpr double kBufferNetworkGamma = 0.7259062847667712;
inline constexpr double kBufferNetworkLambdaMin = 1.8977495061120003;
inline constexpr double kBufferChainGamma = 0.7536885510234540;

// Deterministic uniform helpers (mt19937_64 is pinned by the standard; the
// distribution classes are not, so map the raw draws ourselves).
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows,
                                     Eigen::Index cols, double lo = -1.0, double hi = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            m(i, j) = uniform(rng, lo, hi);
        }
    }
    return m;
}

/// Random plant with symmetric negative definite A (entries O(1)) and dense B.
inline gainform::LtiSystem random_system(std::mt19937_64& rng, Eigen::Index n,
                                         Eigen::Index m) {
    Eigen::MatrixXd g = random_matrix(rng, n, n);
    Eigen::MatrixXd a = -(g * g.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n));
    return gainform::validate_system(a, random_matrix(rng, n, m));
}

/// Random node-link incidence matrix: each column one -1 (tail), one +1 (head).
inline Eigen::MatrixXd random_incidence(std::mt19937_64& rng, Eigen::Index nodes,
                                        Eigen::Index links) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(nodes, links);
    for (Eigen::Index j = 0; j < links; ++j) {
        const auto tail = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(nodes));
        auto head = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(nodes - 1));
        if (head >= tail) ++head;
        b(tail, j) = -1.0;
        b(head, j) = 1.0;
    }
    return b;
}

}  // namespace fixtures
