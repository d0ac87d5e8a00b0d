#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <utility>
#include <vector>

#include "gainform/errors.hpp"
#include "gainform/model.hpp"

namespace gainform {

inline constexpr double kDefaultHorizon = 10.0;
inline constexpr double kDefaultDt = 0.01;

/// Matrix exponential (scaling-and-squaring with Pade approximation,
/// backward-error controlled).
inline Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) {
        throw DimensionMismatch("matrix_exponential: matrix must be square");
    }
    detail::require_finite(m, "matrix_exponential input");
    Eigen::MatrixXd e = m.exp();
    if (!e.allFinite()) {
        throw NonFiniteResult("matrix_exponential overflowed");
    }
    return e;
}

/// Sampled response. states row k is x(t_k); inputs row k holds the recorded
/// feedback u(t_k) = L x(t_k) when the realization carries the stacked
/// (x, u) output map (more output rows than states), and is empty otherwise.
struct Trajectory {
    std::vector<double> times;
    Eigen::MatrixXd states;  // samples x n
    Eigen::MatrixXd inputs;  // samples x (outputs - n), possibly 0 columns
};

/// Response to the constant disturbance w from x(0) = 0, sampled on the
/// uniform grid t_k = k dt up to the horizon. Uses the exact zero-order-hold
/// discretization through an augmented matrix exponential, so the samples
/// carry no time-stepping error.
inline Trajectory step_response(const StateSpace& ss, const Eigen::VectorXd& w, double horizon,
                                double dt) {
    if (!(dt > 0) || !(horizon >= 0)) {
        throw ValidationError("step_response: need dt > 0 and horizon >= 0");
    }
    if (w.size() != ss.inputs()) {
        throw DimensionMismatch("step_response: disturbance width does not match the inputs");
    }
    const Eigen::Index n = ss.states();

    // exp([[A, Bw],[0, 0]] dt) = [[e^{A dt}, (int_0^dt e^{As} ds) B w], [0, 1]].
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = ss.a * dt;
    aug.topRightCorner(n, 1) = ss.b * w * dt;
    const Eigen::MatrixXd e = matrix_exponential(aug);
    const Eigen::MatrixXd phi = e.topLeftCorner(n, n);
    const Eigen::VectorXd drive = e.topRightCorner(n, 1);

    const auto steps = static_cast<Eigen::Index>(std::llround(horizon / dt));
    Trajectory traj;
    traj.times.resize(static_cast<std::size_t>(steps) + 1);
    traj.states.resize(steps + 1, n);
    const Eigen::Index extra_rows = std::max<Eigen::Index>(ss.outputs() - n, 0);
    traj.inputs.resize(steps + 1, extra_rows);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd feedthrough = ss.d.bottomRows(extra_rows) * w;
    for (Eigen::Index k = 0; k <= steps; ++k) {
        traj.times[static_cast<std::size_t>(k)] = static_cast<double>(k) * dt;
        traj.states.row(k) = x.transpose();
        if (extra_rows > 0) {
            traj.inputs.row(k) = (ss.c.bottomRows(extra_rows) * x + feedthrough).transpose();
        }
        x = phi * x + drive;
    }
    if (!traj.states.allFinite()) {
        throw NonFiniteResult("step_response produced a non-finite state");
    }
    return traj;
}

/// Limit of the step response, -A^{-1} B w.
inline Eigen::VectorXd steady_state(const StateSpace& ss, const Eigen::VectorXd& w) {
    if (w.size() != ss.inputs()) {
        throw DimensionMismatch("steady_state: disturbance width does not match the inputs");
    }
    return -ss.a.partialPivLu().solve(ss.b * w);
}

}  // namespace gainform
