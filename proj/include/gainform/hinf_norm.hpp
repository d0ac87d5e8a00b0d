#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <sstream>
#include <vector>

#include "gainform/errors.hpp"
#include "gainform/model.hpp"

namespace gainform {

inline constexpr double kDefaultBisectTol = 1e-6;   // relative
inline constexpr double kDefaultImagTol = 1e-8;     // relative to ||H||_F
inline constexpr int kDefaultMaxIter = 200;

struct NormResult {
    double gamma = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double peak_frequency = 0.0;  // rad/time, best estimate
    int iterations = 0;
    // Tolerances the run used, echoed for reporting.
    double bisect_tol = kDefaultBisectTol;
    double imag_tol = kDefaultImagTol;
};

namespace detail {

inline void require_hurwitz(const Eigen::MatrixXd& a, const char* who) {
    if (max_real_eigenvalue(a) >= 0.0) {
        throw NotStable(std::string(who) + ": state matrix is not Hurwitz");
    }
}

/// Largest singular value of the response C (iw I - A)^{-1} B + D.
inline double sigma_at(const StateSpace& ss, double omega) {
    const Eigen::Index n = ss.states();
    Eigen::MatrixXcd resolvent =
        std::complex<double>(0.0, omega) * Eigen::MatrixXcd::Identity(n, n) - ss.a;
    Eigen::MatrixXcd g =
        ss.c * resolvent.partialPivLu().solve(Eigen::MatrixXcd(ss.b)) + ss.d;
    return g.jacobiSvd().singularValues()(0);
}

/// Solves A X + X A1^T + W = 0 through the Kronecker linear system. Dense and
/// O(n^6), fine for the small plants this library targets.
inline Eigen::MatrixXd solve_sylvester(const Eigen::MatrixXd& a, const Eigen::MatrixXd& a1,
                                       const Eigen::MatrixXd& w) {
    const Eigen::Index n = a.rows();
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n * n, n * n);
    // vec(AX + X A1^T) = (I (x) A + A1 (x) I) vec(X), column-major vec.
    for (Eigen::Index j = 0; j < n; ++j) {
        k.block(j * n, j * n, n, n) += a;
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index l = 0; l < n; ++l) {
                k(j * n + i, l * n + i) += a1(j, l);
            }
        }
    }
    Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(w.data(), n * n);
    Eigen::VectorXd x = k.partialPivLu().solve(rhs);
    return Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
}

/// Hankel singular values of a stable realization (sqrt of eigenvalues of the
/// Gramian product), used for the a-priori upper bound
/// ||G||_inf <= sigma_max(D) + 2 sum_i sigma_H,i.
inline std::vector<double> hankel_singular_values(const StateSpace& ss) {
    Eigen::MatrixXd p = solve_sylvester(ss.a, ss.a, ss.b * ss.b.transpose());
    Eigen::MatrixXd q = solve_sylvester(ss.a.transpose(), ss.a.transpose(),
                                        ss.c.transpose() * ss.c);
    Eigen::VectorXcd lam = (p * q).eigenvalues();
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(lam.size()));
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        out.push_back(std::sqrt(std::max(0.0, lam(i).real())));
    }
    return out;
}

/// Hamiltonian whose imaginary-axis eigenvalues certify sigma(G(iw)) = gamma.
/// For D = 0 this is [[A, B B^T / g^2], [-C^T C, -A^T]]; a nonzero D goes
/// through the standard augmented form with R = g^2 I - D^T D.
inline Eigen::MatrixXd gamma_test_hamiltonian(const StateSpace& ss, double gamma) {
    const Eigen::Index n = ss.states();
    Eigen::MatrixXd h(2 * n, 2 * n);
    if (ss.d.isZero(0.0)) {
        h.topLeftCorner(n, n) = ss.a;
        h.topRightCorner(n, n) = ss.b * ss.b.transpose() / (gamma * gamma);
        h.bottomLeftCorner(n, n) = -ss.c.transpose() * ss.c;
        h.bottomRightCorner(n, n) = -ss.a.transpose();
        return h;
    }
    const Eigen::Index p = ss.inputs();
    Eigen::MatrixXd r = gamma * gamma * Eigen::MatrixXd::Identity(p, p) -
                        ss.d.transpose() * ss.d;
    Eigen::LLT<Eigen::MatrixXd> r_llt(r);
    if (r_llt.info() != Eigen::Success) {
        throw NumericError("gamma is not above sigma_max(D); Hamiltonian test undefined");
    }
    Eigen::MatrixXd r_inv_bt = r_llt.solve(ss.b.transpose());
    Eigen::MatrixXd r_inv_dt_c = r_llt.solve(ss.d.transpose() * ss.c);
    Eigen::MatrixXd a_bar = ss.a + ss.b * r_inv_dt_c;
    h.topLeftCorner(n, n) = a_bar;
    h.topRightCorner(n, n) = ss.b * r_inv_bt;
    h.bottomLeftCorner(n, n) =
        -ss.c.transpose() * ss.c - ss.c.transpose() * ss.d * r_inv_dt_c;
    h.bottomRightCorner(n, n) = -a_bar.transpose();
    return h;
}

struct AxisScan {
    bool has_axis_eigenvalue = false;
    std::vector<double> axis_frequencies;  // |Im| of the near-axis eigenvalues
};

inline AxisScan scan_imaginary_axis(const Eigen::MatrixXd& h, double imag_tol_rel) {
    const double threshold = imag_tol_rel * h.norm();
    Eigen::EigenSolver<Eigen::MatrixXd> es(h, /*computeEigenvectors=*/false);
    AxisScan scan;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        if (std::abs(es.eigenvalues()(i).real()) <= threshold) {
            scan.has_axis_eigenvalue = true;
            scan.axis_frequencies.push_back(std::abs(es.eigenvalues()(i).imag()));
        }
    }
    return scan;
}

inline std::vector<double> coarse_grid() {
    std::vector<double> grid{0.0};
    for (int k = -6; k <= 6; ++k) {
        grid.push_back(std::pow(10.0, 0.5 * k));
    }
    return grid;
}

}  // namespace detail

/// Closed loop of Eq.-style plant dx = A x + B u + w under u = L x, from the
/// disturbance w to the stacked performance output (x, u):
/// (A + B L, I, [I; L], 0).
inline StateSpace closed_loop(const LtiSystem& sys, const GainMatrix& gain) {
    if (gain.l.rows() != sys.m() || gain.l.cols() != sys.n()) {
        std::ostringstream os;
        os << "gain is " << gain.l.rows() << "x" << gain.l.cols() << ", expected " << sys.m()
           << "x" << sys.n();
        throw DimensionMismatch(os.str());
    }
    const Eigen::Index n = sys.n();
    const Eigen::Index m = sys.m();
    Eigen::MatrixXd a_cl = sys.a() + sys.b() * gain.l;
    if (detail::max_real_eigenvalue(a_cl) >= 0.0) {
        throw UnstableClosedLoop("A + B L is not Hurwitz; the closed-loop norm is undefined");
    }
    Eigen::MatrixXd c(n + m, n);
    c.topRows(n) = Eigen::MatrixXd::Identity(n, n);
    c.bottomRows(m) = gain.l;
    return StateSpace(std::move(a_cl), Eigen::MatrixXd::Identity(n, n), std::move(c),
                      Eigen::MatrixXd::Zero(n + m, n));
}

/// Closed loop with the scaled performance output (Cx, Du), where Q = C^T C
/// and R = D^T D are recovered through Cholesky factors.
inline StateSpace weighted_closed_loop(const LtiSystem& sys, const CostWeights& w,
                                       const GainMatrix& gain) {
    if (gain.l.rows() != sys.m() || gain.l.cols() != sys.n()) {
        throw DimensionMismatch("gain does not match the plant");
    }
    const Eigen::Index n = sys.n();
    const Eigen::Index m = sys.m();
    Eigen::MatrixXd a_cl = sys.a() + sys.b() * gain.l;
    if (detail::max_real_eigenvalue(a_cl) >= 0.0) {
        throw UnstableClosedLoop("A + B L is not Hurwitz; the closed-loop norm is undefined");
    }
    Eigen::MatrixXd c_factor = w.q().llt().matrixU();
    Eigen::MatrixXd d_factor = w.r().llt().matrixU();
    Eigen::MatrixXd c(n + m, n);
    c.topRows(n) = c_factor;
    c.bottomRows(m) = d_factor * gain.l;
    return StateSpace(std::move(a_cl), Eigen::MatrixXd::Identity(n, n), std::move(c),
                      Eigen::MatrixXd::Zero(n + m, n));
}

/// H-infinity norm by Hamiltonian bisection: at each candidate gamma the test
/// matrix has an eigenvalue within imag_tol * ||H|| of the imaginary axis iff
/// the norm is >= gamma. The returned bracket satisfies
/// upper - lower <= bisect_tol * max(1, lower).
inline NormResult hinf_norm_bisect(const StateSpace& ss, double bisect_tol = kDefaultBisectTol,
                                   double imag_tol = kDefaultImagTol,
                                   int max_iter = kDefaultMaxIter) {
    if (!(bisect_tol > 0)) {
        throw ValidationError("bisect_tol must be > 0");
    }
    detail::require_hurwitz(ss.a, "hinf_norm_bisect");

    NormResult result;
    result.bisect_tol = bisect_tol;
    result.imag_tol = imag_tol;

    const double sigma_d = ss.d.isZero(0.0) ? 0.0 : ss.d.jacobiSvd().singularValues()(0);
    double lower = sigma_d;
    for (double w : detail::coarse_grid()) {
        lower = std::max(lower, detail::sigma_at(ss, w));
    }

    double hankel_sum = 0.0;
    for (double s : detail::hankel_singular_values(ss)) {
        hankel_sum += s;
    }
    if (hankel_sum <= 1e-14 * std::max(1.0, sigma_d)) {
        // Strictly proper part is numerically zero: the norm is sigma_max(D).
        result.gamma = result.lower = result.upper = sigma_d;
        return result;
    }
    double upper = sigma_d + 2.0 * hankel_sum;

    int iter = 0;
    // The Hankel-type bound already majorizes the norm; the doubling loop only
    // guards against borderline rounding of that bound.
    while (detail::scan_imaginary_axis(detail::gamma_test_hamiltonian(ss, upper), imag_tol)
               .has_axis_eigenvalue) {
        lower = std::max(lower, upper);
        upper *= 2.0;
        if (++iter > max_iter) {
            throw NoConvergence("hinf_norm_bisect: upper bound search did not terminate");
        }
    }

    double peak = 0.0;
    bool peak_known = false;
    while (upper - lower > bisect_tol * std::max(1.0, lower)) {
        if (++iter > max_iter) {
            throw NoConvergence("hinf_norm_bisect: no convergence after " +
                                std::to_string(max_iter) + " iterations");
        }
        const double gamma = 0.5 * (lower + upper);
        const detail::AxisScan scan =
            detail::scan_imaginary_axis(detail::gamma_test_hamiltonian(ss, gamma), imag_tol);
        if (scan.has_axis_eigenvalue) {
            lower = gamma;
            // Crossing frequencies bracket the peak; their mean is the estimate.
            double sum = 0.0;
            for (double f : scan.axis_frequencies) sum += f;
            peak = sum / static_cast<double>(scan.axis_frequencies.size());
            peak_known = true;
        } else {
            upper = gamma;
        }
    }

    result.gamma = 0.5 * (lower + upper);
    result.lower = lower;
    result.upper = upper;
    result.iterations = iter;
    result.peak_frequency = peak_known ? peak : 0.0;
    return result;
}

/// Largest singular value of the frequency response over an explicit grid.
/// Always a lower bound on the true norm.
inline double freq_sweep_norm(const StateSpace& ss, std::span<const double> grid) {
    if (grid.empty()) {
        throw ValidationError("freq_sweep_norm: the frequency grid is empty");
    }
    for (double w : grid) {
        if (!std::isfinite(w)) {
            throw ValidationError("freq_sweep_norm: non-finite frequency in grid");
        }
    }
    detail::require_hurwitz(ss.a, "freq_sweep_norm");
    double best = 0.0;
    for (double w : grid) {
        best = std::max(best, detail::sigma_at(ss, w));
    }
    return best;
}

inline double freq_sweep_norm(const StateSpace& ss, const std::vector<double>& grid) {
    return freq_sweep_norm(ss, std::span<const double>(grid));
}

/// Logarithmically spaced frequency grid on [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, int count) {
    if (!(lo > 0) || !(hi > lo) || count < 2) {
        throw ValidationError("log_grid: need 0 < lo < hi and count >= 2");
    }
    std::vector<double> grid(static_cast<std::size_t>(count));
    const double step = std::log(hi / lo) / (count - 1);
    for (int i = 0; i < count; ++i) {
        grid[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
    }
    return grid;
}

/// Largest eigenvalue of the bounded-real LMI block matrix
///   [[Acl^T P + P Acl, P, C^T], [P, -g^2 I, 0], [C, 0, -I]]
/// for the storage candidate P. Negative semidefinite (max eig <= tol)
/// certifies that the closed loop is below level gamma.
inline double bounded_real_lmi_max_eig(const StateSpace& ss, double gamma,
                                       const Eigen::MatrixXd& p) {
    if (!ss.d.isZero(0.0)) {
        throw ValidationError("bounded_real_lmi_max_eig expects a strictly proper realization");
    }
    if (p.rows() != ss.states() || p.cols() != ss.states()) {
        throw DimensionMismatch("storage candidate P must be n x n");
    }
    const Eigen::Index n = ss.states();
    const Eigen::Index nw = ss.inputs();
    const Eigen::Index q = ss.outputs();
    Eigen::MatrixXd lmi = Eigen::MatrixXd::Zero(n + nw + q, n + nw + q);
    lmi.topLeftCorner(n, n) = ss.a.transpose() * p + p * ss.a;
    lmi.block(0, n, n, nw) = p * ss.b;
    lmi.block(n, 0, nw, n) = ss.b.transpose() * p;
    lmi.block(n, n, nw, nw) = -gamma * gamma * Eigen::MatrixXd::Identity(nw, nw);
    lmi.block(0, n + nw, n, q) = ss.c.transpose();
    lmi.block(n + nw, 0, q, n) = ss.c;
    lmi.bottomRightCorner(q, q) = -Eigen::MatrixXd::Identity(q, q);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (lmi + lmi.transpose()),
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

}  // namespace gainform
