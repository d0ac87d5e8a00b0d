#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include "gainform/errors.hpp"
#include "gainform/hinf_norm.hpp"
#include "gainform/model.hpp"
#include "gainform/synthesis.hpp"

namespace gainform {

inline constexpr double kDefaultCareTol = 1e-8;
inline constexpr double kDefaultGammaTol = 1e-6;        // relative
inline constexpr double kDefaultSubspaceCondLimit = 1e10;

/// Stabilizing solution of the level-gamma state-feedback Riccati equation
///   A^T X + X A + X (g^{-2} I - B B^T) X + I = 0,
/// the equation matching the closed-loop map from w to (x, u).
struct CareSolution {
    Eigen::MatrixXd x;
    double residual = 0.0;  // Frobenius norm of the equation residual
    std::vector<std::complex<double>> closed_loop_spectrum;  // eig(A + (g^{-2} I - B B^T) X)
    double gamma = 0.0;
};

namespace detail {

/// Swaps the adjacent diagonal entries T(k,k) and T(k+1,k+1) of a complex
/// Schur form by a unitary similarity, accumulating the rotation into U.
inline void swap_schur_entries(Eigen::MatrixXcd& t, Eigen::MatrixXcd& u, Eigen::Index k) {
    using cd = std::complex<double>;
    const cd alpha = t(k, k + 1);
    const cd beta = t(k + 1, k + 1) - t(k, k);
    if (std::abs(beta) == 0.0) {
        return;  // equal eigenvalues, nothing to move
    }
    // Givens rotation G with G * (alpha, beta)^T = (r, 0)^T; the rotated first
    // basis vector is the eigenvector of the trailing eigenvalue, so the
    // similarity G^H [.] G brings it to the leading position.
    Eigen::JacobiRotation<cd> rot;
    rot.makeGivens(alpha, beta);
    t.applyOnTheLeft(k, k + 1, rot.adjoint());
    t.applyOnTheRight(k, k + 1, rot);
    u.applyOnTheRight(k, k + 1, rot);
    t(k + 1, k) = cd(0.0, 0.0);
}

/// Reorders a complex Schur decomposition so that the num_leading eigenvalues
/// flagged by `select` occupy the leading diagonal positions.
template <typename Pred>
inline void order_schur(Eigen::MatrixXcd& t, Eigen::MatrixXcd& u, Pred select) {
    const Eigen::Index n = t.rows();
    Eigen::Index target = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!select(t(i, i))) {
            continue;
        }
        for (Eigen::Index k = i; k > target; --k) {
            swap_schur_entries(t, u, k - 1);
        }
        ++target;
    }
}

}  // namespace detail

inline CareSolution solve_hinf_care(const LtiSystem& sys, double gamma,
                                    double care_tol = kDefaultCareTol,
                                    double imag_tol = kDefaultImagTol,
                                    double cond_limit = kDefaultSubspaceCondLimit) {
    if (!(gamma > 0)) {
        throw ValidationError("solve_hinf_care: gamma must be > 0");
    }
    const Eigen::Index n = sys.n();
    const Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n, n) / (gamma * gamma) -
                              sys.b() * sys.b().transpose();
    Eigen::MatrixXd h(2 * n, 2 * n);
    h.topLeftCorner(n, n) = sys.a();
    h.topRightCorner(n, n) = s;
    h.bottomLeftCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
    h.bottomRightCorner(n, n) = -sys.a().transpose();

    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(h.cast<std::complex<double>>());
    if (schur.info() != Eigen::Success) {
        throw NumericError("solve_hinf_care: Schur decomposition failed");
    }
    Eigen::MatrixXcd t = schur.matrixT();
    Eigen::MatrixXcd u = schur.matrixU();

    const double axis_threshold = imag_tol * h.norm();
    Eigen::Index stable = 0;
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        const double re = t(i, i).real();
        if (std::abs(re) <= axis_threshold) {
            std::ostringstream os;
            os << "Hamiltonian eigenvalue within " << axis_threshold
               << " of the imaginary axis at gamma = " << gamma
               << "; no stabilizing solution (gamma at or below the optimum)";
            throw NoStabilizingSolution(os.str());
        }
        if (re < 0) {
            ++stable;
        }
    }
    if (stable != n) {
        throw NoStabilizingSolution("Hamiltonian does not split into n stable eigenvalues");
    }

    detail::order_schur(t, u, [](std::complex<double> lam) { return lam.real() < 0.0; });

    const Eigen::MatrixXcd u1 = u.topLeftCorner(n, n);
    const Eigen::MatrixXcd u2 = u.bottomLeftCorner(n, n);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(u1);
    const double smin = svd.singularValues()(n - 1);
    if (!(smin > 0) || svd.singularValues()(0) / smin > cond_limit) {
        throw IllConditionedSubspace("stable invariant subspace basis condition exceeds " +
                                     std::to_string(cond_limit));
    }

    // X = U2 U1^{-1}, real for a real Hamiltonian since the subspace is
    // closed under conjugation.
    Eigen::MatrixXcd xc = u1.transpose()
                              .partialPivLu()
                              .solve(u2.transpose())
                              .transpose();
    Eigen::MatrixXd x = xc.real();
    const double x_scale = std::max(1.0, x.norm());
    if ((x - x.transpose()).norm() > 1e-10 * x_scale) {
        throw NumericError("solve_hinf_care: solution is not symmetric");
    }
    Eigen::MatrixXd x_sym = 0.5 * (x + x.transpose());
    x = std::move(x_sym);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kDefaultPdTol) {
        throw NumericError("solve_hinf_care: stabilizing solution is not positive semidefinite");
    }

    CareSolution sol;
    sol.x = std::move(x);
    sol.gamma = gamma;
    const Eigen::MatrixXd residual_m =
        sys.a().transpose() * sol.x + sol.x * sys.a() + sol.x * s * sol.x +
        Eigen::MatrixXd::Identity(n, n);
    sol.residual = residual_m.norm();
    if (sol.residual > care_tol * (1.0 + sol.x.squaredNorm())) {
        throw NumericError("solve_hinf_care: residual " + std::to_string(sol.residual) +
                           " exceeds tolerance");
    }
    sol.closed_loop_spectrum.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        sol.closed_loop_spectrum.push_back(t(i, i));
    }
    return sol;
}

struct AreSynthesis {
    GainMatrix gain;
    double achieved_gamma = 0.0;  // final feasible level from the bisection
    double report_gamma = 0.0;    // level the returned solution was solved at
    CareSolution solution;
    int probes = 0;
};

/// Central controller by gamma-iteration: bisect the feasibility boundary of
/// the Riccati equation to within gamma_tol, then return L = -B^T X solved at
/// achieved * (1 + 10 * gamma_tol), since the equation degenerates at the
/// exact optimum.
inline AreSynthesis synth_are(const LtiSystem& sys, double gamma_tol = kDefaultGammaTol,
                              double care_tol = kDefaultCareTol,
                              double imag_tol = kDefaultImagTol,
                              double bisect_tol = kDefaultBisectTol) {
    if (!(gamma_tol > 0)) {
        throw ValidationError("synth_are: gamma_tol must be > 0");
    }

    const auto feasible = [&](double gamma) {
        try {
            solve_hinf_care(sys, gamma, care_tol, imag_tol);
            return true;
        } catch (const NoStabilizingSolution&) {
            return false;
        } catch (const IllConditionedSubspace&) {
            // Conditioning collapses only at the boundary; treat as infeasible
            // so the bisection settles marginally above it.
            return false;
        }
    };

    int probes = 0;
    double max_infeasible = 0.0;
    double min_feasible = std::numeric_limits<double>::infinity();
    const auto probe = [&](double gamma) {
        ++probes;
        const bool ok = feasible(gamma);
        if (ok) {
            min_feasible = std::min(min_feasible, gamma);
        } else {
            max_infeasible = std::max(max_infeasible, gamma);
        }
        if (max_infeasible > min_feasible) {
            std::ostringstream os;
            os << "feasibility is not monotone in gamma: feasible at " << min_feasible
               << " but infeasible at " << max_infeasible;
            throw NumericError(os.str());
        }
        return ok;
    };

    // Bracket: marginally below the closed-form optimum (infeasible, since no
    // stabilizing gain goes lower) up to the open-loop norm with L = 0.
    const double gamma_star = optimal_gamma(sys);
    double lower = gamma_star * (1.0 - 1e-3);
    const GainMatrix zero_gain{Eigen::MatrixXd::Zero(sys.m(), sys.n())};
    double upper = hinf_norm_bisect(closed_loop(sys, zero_gain), bisect_tol, imag_tol).upper;
    upper = std::max(upper, lower);

    if (probe(lower)) {
        throw NumericError("synth_are: Riccati equation feasible below the closed-form optimum");
    }
    int expand = 0;
    while (!probe(upper)) {
        upper *= 1.0 + std::max(1e-3, 10.0 * gamma_tol);
        if (++expand > 100) {
            throw NoStabilizingSolution("synth_are: no feasible gamma found above the open-loop norm");
        }
    }

    while (upper - lower > gamma_tol * std::max(1.0, lower)) {
        const double mid = 0.5 * (lower + upper);
        if (probe(mid)) {
            upper = mid;
        } else {
            lower = mid;
        }
        if (probes > 400) {
            throw NoConvergence("synth_are: gamma bisection did not converge");
        }
    }

    AreSynthesis out;
    out.achieved_gamma = upper;
    out.report_gamma = upper * (1.0 + 10.0 * gamma_tol);
    out.solution = solve_hinf_care(sys, out.report_gamma, care_tol, imag_tol);
    out.gain = GainMatrix{-sys.b().transpose() * out.solution.x};
    out.probes = probes;
    return out;
}

}  // namespace gainform
