#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "gainform/errors.hpp"
#include "gainform/model.hpp"

namespace gainform {

inline constexpr double kDefaultCondLimit = 1e12;

namespace detail {

/// Solves X = M A^{-1} as a partial-pivot linear solve against A^T
/// (X^T = A^{-T} M^T), failing loudly when A is numerically singular.
inline Eigen::MatrixXd right_divide(const Eigen::MatrixXd& m, const Eigen::MatrixXd& a,
                                    double cond_limit) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a.transpose());
    const double rcond = lu.rcond();
    if (!(rcond > 0) || 1.0 / rcond > cond_limit) {
        std::ostringstream os;
        os << "state matrix condition estimate " << (rcond > 0 ? 1.0 / rcond : INFINITY)
           << " exceeds limit " << cond_limit;
        throw SingularStateMatrix(os.str());
    }
    return lu.solve(m.transpose()).transpose();
}

}  // namespace detail

/// Optimal static state feedback L = B^T A^{-1} for performance output (x, u).
inline GainMatrix synth_optimal(const LtiSystem& sys, double cond_limit = kDefaultCondLimit) {
    return GainMatrix{detail::right_divide(sys.b().transpose(), sys.a(), cond_limit)};
}

/// The minimum achievable closed-loop gain sqrt(||(A^2 + B B^T)^{-1}||),
/// evaluated as 1/sqrt(lambda_min(A^2 + B B^T)) for conditioning.
inline double optimal_gamma(const LtiSystem& sys) {
    Eigen::MatrixXd m = sys.a() * sys.a() + sys.b() * sys.b().transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                      Eigen::EigenvaluesOnly);
    const double lam_min = es.eigenvalues().minCoeff();
    if (!(lam_min > 0)) {
        throw NumericError("A^2 + B B^T is not positive definite (lambda_min " +
                           std::to_string(lam_min) + ")");
    }
    return 1.0 / std::sqrt(lam_min);
}

/// True iff -A^2 - B B^T + gamma^{-2} I is negative definite, i.e. the level
/// gamma is strictly achievable by some stabilizing state feedback.
inline bool gamma_strictly_feasible(const LtiSystem& sys, double gamma, double tol = 1e-10) {
    if (!(gamma > 0)) {
        throw ValidationError("gamma must be > 0");
    }
    Eigen::MatrixXd m = -sys.a() * sys.a() - sys.b() * sys.b().transpose();
    m.diagonal().array() += 1.0 / (gamma * gamma);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff() < -tol;
}

/// Weighted law L = R^{-1} B^T Q A^{-1} for performance output (Cx, Du) with
/// Q = C^T C and R = D^T D. Requires -A Q^{-1} symmetric positive definite.
/// Exact identity weights take the unweighted path, so Q = I, R = I
/// reproduces synth_optimal bit for bit.
inline GainMatrix synth_weighted(const LtiSystem& sys, const CostWeights& w,
                                 double cond_limit = kDefaultCondLimit) {
    if (w.q().rows() != sys.n() || w.r().rows() != sys.m()) {
        throw DimensionMismatch("cost weights do not match the plant dimensions");
    }
    if (w.q().isIdentity(0.0) && w.r().isIdentity(0.0)) {
        return synth_optimal(sys, cond_limit);
    }
    if (!w.admissible(sys.a(), sys.sym_tol())) {
        throw InadmissibleWeights("-A Q^{-1} is not symmetric positive definite");
    }
    const Eigen::MatrixXd qa_inv = detail::right_divide(w.q(), sys.a(), cond_limit);
    return GainMatrix{w.r().llt().solve(sys.b().transpose() * qa_inv)};
}

/// Subsystems dx_i = A_i x_i + B_i u_i + w_i whose equally wide inputs u_i
/// must sum to zero. Construct through make_coordinated_plant.
class CoordinatedPlant {
public:
    const std::vector<LtiSystem>& blocks() const { return blocks_; }
    std::size_t nu() const { return blocks_.size(); }
    Eigen::Index input_width() const { return blocks_.front().m(); }
    Eigen::Index total_states() const {
        Eigen::Index n = 0;
        for (const LtiSystem& s : blocks_) n += s.n();
        return n;
    }

private:
    explicit CoordinatedPlant(std::vector<LtiSystem> blocks) : blocks_(std::move(blocks)) {}

    friend CoordinatedPlant make_coordinated_plant(
        const std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>>&, double, double);

    std::vector<LtiSystem> blocks_;
};

inline CoordinatedPlant make_coordinated_plant(
    const std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>>& blocks,
    double sym_tol = kDefaultSymTol, double stab_margin = kDefaultStabMargin) {
    if (blocks.size() < 2) {
        throw ValidationError("a coordinated plant needs at least two subsystems");
    }
    std::vector<LtiSystem> validated;
    validated.reserve(blocks.size());
    for (const auto& [a, b] : blocks) {
        validated.push_back(validate_system(a, b, sym_tol, stab_margin));
    }
    const Eigen::Index m = validated.front().m();
    for (std::size_t i = 1; i < validated.size(); ++i) {
        if (validated[i].m() != m) {
            std::ostringstream os;
            os << "subsystem " << i << " has input width " << validated[i].m() << ", expected "
               << m;
            throw IncompatibleInputWidths(os.str());
        }
    }
    return CoordinatedPlant(std::move(validated));
}

/// Coordinated law u_i = G_i x_i - (1/nu) sum_k G_k x_k with G_i = B_i^T A_i^{-1}.
/// local_terms holds the G_i; global_terms holds G_k / nu (the shared term).
struct CoordinatedGain {
    std::vector<Eigen::MatrixXd> local_terms;
    std::vector<Eigen::MatrixXd> global_terms;

    std::size_t nu() const { return local_terms.size(); }
    Eigen::Index input_width() const { return local_terms.front().rows(); }

    Eigen::Index total_states() const {
        Eigen::Index n = 0;
        for (const Eigen::MatrixXd& g : local_terms) n += g.cols();
        return n;
    }

    /// Full-state gain row block for u_i: delta_{ik} G_i - G_k / nu.
    Eigen::MatrixXd block_gain(std::size_t i) const {
        const Eigen::Index m = input_width();
        Eigen::MatrixXd row(m, total_states());
        Eigen::Index col = 0;
        for (std::size_t k = 0; k < nu(); ++k) {
            const Eigen::Index nk = local_terms[k].cols();
            row.middleCols(col, nk) = -global_terms[k];
            if (k == i) {
                row.middleCols(col, nk) += local_terms[i];
            }
            col += nk;
        }
        return row;
    }

    /// Stacked (m * nu) x (sum n_k) gain mapping the full state to (u_1, ..., u_nu).
    Eigen::MatrixXd stacked() const {
        const Eigen::Index m = input_width();
        Eigen::MatrixXd full(m * static_cast<Eigen::Index>(nu()), total_states());
        for (std::size_t i = 0; i < nu(); ++i) {
            full.middleRows(static_cast<Eigen::Index>(i) * m, m) = block_gain(i);
        }
        return full;
    }
};

inline CoordinatedGain synth_coordinated(const CoordinatedPlant& plant,
                                         double cond_limit = kDefaultCondLimit) {
    CoordinatedGain gain;
    const double nu = static_cast<double>(plant.nu());
    for (const LtiSystem& blk : plant.blocks()) {
        Eigen::MatrixXd g = detail::right_divide(blk.b().transpose(), blk.a(), cond_limit);
        gain.global_terms.push_back(g / nu);
        gain.local_terms.push_back(std::move(g));
    }

    // The constraint sum_i u_i = 0 must hold identically; verify on the
    // stacked gain before handing it out.
    const Eigen::Index m = gain.input_width();
    Eigen::MatrixXd row_sum = Eigen::MatrixXd::Zero(m, gain.total_states());
    for (std::size_t i = 0; i < plant.nu(); ++i) {
        row_sum += gain.block_gain(i);
    }
    if (row_sum.cwiseAbs().maxCoeff() > 1e-12) {
        throw NumericError("coordinated gain rows do not sum to zero (max " +
                           std::to_string(row_sum.cwiseAbs().maxCoeff()) + ")");
    }
    return gain;
}

/// Equivalent unconstrained problem for a coordinated plant: block-diagonal
/// state matrix, input matrix B D with D = [-1^T_{nu-1}; I_{nu-1}] (Kronecker
/// with I_m for vector inputs), and weights Q = I, R = D^T D = I + 1 1^T.
struct ReducedCoordination {
    LtiSystem system;
    CostWeights weights;
    Eigen::MatrixXd basis;  // D, mapping the reduced input to (u_1, ..., u_nu)
};

inline ReducedCoordination reduce_coordination(const CoordinatedPlant& plant) {
    const Eigen::Index m = plant.input_width();
    const Eigen::Index n = plant.total_states();
    const Eigen::Index nu = static_cast<Eigen::Index>(plant.nu());

    Eigen::MatrixXd a_blk = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd b_blk = Eigen::MatrixXd::Zero(n, m * nu);
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < nu; ++i) {
        const LtiSystem& blk = plant.blocks()[static_cast<std::size_t>(i)];
        a_blk.block(row, row, blk.n(), blk.n()) = blk.a();
        b_blk.block(row, i * m, blk.n(), m) = blk.b();
        row += blk.n();
    }

    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(m * nu, m * (nu - 1));
    basis.topRows(m) = -Eigen::MatrixXd::Identity(m, m).replicate(1, nu - 1);
    basis.bottomRows(m * (nu - 1)) = Eigen::MatrixXd::Identity(m * (nu - 1), m * (nu - 1));

    Eigen::MatrixXd r = basis.transpose() * basis;
    LtiSystem reduced = validate_system(a_blk, b_blk * basis, plant.blocks().front().sym_tol(),
                                        plant.blocks().front().stab_margin());
    return ReducedCoordination{std::move(reduced),
                               make_cost_weights(Eigen::MatrixXd::Identity(n, n), std::move(r)),
                               std::move(basis)};
}

/// Coordinated stacked gain obtained through the reduction: solve the
/// weighted problem for u_tilde and map back through u = D u_tilde.
inline Eigen::MatrixXd coordinated_gain_via_reduction(const CoordinatedPlant& plant,
                                                      double cond_limit = kDefaultCondLimit) {
    const ReducedCoordination red = reduce_coordination(plant);
    const GainMatrix reduced_gain = synth_weighted(red.system, red.weights, cond_limit);
    return red.basis * reduced_gain.l;
}

}  // namespace gainform
