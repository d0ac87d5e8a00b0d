#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <string>
#include <utility>

#include "gainform/errors.hpp"

namespace gainform {

// Default tolerances. sym_tol is relative to the largest entry of A; the
// stability margin and positive-definiteness floor are absolute.
inline constexpr double kDefaultSymTol = 1e-9;
inline constexpr double kDefaultStabMargin = 1e-9;
inline constexpr double kDefaultPdTol = 1e-12;

namespace detail {

inline void require_finite(const Eigen::MatrixXd& m, const char* name) {
    if (!m.allFinite()) {
        throw ValidationError(std::string(name) + " contains a non-finite entry");
    }
}

inline double max_real_eigenvalue(const Eigen::MatrixXd& m) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
    return es.eigenvalues().real().maxCoeff();
}

}  // namespace detail

/// Boolean occupancy mask of a matrix: mask(i,j) = |entry| > zero_tol.
struct SparsityPattern {
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask;
    double zero_tol = 0.0;

    friend bool operator==(const SparsityPattern& a, const SparsityPattern& b) {
        return a.mask.rows() == b.mask.rows() && a.mask.cols() == b.mask.cols() &&
               (a.mask == b.mask).all();
    }
};

inline SparsityPattern sparsity_pattern(const Eigen::MatrixXd& m, double zero_tol = 0.0) {
    if (zero_tol < 0) {
        throw ValidationError("sparsity_pattern: zero_tol must be >= 0");
    }
    SparsityPattern p;
    p.zero_tol = zero_tol;
    p.mask = m.array().abs() > zero_tol;
    return p;
}

/// Static state feedback gain u = L x.
struct GainMatrix {
    Eigen::MatrixXd l;

    Eigen::Index inputs() const { return l.rows(); }
    Eigen::Index states() const { return l.cols(); }
    SparsityPattern sparsity(double zero_tol = 0.0) const { return sparsity_pattern(l, zero_tol); }
};

/// Plant dx = A x + B u + w with A symmetric and Hurwitz. Construct through
/// validate_system; the stored A is exactly symmetric (symmetrized copy).
class LtiSystem {
public:
    const Eigen::MatrixXd& a() const { return a_; }
    const Eigen::MatrixXd& b() const { return b_; }
    Eigen::Index n() const { return a_.rows(); }
    Eigen::Index m() const { return b_.cols(); }
    double sym_tol() const { return sym_tol_; }
    double stab_margin() const { return stab_margin_; }

private:
    LtiSystem(Eigen::MatrixXd a, Eigen::MatrixXd b, double sym_tol, double stab_margin)
        : a_(std::move(a)), b_(std::move(b)), sym_tol_(sym_tol), stab_margin_(stab_margin) {}

    friend LtiSystem validate_system(const Eigen::MatrixXd&, const Eigen::MatrixXd&, double,
                                     double);

    Eigen::MatrixXd a_;
    Eigen::MatrixXd b_;
    double sym_tol_;
    double stab_margin_;
};

/// Checks the standing assumptions (A square and symmetric within sym_tol,
/// every eigenvalue real part <= -stab_margin, B row-conformant) and returns
/// the system with A replaced by its exactly symmetric part (A + A^T)/2.
inline LtiSystem validate_system(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                 double sym_tol = kDefaultSymTol,
                                 double stab_margin = kDefaultStabMargin) {
    if (sym_tol <= 0 || stab_margin <= 0) {
        throw ValidationError("validate_system: tolerances must be > 0");
    }
    if (a.rows() != a.cols()) {
        std::ostringstream os;
        os << "state matrix must be square, got " << a.rows() << "x" << a.cols();
        throw DimensionMismatch(os.str());
    }
    if (a.rows() == 0) {
        throw DimensionMismatch("state matrix must be non-empty");
    }
    if (b.rows() != a.rows()) {
        std::ostringstream os;
        os << "input matrix has " << b.rows() << " rows, expected " << a.rows();
        throw DimensionMismatch(os.str());
    }
    detail::require_finite(a, "state matrix");
    detail::require_finite(b, "input matrix");

    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    if (asym > sym_tol * scale) {
        std::ostringstream os;
        os << "state matrix asymmetry " << asym << " exceeds " << sym_tol * scale
           << " (sym_tol " << sym_tol << " relative to max entry " << scale << ")";
        throw NotSymmetric(os.str());
    }

    // Hurwitz check on the raw input, before committing the symmetrization.
    const double max_re = detail::max_real_eigenvalue(a);
    if (max_re > -stab_margin) {
        std::ostringstream os;
        os << "state matrix has an eigenvalue with real part " << max_re
           << " > -stab_margin (" << -stab_margin << ")";
        throw NotHurwitz(os.str());
    }

    Eigen::MatrixXd a_sym = 0.5 * (a + a.transpose());
    return LtiSystem(std::move(a_sym), b, sym_tol, stab_margin);
}

/// Positive definite cost weights Q = C^T C on the state and R = D^T D on the
/// input. Construct through make_cost_weights.
class CostWeights {
public:
    const Eigen::MatrixXd& q() const { return q_; }
    const Eigen::MatrixXd& r() const { return r_; }
    double pd_tol() const { return pd_tol_; }

    /// Admissibility for the weighted law: -A Q^{-1} symmetric (within
    /// sym_tol, relative) and positive definite.
    bool admissible(const Eigen::MatrixXd& a, double sym_tol = kDefaultSymTol) const {
        Eigen::MatrixXd w = -a * q_.llt().solve(Eigen::MatrixXd::Identity(q_.rows(), q_.cols()));
        const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
        if ((w - w.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale) {
            return false;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (w + w.transpose()));
        return es.eigenvalues().minCoeff() >= pd_tol_;
    }

private:
    CostWeights(Eigen::MatrixXd q, Eigen::MatrixXd r, double pd_tol)
        : q_(std::move(q)), r_(std::move(r)), pd_tol_(pd_tol) {}

    friend CostWeights make_cost_weights(const Eigen::MatrixXd&, const Eigen::MatrixXd&, double);

    Eigen::MatrixXd q_;
    Eigen::MatrixXd r_;
    double pd_tol_;
};

inline CostWeights make_cost_weights(const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                                     double pd_tol = kDefaultPdTol) {
    if (q.rows() != q.cols() || r.rows() != r.cols()) {
        throw DimensionMismatch("cost weights must be square");
    }
    detail::require_finite(q, "state weight");
    detail::require_finite(r, "input weight");
    auto check_pd = [pd_tol](const Eigen::MatrixXd& m, const char* name) {
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > kDefaultSymTol * scale) {
            throw NotSymmetric(std::string(name) + " weight must be symmetric");
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
        if (es.eigenvalues().minCoeff() < pd_tol) {
            throw InadmissibleWeights(std::string(name) +
                                      " weight is not positive definite (min eigenvalue " +
                                      std::to_string(es.eigenvalues().minCoeff()) + ")");
        }
    };
    check_pd(q, "state");
    check_pd(r, "input");
    return CostWeights(0.5 * (q + q.transpose()), 0.5 * (r + r.transpose()), pd_tol);
}

/// Generic realization dx = A x + B u, y = C x + D u.
struct StateSpace {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    Eigen::MatrixXd c;
    Eigen::MatrixXd d;

    StateSpace(Eigen::MatrixXd a_in, Eigen::MatrixXd b_in, Eigen::MatrixXd c_in,
               Eigen::MatrixXd d_in)
        : a(std::move(a_in)), b(std::move(b_in)), c(std::move(c_in)), d(std::move(d_in)) {
        if (a.rows() != a.cols()) {
            throw DimensionMismatch("state-space A must be square");
        }
        if (b.rows() != a.rows()) {
            throw DimensionMismatch("state-space B row count must match A");
        }
        if (c.cols() != a.cols()) {
            throw DimensionMismatch("state-space C column count must match A");
        }
        if (d.rows() != c.rows() || d.cols() != b.cols()) {
            throw DimensionMismatch("state-space D must be outputs x inputs");
        }
        detail::require_finite(a, "A");
        detail::require_finite(b, "B");
        detail::require_finite(c, "C");
        detail::require_finite(d, "D");
    }

    Eigen::Index states() const { return a.rows(); }
    Eigen::Index inputs() const { return b.cols(); }
    Eigen::Index outputs() const { return c.rows(); }
};

/// True iff every column holds exactly one +1, exactly one -1 and zeros
/// elsewhere (node-link incidence matrix of a directed graph).
inline bool is_incidence_matrix(const Eigen::MatrixXd& b) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
        int plus = 0;
        int minus = 0;
        for (Eigen::Index i = 0; i < b.rows(); ++i) {
            const double v = b(i, j);
            if (v == 1.0) {
                ++plus;
            } else if (v == -1.0) {
                ++minus;
            } else if (v != 0.0) {
                return false;
            }
        }
        if (plus != 1 || minus != 1) {
            return false;
        }
    }
    return true;
}

}  // namespace gainform
