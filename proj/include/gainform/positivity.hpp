#pragma once

#include <Eigen/Dense>

#include <optional>
#include <sstream>
#include <utility>

#include "gainform/errors.hpp"
#include "gainform/hinf_norm.hpp"
#include "gainform/model.hpp"
#include "gainform/synthesis.hpp"

namespace gainform {

inline constexpr double kDefaultSignTol = 1e-12;  // absolute

/// Location and value of the worst sign-condition violation.
struct EntryWitness {
    enum class Matrix { A, B, C, D };
    Matrix where = Matrix::A;
    Eigen::Index row = 0;
    Eigen::Index col = 0;
    double value = 0.0;
};

struct MetzlerReport {
    bool metzler = true;
    std::optional<EntryWitness> witness;  // most negative off-diagonal entry
};

/// A matrix is Metzler when every off-diagonal entry is >= -tol.
inline MetzlerReport is_metzler(const Eigen::MatrixXd& m, double tol = kDefaultSignTol) {
    if (m.rows() != m.cols()) {
        throw DimensionMismatch("is_metzler: matrix must be square");
    }
    MetzlerReport report;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (i == j) continue;
            if (m(i, j) < -tol && m(i, j) < worst) {
                worst = m(i, j);
                report.metzler = false;
                report.witness = EntryWitness{EntryWitness::Matrix::A, i, j, worst};
            }
        }
    }
    return report;
}

struct PositivityCertificate {
    bool metzler_a = false;
    bool nonneg_b = false;
    bool nonneg_c = false;
    bool nonneg_d = false;
    bool verdict = false;
    std::optional<EntryWitness> witness;  // worst violating entry across all checks
};

namespace detail {

inline std::pair<bool, std::optional<EntryWitness>> nonneg_check(
    const Eigen::MatrixXd& m, EntryWitness::Matrix tag, double tol) {
    std::optional<EntryWitness> witness;
    double worst = -tol;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (m(i, j) < worst) {
                worst = m(i, j);
                witness = EntryWitness{tag, i, j, worst};
            }
        }
    }
    return {!witness.has_value(), witness};
}

}  // namespace detail

/// Internal positivity certificate: A Metzler and B, C, D entrywise
/// nonnegative. When the verdict is true, trajectories from nonnegative
/// inputs and initial states stay nonnegative.
inline PositivityCertificate internal_positivity(const StateSpace& ss,
                                                 double tol = kDefaultSignTol) {
    PositivityCertificate cert;
    const MetzlerReport a_report = is_metzler(ss.a, tol);
    cert.metzler_a = a_report.metzler;
    auto [b_ok, b_wit] = detail::nonneg_check(ss.b, EntryWitness::Matrix::B, tol);
    auto [c_ok, c_wit] = detail::nonneg_check(ss.c, EntryWitness::Matrix::C, tol);
    auto [d_ok, d_wit] = detail::nonneg_check(ss.d, EntryWitness::Matrix::D, tol);
    cert.nonneg_b = b_ok;
    cert.nonneg_c = c_ok;
    cert.nonneg_d = d_ok;
    cert.verdict = cert.metzler_a && b_ok && c_ok && d_ok;

    double worst = 0.0;
    auto consider = [&](const std::optional<EntryWitness>& w) {
        if (w && w->value < worst) {
            worst = w->value;
            cert.witness = w;
        }
    };
    consider(a_report.witness);
    consider(b_wit);
    consider(c_wit);
    consider(d_wit);
    return cert;
}

/// Closed loop from the disturbance to the state (output y = x) under u = L x.
inline StateSpace state_map_closed_loop(const LtiSystem& sys, const GainMatrix& gain) {
    if (gain.l.rows() != sys.m() || gain.l.cols() != sys.n()) {
        throw DimensionMismatch("gain does not match the plant");
    }
    const Eigen::Index n = sys.n();
    return StateSpace(sys.a() + sys.b() * gain.l, Eigen::MatrixXd::Identity(n, n),
                      Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Zero(n, n));
}

/// For diagonal Hurwitz A, the closed loop under the optimal law is Metzler
/// exactly when -B B^T is Metzler. Both sides of the equivalence are computed
/// and must agree.
inline bool closed_loop_positivity_condition(const LtiSystem& sys,
                                             double tol = kDefaultSignTol) {
    Eigen::MatrixXd off = sys.a();
    off.diagonal().setZero();
    if (off.cwiseAbs().maxCoeff() > tol) {
        throw NotDiagonalA("closed_loop_positivity_condition requires a diagonal state matrix");
    }
    const bool via_bbt = is_metzler(-sys.b() * sys.b().transpose(), tol).metzler;
    const GainMatrix l = synth_optimal(sys);
    const bool via_loop = is_metzler(sys.a() + sys.b() * l.l, tol).metzler;
    if (via_bbt != via_loop) {
        std::ostringstream os;
        os << "positivity equivalence check failed: -BB^T Metzler = " << via_bbt
           << " but A + B L Metzler = " << via_loop;
        throw NumericError(os.str());
    }
    return via_bbt;
}

}  // namespace gainform
