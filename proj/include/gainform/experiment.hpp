#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "gainform/errors.hpp"
#include "gainform/hinf_norm.hpp"
#include "gainform/model.hpp"
#include "gainform/riccati.hpp"
#include "gainform/simulate.hpp"
#include "gainform/synthesis.hpp"

namespace gainform {

/// Randomized comparison of the closed-form law against the Riccati-iteration
/// controller on the three-state buffer family
///   A = -diag(a1, a2, a3),  B = [[-b1, 0, 0], [b2, b3, -b4], [0, 0, b5]]
/// with all parameters drawn uniformly from (param_low, param_high].
struct ExperimentConfig {
    int num_systems = 50;
    double param_low = 0.1;
    double param_high = 5.0;
    std::uint64_t seed = 42;
    double horizon = kDefaultHorizon;
    double dt = kDefaultDt;

    void validate() const {
        if (num_systems < 1) {
            throw ValidationError("experiment: num_systems must be >= 1");
        }
        if (!(param_low > 0) || !(param_high > param_low)) {
            throw ValidationError("experiment: need 0 < param_low < param_high");
        }
        if (!(dt > 0) || !(horizon > 0)) {
            throw ValidationError("experiment: need dt > 0 and horizon > 0");
        }
    }
};

namespace detail {

/// splitmix64; the per-draw stream seeds deterministically from (seed, draw),
/// so results do not depend on evaluation order.
class DrawRng {
public:
    DrawRng(std::uint64_t seed, std::uint64_t draw)
        : state_(seed ^ ((draw + 1) * 0x9E3779B97F4A7C15ULL)) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform draw from (low, high].
    double uniform(double low, double high) {
        const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;  // [0, 1)
        return high - u * (high - low);
    }

private:
    std::uint64_t state_;
};

}  // namespace detail

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<double> times;

    // Averaged |x_state(t)|, indexed [mode][controller][state], where modes
    // are the unit disturbances w1, w2, w3 followed by the all-ones
    // disturbance, and controllers are {formula, riccati}.
    static constexpr int kModes = 4;
    static constexpr int kControllers = 2;
    static constexpr int kStates = 3;
    std::vector<double> average_abs[kModes][kControllers][kStates];

    // Per accepted draw: closed-loop norms of the two controllers.
    std::vector<std::pair<double, double>> norms;

    std::vector<std::pair<int, std::string>> failed_draws;

    static const char* mode_name(int mode) {
        static const char* names[kModes] = {"w1", "w2", "w3", "wall"};
        return names[mode];
    }
    static const char* controller_name(int ctrl) { return ctrl == 0 ? "formula" : "riccati"; }
};

inline ExperimentResult run_comparison_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult result;
    result.config = cfg;

    const auto steps = static_cast<Eigen::Index>(std::llround(cfg.horizon / cfg.dt));
    result.times.resize(static_cast<std::size_t>(steps) + 1);
    for (Eigen::Index k = 0; k <= steps; ++k) {
        result.times[static_cast<std::size_t>(k)] = static_cast<double>(k) * cfg.dt;
    }
    for (auto& mode : result.average_abs) {
        for (auto& ctrl : mode) {
            for (auto& state : ctrl) {
                state.assign(result.times.size(), 0.0);
            }
        }
    }

    int accepted = 0;
    for (int draw = 0; draw < cfg.num_systems; ++draw) {
        try {
            detail::DrawRng rng(cfg.seed, static_cast<std::uint64_t>(draw));
            double a[3];
            double b[5];
            for (double& v : a) v = rng.uniform(cfg.param_low, cfg.param_high);
            for (double& v : b) v = rng.uniform(cfg.param_low, cfg.param_high);

            Eigen::Matrix3d a_mat = Eigen::Matrix3d::Zero();
            a_mat.diagonal() << -a[0], -a[1], -a[2];
            Eigen::Matrix3d b_mat;
            b_mat << -b[0], 0, 0, b[1], b[2], -b[3], 0, 0, b[4];
            const LtiSystem sys = validate_system(a_mat, b_mat);

            const GainMatrix l_formula = synth_optimal(sys);
            const GainMatrix l_riccati = synth_are(sys).gain;
            const StateSpace loops[2] = {closed_loop(sys, l_formula),
                                         closed_loop(sys, l_riccati)};
            result.norms.emplace_back(hinf_norm_bisect(loops[0]).gamma,
                                      hinf_norm_bisect(loops[1]).gamma);

            for (int mode = 0; mode < ExperimentResult::kModes; ++mode) {
                Eigen::Vector3d w = Eigen::Vector3d::Zero();
                if (mode < 3) {
                    w(mode) = 1.0;
                } else {
                    w.setOnes();
                }
                for (int ctrl = 0; ctrl < ExperimentResult::kControllers; ++ctrl) {
                    const Trajectory traj =
                        step_response(loops[ctrl], w, cfg.horizon, cfg.dt);
                    for (int state = 0; state < ExperimentResult::kStates; ++state) {
                        auto& acc = result.average_abs[mode][ctrl][state];
                        for (std::size_t k = 0; k < acc.size(); ++k) {
                            acc[k] += std::abs(traj.states(static_cast<Eigen::Index>(k), state));
                        }
                    }
                }
            }
            ++accepted;
        } catch (const Error& e) {
            result.failed_draws.emplace_back(draw, e.what());
        }
    }

    if (accepted > 0) {
        for (auto& mode : result.average_abs) {
            for (auto& ctrl : mode) {
                for (auto& state : ctrl) {
                    for (double& v : state) v /= accepted;
                }
            }
        }
    }
    return result;
}

/// Plot-ready CSV: header row, then one row per time sample with the averaged
/// |x_i| columns for every (mode, controller, state) combination.
inline void write_experiment_csv(std::ostream& os, const ExperimentResult& result) {
    os << "# seed=" << result.config.seed << " num_systems=" << result.config.num_systems
       << " param_low=" << result.config.param_low
       << " param_high=" << result.config.param_high << " horizon=" << result.config.horizon
       << " dt=" << result.config.dt << " failed_draws=" << result.failed_draws.size() << "\n";
    os << "time";
    for (int mode = 0; mode < ExperimentResult::kModes; ++mode) {
        for (int ctrl = 0; ctrl < ExperimentResult::kControllers; ++ctrl) {
            for (int state = 0; state < ExperimentResult::kStates; ++state) {
                os << ',' << ExperimentResult::mode_name(mode) << '.'
                   << ExperimentResult::controller_name(ctrl) << ".x" << (state + 1);
            }
        }
    }
    os << '\n';
    char buf[32];
    for (std::size_t k = 0; k < result.times.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.12g", result.times[k]);
        os << buf;
        for (const auto& mode : result.average_abs) {
            for (const auto& ctrl : mode) {
                for (const auto& state : ctrl) {
                    std::snprintf(buf, sizeof buf, "%.12g", state[k]);
                    os << ',' << buf;
                }
            }
        }
        os << '\n';
    }
}

}  // namespace gainform
