// Command-line front end: synthesis, norm verification, coordination,
// positivity certificates, simulation and the randomized comparison table.
//
// Exit codes: 0 success, 2 validation/input error, 3 numeric failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gainform/gainform.hpp"

namespace {

using gainform::detail::fnv1a64;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// Ordered key/value report, printable as text or JSON.
class Report {
public:
    explicit Report(std::string command) { add("command", std::move(command)); }

    void add(const std::string& key, const std::string& value) {
        lines_.emplace_back(key, value);
        json_[key] = value;
    }
    void add(const std::string& key, const char* value) { add(key, std::string(value)); }
    void add(const std::string& key, double value) {
        lines_.emplace_back(key, fmt17(value));
        json_[key] = value;
    }
    void add(const std::string& key, bool value) {
        lines_.emplace_back(key, value ? "true" : "false");
        json_[key] = value;
    }
    void add(const std::string& key, long long value) {
        lines_.emplace_back(key, std::to_string(value));
        json_[key] = value;
    }
    void add_matrix(const std::string& key, const Eigen::MatrixXd& m) {
        std::string text;
        gainform::detail::append_matrix_json(text, m);
        lines_.emplace_back(key, text);
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            nlohmann::ordered_json row = nlohmann::ordered_json::array();
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                row.push_back(m(i, j));
            }
            rows.push_back(row);
        }
        json_[key] = rows;
    }
    void add_input(const std::string& role, const std::string& path) {
        std::ostringstream os;
        os << path << " (fnv1a64 " << std::hex << fnv1a64(gainform::detail::read_file(path))
           << ")";
        add("input." + role, os.str());
    }

    void print(bool as_json, std::ostream& os = std::cout) const {
        if (as_json) {
            os << json_.dump(2) << '\n';
        } else {
            for (const auto& [k, v] : lines_) {
                os << k << " = " << v << '\n';
            }
        }
    }

private:
    std::vector<std::pair<std::string, std::string>> lines_;
    nlohmann::ordered_json json_;
};

struct CommonOpts {
    double sym_tol = gainform::kDefaultSymTol;
    double stab_margin = gainform::kDefaultStabMargin;
    double bisect_tol = gainform::kDefaultBisectTol;
    std::string format = "text";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--sym-tol", opts.sym_tol, "symmetry tolerance, relative to max|A|");
    cmd->add_option("--stab-margin", opts.stab_margin, "Hurwitz stability margin");
    cmd->add_option("--tol", opts.bisect_tol, "relative norm-bisection tolerance");
    cmd->add_option("--format", opts.format, "report format")
        ->check(CLI::IsMember({"text", "json"}));
}

void echo_tolerances(Report& report, const CommonOpts& opts) {
    report.add("tol.sym_tol", opts.sym_tol);
    report.add("tol.stab_margin", opts.stab_margin);
    report.add("tol.bisect_tol", opts.bisect_tol);
}

void write_trajectory_csv(std::ostream& os, const gainform::Trajectory& traj) {
    os << "time";
    for (Eigen::Index i = 0; i < traj.states.cols(); ++i) {
        os << ",x" << (i + 1);
    }
    for (Eigen::Index i = 0; i < traj.inputs.cols(); ++i) {
        os << ",u" << (i + 1);
    }
    os << '\n';
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        os << fmt(traj.times[k]);
        const auto row = static_cast<Eigen::Index>(k);
        for (Eigen::Index i = 0; i < traj.states.cols(); ++i) {
            os << ',' << fmt(traj.states(row, i));
        }
        for (Eigen::Index i = 0; i < traj.inputs.cols(); ++i) {
            os << ',' << fmt(traj.inputs(row, i));
        }
        os << '\n';
    }
}

Eigen::VectorXd parse_disturbance(const std::string& text, Eigen::Index expected) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            values.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw gainform::ParseError("cannot parse disturbance entry \"" + item + "\"");
        }
    }
    if (static_cast<Eigen::Index>(values.size()) != expected) {
        throw gainform::DimensionMismatch("disturbance must have " + std::to_string(expected) +
                                          " entries");
    }
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

gainform::ExperimentConfig load_experiment_config(const std::string& path) {
    const nlohmann::json j =
        gainform::detail::parse_json(gainform::detail::read_file(path), path);
    gainform::ExperimentConfig cfg;
    if (j.contains("num_systems")) cfg.num_systems = j.at("num_systems").get<int>();
    if (j.contains("param_low")) cfg.param_low = j.at("param_low").get<double>();
    if (j.contains("param_high")) cfg.param_high = j.at("param_high").get<double>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("horizon")) cfg.horizon = j.at("horizon").get<double>();
    if (j.contains("dt")) cfg.dt = j.at("dt").get<double>();
    cfg.validate();
    return cfg;
}

int run(int argc, char** argv) {
    CLI::App app{"closed-form H-infinity state feedback synthesis and verification"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "synthesize the optimal state feedback gain");
    std::string synth_system;
    std::string synth_weights;
    std::string synth_out;
    double cond_limit = gainform::kDefaultCondLimit;
    CommonOpts synth_opts;
    synth->add_option("system", synth_system, "system JSON file")->required();
    synth->add_option("--weights", synth_weights, "cost weights JSON file {\"q\":..,\"r\":..}");
    synth->add_option("--out", synth_out, "write the gain to this JSON file");
    synth->add_option("--cond-limit", cond_limit, "condition-number guard for the state matrix");
    add_common(synth, synth_opts);

    // ---- norm ----
    auto* norm = app.add_subcommand("norm", "H-infinity norm of a realization or closed loop");
    std::string norm_ss;
    std::string norm_system;
    std::string norm_gain;
    CommonOpts norm_opts;
    norm->add_option("--ss", norm_ss, "state-space JSON file {\"a\",\"b\",\"c\",\"d\"}");
    norm->add_option("--system", norm_system, "system JSON file (pairs with --gain)");
    norm->add_option("--gain", norm_gain, "gain JSON file (pairs with --system)");
    add_common(norm, norm_opts);

    // ---- verify ----
    auto* verify = app.add_subcommand(
        "verify", "cross-check the closed form against the norm and Riccati oracles");
    std::string verify_system;
    double gamma_tol = gainform::kDefaultGammaTol;
    CommonOpts verify_opts;
    verify->add_option("system", verify_system, "system JSON file")->required();
    verify->add_option("--gamma-tol", gamma_tol, "relative Riccati gamma-iteration tolerance");
    add_common(verify, verify_opts);

    // ---- coord ----
    auto* coord = app.add_subcommand("coord", "coordinated gain for a multi-subsystem plant");
    std::string coord_blocks;
    std::string coord_out;
    CommonOpts coord_opts;
    coord->add_option("blocks", coord_blocks, "coordinated plant JSON file {\"blocks\": [...]}")
        ->required();
    coord->add_option("--out", coord_out, "write the stacked gain to this JSON file");
    add_common(coord, coord_opts);

    // ---- positivity ----
    auto* positivity = app.add_subcommand(
        "positivity", "internal positivity certificate of the disturbance-to-state loop");
    std::string pos_system;
    std::string pos_gain;
    double sign_tol = gainform::kDefaultSignTol;
    CommonOpts pos_opts;
    positivity->add_option("system", pos_system, "system JSON file")->required();
    positivity->add_option("--gain", pos_gain, "gain JSON file (defaults to the optimal gain)");
    positivity->add_option("--sign-tol", sign_tol, "entrywise sign tolerance");
    add_common(positivity, pos_opts);

    // ---- simulate ----
    auto* simulate = app.add_subcommand("simulate", "constant-disturbance step response CSV");
    std::string sim_system;
    std::string sim_gain;
    std::string sim_w;
    std::string sim_out;
    double horizon = gainform::kDefaultHorizon;
    double dt = gainform::kDefaultDt;
    CommonOpts sim_opts;
    simulate->add_option("system", sim_system, "system JSON file")->required();
    simulate->add_option("--gain", sim_gain, "gain JSON file (defaults to the optimal gain)");
    simulate->add_option("--w", sim_w, "comma-separated disturbance vector (default all ones)");
    simulate->add_option("--horizon", horizon, "simulation horizon");
    simulate->add_option("--dt", dt, "sample step");
    simulate->add_option("--out", sim_out, "write the trajectory CSV here (default stdout)");
    add_common(simulate, sim_opts);

    // ---- experiment ----
    auto* experiment = app.add_subcommand(
        "experiment", "randomized formula-vs-Riccati comparison table");
    std::string exp_config;
    std::string exp_out;
    std::optional<std::uint64_t> exp_seed;
    CommonOpts exp_opts;
    experiment->add_option("config", exp_config, "experiment config JSON file")->required();
    experiment->add_option("--out", exp_out, "write the averaged-response CSV here");
    experiment->add_option("--seed", exp_seed, "override the config seed");
    add_common(experiment, exp_opts);

    CLI11_PARSE(app, argc, argv);
    const auto t0 = std::chrono::steady_clock::now();

    if (*synth) {
        Report report("synth");
        report.add_input("system", synth_system);
        const gainform::LtiSystem sys =
            gainform::load_system(synth_system, synth_opts.sym_tol, synth_opts.stab_margin);
        report.add("n", static_cast<long long>(sys.n()));
        report.add("m", static_cast<long long>(sys.m()));
        echo_tolerances(report, synth_opts);
        report.add("tol.cond_limit", cond_limit);

        gainform::GainMatrix gain{Eigen::MatrixXd()};
        if (synth_weights.empty()) {
            gain = gainform::synth_optimal(sys, cond_limit);
            report.add("gamma_optimal", gainform::optimal_gamma(sys));
            report.add("gamma_source", "closed form sqrt(||(A^2+BB^T)^-1||)");
        } else {
            report.add_input("weights", synth_weights);
            const nlohmann::json j = gainform::detail::parse_json(
                gainform::detail::read_file(synth_weights), synth_weights);
            const gainform::CostWeights w =
                gainform::make_cost_weights(gainform::detail::matrix_from_json(j, "q"),
                                            gainform::detail::matrix_from_json(j, "r"));
            gain = gainform::synth_weighted(sys, w, cond_limit);
            const gainform::NormResult nr = gainform::hinf_norm_bisect(
                gainform::weighted_closed_loop(sys, w, gain), synth_opts.bisect_tol);
            report.add("gamma_achieved", nr.gamma);
            report.add("gamma_source", "norm oracle on the weighted closed loop");
        }
        report.add_matrix("gain", gain.l);
        if (!synth_out.empty()) {
            gainform::save_gain(synth_out, gain);
            report.add("gain_file", synth_out);
        }
        report.print(synth_opts.format == "json");
    } else if (*norm) {
        Report report("norm");
        std::optional<gainform::StateSpace> ss;
        if (!norm_ss.empty()) {
            report.add_input("ss", norm_ss);
            ss.emplace(gainform::load_state_space(norm_ss));
        } else if (!norm_system.empty() && !norm_gain.empty()) {
            report.add_input("system", norm_system);
            report.add_input("gain", norm_gain);
            const gainform::LtiSystem sys =
                gainform::load_system(norm_system, norm_opts.sym_tol, norm_opts.stab_margin);
            ss.emplace(gainform::closed_loop(sys, gainform::load_gain(norm_gain)));
        } else {
            throw gainform::ValidationError("norm needs --ss or both --system and --gain");
        }
        echo_tolerances(report, norm_opts);
        const gainform::NormResult nr = gainform::hinf_norm_bisect(*ss, norm_opts.bisect_tol);
        report.add("gamma", nr.gamma);
        report.add("gamma_lower", nr.lower);
        report.add("gamma_upper", nr.upper);
        report.add("peak_frequency", nr.peak_frequency);
        report.add("iterations", static_cast<long long>(nr.iterations));
        report.add("sweep_lower_bound",
                   gainform::freq_sweep_norm(*ss, gainform::log_grid(1e-3, 1e3, 200)));
        report.print(norm_opts.format == "json");
    } else if (*verify) {
        Report report("verify");
        report.add_input("system", verify_system);
        const gainform::LtiSystem sys =
            gainform::load_system(verify_system, verify_opts.sym_tol, verify_opts.stab_margin);
        echo_tolerances(report, verify_opts);
        report.add("tol.gamma_tol", gamma_tol);

        const double g_formula = gainform::optimal_gamma(sys);
        const gainform::GainMatrix l_star = gainform::synth_optimal(sys);
        const gainform::NormResult nr =
            gainform::hinf_norm_bisect(gainform::closed_loop(sys, l_star),
                                       verify_opts.bisect_tol);
        const gainform::AreSynthesis are = gainform::synth_are(sys, gamma_tol);

        report.add("gamma_formula", g_formula);
        report.add("gamma_bisection", nr.gamma);
        report.add("gamma_riccati", are.achieved_gamma);
        const double diff_bisect = std::abs(g_formula - nr.gamma);
        const double diff_are = std::abs(g_formula - are.achieved_gamma);
        report.add("abs_diff_bisection", diff_bisect);
        report.add("abs_diff_riccati", diff_are);

        // Storage-function certificate: the Riccati solution marginally above
        // the optimum must make the bounded-real LMI negative semidefinite.
        const double lmi_max = gainform::bounded_real_lmi_max_eig(
            gainform::closed_loop(sys, are.gain), are.report_gamma, are.solution.x);
        report.add("lmi_max_eigenvalue", lmi_max);

        const bool ok_bisect =
            diff_bisect <= std::max(1e-6, 1e-6 * g_formula) + 2 * verify_opts.bisect_tol;
        const bool ok_are = diff_are <= std::max(1e-4, 1e-4 * g_formula);
        const bool ok_lmi = lmi_max <= 1e-8;
        report.add("agreement", ok_bisect && ok_are && ok_lmi);
        report.print(verify_opts.format == "json");
        if (!(ok_bisect && ok_are && ok_lmi)) {
            std::cerr << "error: oracle disagreement beyond tolerance\n";
            return 3;
        }
    } else if (*coord) {
        Report report("coord");
        report.add_input("blocks", coord_blocks);
        const gainform::CoordinatedPlant plant = gainform::make_coordinated_plant(
            gainform::load_coordinated_blocks(coord_blocks), coord_opts.sym_tol,
            coord_opts.stab_margin);
        echo_tolerances(report, coord_opts);
        const gainform::CoordinatedGain gain = gainform::synth_coordinated(plant);
        const Eigen::MatrixXd stacked = gain.stacked();
        const Eigen::MatrixXd reduced = gainform::coordinated_gain_via_reduction(plant);

        report.add("nu", static_cast<long long>(plant.nu()));
        report.add("input_width", static_cast<long long>(plant.input_width()));
        report.add("total_states", static_cast<long long>(plant.total_states()));
        Eigen::MatrixXd row_sum = Eigen::MatrixXd::Zero(plant.input_width(),
                                                        plant.total_states());
        for (std::size_t i = 0; i < plant.nu(); ++i) {
            row_sum += gain.block_gain(i);
        }
        report.add("row_sum_max_abs", row_sum.cwiseAbs().maxCoeff());
        report.add("reduction_path_max_diff", (stacked - reduced).cwiseAbs().maxCoeff());
        report.add_matrix("stacked_gain", stacked);
        if (!coord_out.empty()) {
            gainform::save_gain(coord_out, gainform::GainMatrix{stacked});
            report.add("gain_file", coord_out);
        }
        report.print(coord_opts.format == "json");
    } else if (*positivity) {
        Report report("positivity");
        report.add_input("system", pos_system);
        const gainform::LtiSystem sys =
            gainform::load_system(pos_system, pos_opts.sym_tol, pos_opts.stab_margin);
        echo_tolerances(report, pos_opts);
        report.add("tol.sign_tol", sign_tol);
        gainform::GainMatrix gain{Eigen::MatrixXd()};
        if (pos_gain.empty()) {
            gain = gainform::synth_optimal(sys);
            report.add("gain_source", "synthesized optimal gain");
        } else {
            report.add_input("gain", pos_gain);
            gain = gainform::load_gain(pos_gain);
        }
        const gainform::PositivityCertificate cert = gainform::internal_positivity(
            gainform::state_map_closed_loop(sys, gain), sign_tol);
        report.add("metzler_a", cert.metzler_a);
        report.add("nonneg_b", cert.nonneg_b);
        report.add("nonneg_c", cert.nonneg_c);
        report.add("nonneg_d", cert.nonneg_d);
        report.add("verdict", cert.verdict);
        if (cert.witness) {
            std::ostringstream os;
            static const char* names[] = {"A", "B", "C", "D"};
            os << names[static_cast<int>(cert.witness->where)] << "(" << cert.witness->row << ","
               << cert.witness->col << ") = " << fmt17(cert.witness->value);
            report.add("witness", os.str());
        }
        Eigen::MatrixXd off = sys.a();
        off.diagonal().setZero();
        if (off.cwiseAbs().maxCoeff() <= sign_tol) {
            report.add("diagonal_a_condition",
                       gainform::closed_loop_positivity_condition(sys, sign_tol));
        }
        report.print(pos_opts.format == "json");
    } else if (*simulate) {
        Report report("simulate");
        report.add_input("system", sim_system);
        const gainform::LtiSystem sys =
            gainform::load_system(sim_system, sim_opts.sym_tol, sim_opts.stab_margin);
        gainform::GainMatrix gain{Eigen::MatrixXd()};
        if (sim_gain.empty()) {
            gain = gainform::synth_optimal(sys);
        } else {
            report.add_input("gain", sim_gain);
            gain = gainform::load_gain(sim_gain);
        }
        Eigen::VectorXd w = Eigen::VectorXd::Ones(sys.n());
        if (!sim_w.empty()) {
            w = parse_disturbance(sim_w, sys.n());
        }
        const gainform::Trajectory traj =
            gainform::step_response(gainform::closed_loop(sys, gain), w, horizon, dt);
        echo_tolerances(report, sim_opts);
        report.add("horizon", horizon);
        report.add("dt", dt);
        report.add("samples", static_cast<long long>(traj.times.size()));
        if (sim_out.empty()) {
            // CSV owns stdout; the report moves to stderr to keep it parseable.
            write_trajectory_csv(std::cout, traj);
            report.print(sim_opts.format == "json", std::cerr);
        } else {
            std::ofstream out(sim_out, std::ios::binary | std::ios::trunc);
            if (!out) {
                throw gainform::Error("cannot open " + sim_out);
            }
            write_trajectory_csv(out, traj);
            report.add("trajectory_file", sim_out);
            report.print(sim_opts.format == "json");
        }
    } else if (*experiment) {
        Report report("experiment");
        report.add_input("config", exp_config);
        gainform::ExperimentConfig cfg = load_experiment_config(exp_config);
        if (exp_seed) {
            cfg.seed = *exp_seed;
        }
        echo_tolerances(report, exp_opts);
        report.add("seed", static_cast<long long>(cfg.seed));
        report.add("num_systems", static_cast<long long>(cfg.num_systems));
        const gainform::ExperimentResult result = gainform::run_comparison_experiment(cfg);

        double max_rel_gap = 0.0;
        for (const auto& [g_formula, g_riccati] : result.norms) {
            max_rel_gap = std::max(max_rel_gap, std::abs(g_formula - g_riccati) / g_formula);
        }
        report.add("accepted_draws", static_cast<long long>(result.norms.size()));
        report.add("failed_draws", static_cast<long long>(result.failed_draws.size()));
        report.add("max_norm_rel_gap", max_rel_gap);
        for (int state = 0; state < gainform::ExperimentResult::kStates; ++state) {
            for (int ctrl = 0; ctrl < gainform::ExperimentResult::kControllers; ++ctrl) {
                const auto& series = result.average_abs[0][ctrl][state];
                double peak = 0.0;
                for (double v : series) peak = std::max(peak, v);
                std::ostringstream key;
                key << "peak.w1." << gainform::ExperimentResult::controller_name(ctrl) << ".x"
                    << (state + 1);
                report.add(key.str(), peak);
            }
        }
        if (!exp_out.empty()) {
            std::ofstream out(exp_out, std::ios::binary | std::ios::trunc);
            if (!out) {
                throw gainform::Error("cannot open " + exp_out);
            }
            gainform::write_experiment_csv(out, result);
            report.add("table_file", exp_out);
            report.print(exp_opts.format == "json");
        } else {
            gainform::write_experiment_csv(std::cout, result);
            report.print(exp_opts.format == "json", std::cerr);
        }
    }

    const auto t1 = std::chrono::steady_clock::now();
    // Wall time goes to stderr so that stdout stays byte-identical across runs.
    std::cerr << "wall_time_s = "
              << std::chrono::duration_cast<std::chrono::duration<double>>(t1 - t0).count()
              << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const gainform::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const gainform::NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const gainform::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
