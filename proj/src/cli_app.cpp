#include "thevest/cli_app.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "thevest/applications.hpp"
#include "thevest/change_detect.hpp"
#include "thevest/circuit_sim.hpp"
#include "thevest/errors.hpp"
#include "thevest/estimator_linear.hpp"
#include "thevest/estimator_nonlinear.hpp"
#include "thevest/io.hpp"
#include "thevest/multi_source.hpp"
#include "thevest/version.hpp"

namespace thevest::cli {

namespace {

std::string format_sig6(double v) {
    if (v == 0.0) {
        return "0.000000";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%#.6g", v);
    return buf;
}

void write_manifest(const std::string& command, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs,
                    const nlohmann::ordered_json& effective_config) {
    io::RunManifest m;
    m.command = command;
    m.input_paths = inputs;
    m.output_paths = outputs;
    m.config_digest = io::config_digest(effective_config);
    m.tool_version = std::string(kToolVersion);
    const std::filesystem::path path = outputs.front() + ".manifest.json";
    io::atomic_write(path, io::manifest_to_json(m).dump(2) + "\n");
}

std::optional<TheveninParams> truth_for(const std::map<std::string, TheveninParams>& truth,
                                        const std::string& source_id) {
    if (const auto it = truth.find(source_id); it != truth.end()) {
        return it->second;
    }
    if (const auto it = truth.find(""); it != truth.end()) {
        return it->second;
    }
    return std::nullopt;
}

struct SimulateArgs {
    std::string scenario_path;
    std::string out_csv;
    bool serial = false;
};

int cmd_simulate(const SimulateArgs& args) {
    const io::Scenario sc = io::load_scenario(args.scenario_path);
    const auto sets = run_schedule(sc.sources, sc.schedule, sc.noise, sc.sample_period_s,
                                   sc.horizon_s, args.serial ? Exec::serial : Exec::parallel);
    io::write_measurements_csv(args.out_csv, sets);

    nlohmann::ordered_json cfg;
    cfg["command"] = "simulate";
    cfg["scenario"] = args.scenario_path;
    cfg["out_csv"] = args.out_csv;
    write_manifest("simulate", {args.scenario_path}, {args.out_csv}, cfg);
    return kExitOk;
}

struct EstimateArgs {
    std::string in_csv;
    std::string out_json;
    bool nonlinear = false;
    bool linear = false;
    std::string truth_path;
    std::uint64_t seed = 0;
    bool from_linear = false;
    int max_iterations = 8000;
    int max_function_evals = 5000;
    bool degrees = false;
    bool serial = false;
};

int cmd_estimate(const EstimateArgs& args) {
    if (args.max_iterations < 1 || args.max_function_evals < 1) {
        throw InvalidInputError("iteration and evaluation caps must be positive");
    }
    const auto sets = io::read_measurements_csv(args.in_csv);
    std::map<std::string, TheveninParams> truth;
    if (!args.truth_path.empty()) {
        truth = io::load_truth(args.truth_path);
    }
    const Method method = args.linear ? Method::linear : Method::nonlinear;
    if (method == Method::linear && sets.size() == 2) {
        std::cerr << "note: solving the linearized system from only two snapshots is "
                     "sensitive to conditioning; three or more are recommended\n";
    }

    NlsConfig nls;
    nls.max_iterations = args.max_iterations;
    nls.max_function_evals = args.max_function_evals;
    nls.initial_guess = args.from_linear ? InitialGuess{FromLinearGuess{args.seed}}
                                         : InitialGuess{RandomGuess{args.seed}};

    nlohmann::ordered_json out;
    bool healthy = true;
    try {
        if (sets.front().branches.size() == 1) {
            const auto source_truth = truth_for(truth, sets.front().branches.front().source_id);
            const EstimateReport report = method == Method::nonlinear
                                              ? estimate_nonlinear(sets, nls, source_truth)
                                              : estimate_linear(sets, source_truth);
            out = io::report_to_json(report, args.degrees);
            healthy = report.converged;
        } else {
            const MultiSourceReport report =
                estimate_all(sets, method, nls, truth,
                             args.serial ? Exec::serial : Exec::parallel);
            out = io::multi_report_to_json(report, args.degrees);
            healthy = report.all_ok();
            for (const auto& o : report.per_source) {
                healthy = healthy && o.ok && o.report.converged;
            }
        }
    } catch (const EstimationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEstimation;
    } catch (const InvalidInputError& e) {
        // Too few or unusable snapshots is an estimation failure, not a file error.
        std::cerr << "error: " << e.what() << "\n";
        return kExitEstimation;
    }

    io::atomic_write(args.out_json, out.dump(2) + "\n");

    nlohmann::ordered_json cfg;
    cfg["command"] = "estimate";
    cfg["in_csv"] = args.in_csv;
    cfg["out_json"] = args.out_json;
    cfg["method"] = args.linear ? "linear" : "nonlinear";
    cfg["truth"] = args.truth_path;
    cfg["seed"] = args.seed;
    cfg["from_linear"] = args.from_linear;
    cfg["max_iterations"] = args.max_iterations;
    cfg["max_function_evals"] = args.max_function_evals;
    cfg["degrees"] = args.degrees;
    std::vector<std::string> inputs{args.in_csv};
    if (!args.truth_path.empty()) {
        inputs.push_back(args.truth_path);
    }
    write_manifest("estimate", inputs, {args.out_json}, cfg);

    if (!healthy) {
        std::cerr << "error: estimation did not converge on every source; see " << args.out_json
                  << "\n";
        return kExitEstimation;
    }
    return kExitOk;
}

struct DetectArgs {
    std::string in_csv;
    std::string out_trace_csv;
    std::string out_events_json;
    int window = 4;
    int stride = 0;  // 0 = window (non-overlapping)
    std::string method = "nonlinear";
    double threshold = 0.5;
    int settle = 3;
    std::uint64_t seed = 0;
    bool cold_start = false;
    bool serial = false;
};

int cmd_detect(const DetectArgs& args) {
    if (args.window < 2) {
        throw InvalidInputError("window must be at least 2");
    }
    if (args.stride < 0 || args.stride > args.window) {
        throw InvalidInputError("stride must lie in [1, window]; omit it for non-overlapping "
                                "windows");
    }
    const auto stream = io::read_measurements_csv(args.in_csv);

    WindowConfig cfg;
    cfg.window_size = args.window;
    cfg.stride = args.stride > 0 ? args.stride : args.window;
    cfg.method = args.method == "linear" ? Method::linear : Method::nonlinear;
    cfg.warm_start = !args.cold_start;
    cfg.nls.initial_guess = RandomGuess{args.seed};

    EstimateTrace trace;
    std::vector<ChangeEvent> events;
    try {
        trace = sliding_estimate(stream, cfg, args.serial ? Exec::serial : Exec::parallel);
        events = detect_changes(trace, args.threshold, args.settle);
    } catch (const EstimationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEstimation;
    } catch (const InvalidInputError& e) {
        // Covers streams shorter than one window and traces too short to settle.
        std::cerr << "error: " << e.what() << "\n";
        return kExitEstimation;
    }

    io::atomic_write(args.out_trace_csv, io::trace_to_csv(trace));
    io::atomic_write(args.out_events_json, io::events_to_json(events).dump(2) + "\n");

    nlohmann::ordered_json cfg_json;
    cfg_json["command"] = "detect";
    cfg_json["in_csv"] = args.in_csv;
    cfg_json["out_trace_csv"] = args.out_trace_csv;
    cfg_json["out_events_json"] = args.out_events_json;
    cfg_json["window"] = cfg.window_size;
    cfg_json["stride"] = cfg.stride;
    cfg_json["method"] = args.method;
    cfg_json["threshold"] = args.threshold;
    cfg_json["settle"] = args.settle;
    cfg_json["seed"] = args.seed;
    cfg_json["cold_start"] = args.cold_start;
    write_manifest("detect", {args.in_csv}, {args.out_trace_csv, args.out_events_json}, cfg_json);
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Thevenin equivalent estimation from PCC phasor measurements"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand(
        "simulate", "Solve a scenario file into a measurement CSV");
    simulate->add_option("scenario", sim.scenario_path, "Scenario JSON path")
        ->required()
        ->check(CLI::ExistingFile);
    simulate->add_option("out_csv", sim.out_csv, "Output measurement CSV path")->required();
    simulate->add_flag("--serial", sim.serial, "Disable the parallel sample kernel");

    EstimateArgs est;
    auto* estimate = app.add_subcommand(
        "estimate", "Estimate source parameters from a measurement CSV");
    estimate->add_option("in_csv", est.in_csv, "Measurement CSV path")
        ->required()
        ->check(CLI::ExistingFile);
    estimate->add_option("out_json", est.out_json, "Output report JSON path")->required();
    auto* flag_nl = estimate->add_flag("--nonlinear", est.nonlinear,
                                       "Damped Gauss-Newton fit of the exact model");
    auto* flag_lin = estimate->add_flag("--linear", est.linear,
                                        "Linearized regression (three or more snapshots advised)");
    flag_nl->excludes(flag_lin);
    flag_lin->excludes(flag_nl);
    estimate->add_option("--truth", est.truth_path, "Ground-truth JSON for error columns")
        ->check(CLI::ExistingFile);
    estimate->add_option("--seed", est.seed, "Seed for the random initial guess");
    estimate->add_flag("--from-linear", est.from_linear,
                       "Warm-start the nonlinear fit from the linear estimate");
    estimate->add_option("--max-iterations", est.max_iterations, "Iteration cap");
    estimate->add_option("--max-fevals", est.max_function_evals, "Function evaluation cap");
    estimate->add_flag("--degrees", est.degrees, "Also report angles in degrees");
    estimate->add_flag("--serial", est.serial, "Disable the parallel per-source kernel");

    DetectArgs det;
    auto* detect = app.add_subcommand(
        "detect", "Sliding-window estimation and impedance change detection");
    detect->add_option("in_csv", det.in_csv, "Measurement CSV path")
        ->required()
        ->check(CLI::ExistingFile);
    detect->add_option("out_trace_csv", det.out_trace_csv, "Output trace CSV path")->required();
    detect->add_option("out_events_json", det.out_events_json, "Output events JSON path")
        ->required();
    detect->add_option("--window", det.window, "Snapshots per window estimate")
        ->check(CLI::PositiveNumber);
    detect->add_option("--stride", det.stride,
                       "Window advance in snapshots (default: window size)");
    detect->add_option("--method", det.method, "nonlinear or linear")
        ->check(CLI::IsMember({"nonlinear", "linear"}));
    detect->add_option("--threshold", det.threshold, "Relative jump threshold")
        ->check(CLI::PositiveNumber);
    detect->add_option("--settle", det.settle, "Trace points per settled median")
        ->check(CLI::PositiveNumber);
    detect->add_option("--seed", det.seed, "Seed for the random initial guess");
    detect->add_flag("--cold-start", det.cold_start,
                     "Estimate each window independently instead of warm-starting");
    detect->add_flag("--serial", det.serial, "Disable the parallel window kernel");

    auto* apps = app.add_subcommand("apps", "Closed-form utilities on estimated parameters");
    apps->require_subcommand(1);

    double p_vth = 0.0, p_rth = 0.0, p_rl = 0.0;
    auto* power = apps->add_subcommand("power", "Power delivered to a resistive load");
    power->add_option("--vth", p_vth, "Source voltage magnitude [V]")->required();
    power->add_option("--rth", p_rth, "Source resistance [ohm]")->required();
    power->add_option("--rl", p_rl, "Load resistance [ohm]")->required();

    double s_voc = 0.0, s_a = 0.0, s_b = 0.0;
    auto* soc = apps->add_subcommand("soc", "State of charge from open-circuit voltage");
    soc->add_option("--voc", s_voc, "Open-circuit voltage [V]")->required();
    soc->add_option("--a", s_a, "Calibration slope [V per unit SOC]")->required();
    soc->add_option("--b", s_b, "Calibration intercept [V]")->required();

    StabilityInput stab;
    bool stab_degrees = false;
    auto* stability =
        apps->add_subcommand("stability", "Loadability derivative dS/dY at an operating point");
    stability->add_option("--eth", stab.e_th, "Source emf magnitude [V]")->required();
    stability->add_option("--zth", stab.z_th, "Source impedance magnitude [ohm]")->required();
    stability->add_option("--theta", stab.theta_z, "Source impedance angle [rad]")->required();
    stability->add_option("--y", stab.y_load, "Load admittance magnitude [S]")->required();
    stability->add_option("--phi", stab.phi_load, "Load impedance angle [rad]")->required();
    stability->add_flag("--degrees", stab_degrees, "Interpret angles as degrees");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);  // --help / --version
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (app.got_subcommand(simulate)) {
            return cmd_simulate(sim);
        }
        if (app.got_subcommand(estimate)) {
            if (est.nonlinear == est.linear) {
                std::cerr << "error: choose exactly one of --nonlinear or --linear\n";
                return kExitInput;
            }
            return cmd_estimate(est);
        }
        if (app.got_subcommand(detect)) {
            return cmd_detect(det);
        }
        if (app.got_subcommand(apps)) {
            if (apps->got_subcommand(power)) {
                std::cout << format_sig6(load_power(p_vth, p_rth, p_rl)) << "\n";
            } else if (apps->got_subcommand(soc)) {
                const SocEstimate e = soc_from_voc(s_voc, SocCalibration(s_a, s_b));
                if (e.out_of_range) {
                    std::cerr << "warning: SOC outside [0, 1]\n";
                }
                std::cout << format_sig6(e.soc) << "\n";
            } else {
                if (stab_degrees) {
                    stab.theta_z *= std::numbers::pi / 180.0;
                    stab.phi_load *= std::numbers::pi / 180.0;
                }
                std::cout << format_sig6(stability_derivative(stab)) << "\n";
            }
            return kExitOk;
        }
    } catch (const SingularCircuitError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const EstimationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEstimation;
    } catch (const InvalidInputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return kExitInput;
}

}  // namespace thevest::cli
