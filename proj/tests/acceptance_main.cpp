// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Tolerances are fixed here, not configurable.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "thevest/applications.hpp"
#include "thevest/change_detect.hpp"
#include "thevest/circuit_sim.hpp"
#include "thevest/cli_app.hpp"
#include "thevest/errors.hpp"
#include "thevest/estimator_linear.hpp"
#include "thevest/estimator_nonlinear.hpp"
#include "thevest/io.hpp"
#include "thevest/multi_source.hpp"
#include "test_util.hpp"

using namespace thevest;
using std::numbers::pi;

namespace {

const TheveninParams kTruth{70.7107, 0.0, 1.0, 0.377};
const TheveninParams kGrid{49.4975, 0.0, 0.5, 0.0377};

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void require(bool condition, const std::string& what) {
        if (!condition) {
            ok = false;
            detail << (detail.str().empty() ? "" : "; ") << what;
        }
    }
};

// Relative error for magnitudes/impedances, absolute wrapped error for angles.
void require_recovery(Check& c, const TheveninParams& est, const TheveninParams& truth,
                      double tol, const std::string& tag) {
    c.require(std::abs(est.v_th - truth.v_th) <= tol * std::abs(truth.v_th),
              tag + ": v_th off " + std::to_string(est.v_th));
    c.require(std::abs(normalize_angle(est.theta - truth.theta)) <= tol,
              tag + ": theta off " + std::to_string(est.theta));
    c.require(std::abs(est.r_th - truth.r_th) <= tol * std::abs(truth.r_th),
              tag + ": r_th off " + std::to_string(est.r_th));
    c.require(std::abs(est.x_th - truth.x_th) <= tol * std::abs(truth.x_th),
              tag + ": x_th off " + std::to_string(est.x_th));
}

std::vector<MeasurementSet> distinct_load_sets(const TheveninParams& truth, int n) {
    std::vector<MeasurementSet> sets;
    for (int k = 0; k < n; ++k) {
        sets.push_back(solve_single(
            truth, ComplexImpedance{6.0 + 1.3 * static_cast<double>(k), 0.4 * (k % 4)}));
    }
    return sets;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// 1. Noiseless nonlinear round-trip at the benchmark operating point.
bool criterion_nonlinear_roundtrip(Check& c) {
    const auto sets = distinct_load_sets(kTruth, 2);
    NlsConfig cfg;
    cfg.initial_guess = RandomGuess{0};
    const EstimateReport report = estimate_nonlinear(sets, cfg, kTruth);
    c.require(report.converged, "did not converge");
    require_recovery(c, report.params, kTruth, 1e-6, "recovery");
    return c.ok;
}

// 2. Monte-Carlo with 0.1% magnitude and 1 mrad angle noise over 10 snapshots.
bool criterion_noisy_monte_carlo(Check& c) {
    const std::vector<SourceSpec> sources{{"s", kTruth, std::nullopt}};
    // Heavier loads carry more current, which is what makes the small series
    // reactance observable against relative magnitude noise.
    LoadSchedule schedule;
    const double x_cycle[5] = {0.0, 1.5, -1.5, 2.5, -2.5};
    for (int i = 0; i < 10; ++i) {
        schedule.entries.push_back(
            {static_cast<double>(i),
             ComplexImpedance{1.5 + 0.7 * static_cast<double>(i), x_cycle[i % 5]}});
    }

    std::vector<double> v_err, th_err, r_err, x_err;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto sets =
            run_schedule(sources, schedule, NoiseSpec{1e-3, 1e-3, seed}, 1.0, 9.0);
        NlsConfig cfg;
        cfg.initial_guess = RandomGuess{seed};
        const EstimateReport report = estimate_nonlinear(sets, cfg);
        v_err.push_back(100.0 * std::abs(report.params.v_th - kTruth.v_th) / kTruth.v_th);
        th_err.push_back(std::abs(normalize_angle(report.params.theta - kTruth.theta)));
        r_err.push_back(100.0 * std::abs(report.params.r_th - kTruth.r_th) / kTruth.r_th);
        x_err.push_back(100.0 * std::abs(report.params.x_th - kTruth.x_th) / kTruth.x_th);
    }
    c.require(median_of(v_err) < 1.0, "median v_th error >= 1%");
    c.require(median_of(th_err) < 0.01, "median theta error >= 0.01 rad");
    c.require(median_of(r_err) < 1.0, "median r_th error >= 1%");
    c.require(median_of(x_err) < 1.0, "median x_th error >= 1%");
    c.detail << "medians: v " << median_of(v_err) << "%, r " << median_of(r_err) << "%, x "
             << median_of(x_err) << "%";
    return c.ok;
}

// 3. Linear estimator recovery plus the conditioning failure mode.
bool criterion_linear(Check& c) {
    const auto sets = distinct_load_sets(kTruth, 3);
    const EstimateReport report = estimate_linear(sets);
    require_recovery(c, report.params, kTruth, 1e-8, "3-load recovery");

    const std::vector<MeasurementSet> near_dup{
        solve_single(kTruth, ComplexImpedance{10.0, 0.0}),
        solve_single(kTruth, ComplexImpedance{10.000001, 0.0})};
    bool reported = false;
    double cond = 0.0;
    try {
        estimate_linear(near_dup);
    } catch (const DegenerateSystemError& e) {
        reported = true;
        cond = e.condition_number();
    }
    c.require(reported, "near-duplicate loads were not rejected");
    c.require(cond > 1e10, "reported condition number too small");
    return c.ok;
}

// 4. Linear and nonlinear agree on random noiseless problems.
bool criterion_agreement(Check& c) {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> v(10.0, 500.0);
    std::uniform_real_distribution<double> th(-pi + 1e-6, pi);
    std::uniform_real_distribution<double> r(0.01, 10.0);
    std::uniform_real_distribution<double> x(0.001, 5.0);
    std::uniform_real_distribution<double> rl(2.0, 40.0);
    std::uniform_real_distribution<double> xl(0.0, 8.0);

    for (int trial = 0; trial < 50; ++trial) {
        const TheveninParams truth{v(rng), th(rng), r(rng), x(rng)};
        std::vector<MeasurementSet> sets;
        for (int k = 0; k < 3; ++k) {
            sets.push_back(solve_single(
                truth, ComplexImpedance{rl(rng) + 12.0 * static_cast<double>(k), xl(rng)}));
        }
        NlsConfig cfg;
        cfg.initial_guess = RandomGuess{static_cast<std::uint64_t>(trial)};
        const EstimateReport nl = estimate_nonlinear(sets, cfg);
        const EstimateReport lin = estimate_linear(sets);
        const std::string tag = "trial " + std::to_string(trial);
        c.require(std::abs(nl.params.v_th - lin.params.v_th) <= 1e-6 * lin.params.v_th,
                  tag + ": v_th disagrees");
        c.require(std::abs(normalize_angle(nl.params.theta - lin.params.theta)) <= 1e-6,
                  tag + ": theta disagrees");
        c.require(std::abs(nl.params.r_th - lin.params.r_th) <=
                      1e-6 * std::abs(lin.params.r_th),
                  tag + ": r_th disagrees");
        c.require(std::abs(nl.params.x_th - lin.params.x_th) <=
                      1e-6 * std::abs(lin.params.x_th),
                  tag + ": x_th disagrees");
        if (!c.ok) {
            break;
        }
    }
    return c.ok;
}

// 5. Generator and grid recovered simultaneously from shared measurements.
bool criterion_multi_source(Check& c) {
    const std::vector<SourceSpec> sources{{"generator", kTruth, std::nullopt},
                                          {"grid", kGrid, std::nullopt}};
    LoadSchedule schedule;
    schedule.entries = {{0.0, {10.0, 0.0}}, {1.0, {5.0, 1.0}}};
    const auto sets = run_schedule(sources, schedule, {}, 1.0, 1.0);
    NlsConfig cfg;
    cfg.initial_guess = RandomGuess{0};
    const MultiSourceReport report = estimate_all(sets, Method::nonlinear, cfg);
    c.require(report.all_ok(), "a source failed");
    if (report.all_ok()) {
        require_recovery(c, report.find("generator")->report.params, kTruth, 1e-6, "generator");
        require_recovery(c, report.find("grid")->report.params, kGrid, 1e-6, "grid");
    }
    return c.ok;
}

// 6. The impedance step is detected on both impedance components only.
bool criterion_change_detection(Check& c) {
    const std::vector<SourceSpec> sources{{"s", kTruth, StepEvent{5.0, 2.0, 0.755}}};
    LoadSchedule schedule;
    for (int i = 0; i < 49; ++i) {
        schedule.entries.push_back({i * 0.2, (i % 2 == 0) ? ComplexImpedance{10.0, 0.0}
                                                          : ComplexImpedance{8.0, 1.0}});
    }
    const auto stream = run_schedule(sources, schedule, {}, 0.2, 9.6);

    WindowConfig cfg;
    cfg.window_size = 4;
    cfg.stride = 4;
    const EstimateTrace trace = sliding_estimate(stream, cfg);
    const auto events = detect_changes(trace, 0.5, 3);

    c.require(events.size() == 2, "expected exactly two events, got " +
                                      std::to_string(events.size()));
    const TheveninParams after{kTruth.v_th, kTruth.theta, 2.0, 0.755};
    for (const auto& e : events) {
        const bool is_r = e.parameter == ParamKind::r_th;
        const bool is_x = e.parameter == ParamKind::x_th;
        c.require(is_r || is_x, "unexpected event parameter");
        const double expected_jump =
            is_r ? (after.r_th - kTruth.r_th) / kTruth.r_th
                 : (after.x_th - kTruth.x_th) / kTruth.x_th;
        c.require(std::abs(e.relative_jump - 1.0) <= 0.05,
                  "relative jump not within 5% of 1.0");
        c.require(std::abs(e.relative_jump - expected_jump) <= 0.05, "jump far from the truth");
        const double before_truth = is_r ? kTruth.r_th : kTruth.x_th;
        const double after_truth = is_r ? after.r_th : after.x_th;
        c.require(std::abs(e.before - before_truth) <= 0.005 * before_truth,
                  "settled level before the step off by more than 0.5%");
        c.require(std::abs(e.after - after_truth) <= 0.005 * after_truth,
                  "settled level after the step off by more than 0.5%");
        c.require(std::abs(e.detected_time_s - 5.0) <= cfg.window_size * 0.2,
                  "detection farther than one window from t=5");
    }
    return c.ok;
}

// 7. Analytic Jacobian against central finite differences.
bool criterion_jacobian(Check& c) {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> v(0.0, 500.0);
    std::uniform_real_distribution<double> ang(-pi + 1e-6, pi);
    std::uniform_real_distribution<double> z(-10.0, 10.0);
    std::uniform_real_distribution<double> i_mag(0.0, 100.0);

    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const TheveninParams x{v(rng), ang(rng), z(rng), z(rng)};
        MeasurementSet m;
        m.v_pcc = Phasor{v(rng), ang(rng)};
        m.branches.push_back({"s", Phasor{i_mag(rng), ang(rng)}});
        const auto analytic = jacobian_f(x, m);
        const double fields[4] = {x.v_th, x.theta, x.r_th, x.x_th};
        for (int col = 0; col < 4; ++col) {
            const double h = 1e-6 * std::max(1.0, std::abs(fields[col]));
            double plus[4], minus[4];
            for (int q = 0; q < 4; ++q) {
                plus[q] = fields[q];
                minus[q] = fields[q];
            }
            plus[col] += h;
            minus[col] -= h;
            const Eigen::Vector2d fd =
                (model_f(TheveninParams{plus[0], plus[1], plus[2], plus[3]}, m) -
                 model_f(TheveninParams{minus[0], minus[1], minus[2], minus[3]}, m)) /
                (2.0 * h);
            worst = std::max({worst, std::abs(fd(0) - analytic(0, col)),
                              std::abs(fd(1) - analytic(1, col))});
        }
    }
    c.require(worst < 1e-6, "max deviation " + std::to_string(worst));
    c.detail << "max |analytic - fd| = " << worst;
    return c.ok;
}

// 8. Closed-form application properties.
bool criterion_applications(Check& c) {
    std::mt19937_64 rng(888);
    std::uniform_real_distribution<double> u(0.5, 20.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double v_th = 10.0 * u(rng);
        const double r_th = u(rng);
        const double p_match = load_power(v_th, r_th, r_th);
        for (int k = 1; k <= 60; ++k) {
            const double r_load = r_th * 0.05 * static_cast<double>(k);
            const double p = load_power(v_th, r_th, r_load);
            if (std::abs(r_load - r_th) > 1e-12 && p >= p_match) {
                c.require(false, "power at mismatch not below the matched value");
            }
        }
    }

    const StabilityInput at_limit{1.0, 2.0, 0.2, 0.5, 0.1};
    c.require(stability_derivative(at_limit) == 0.0, "dS/dY not zero at Y = 1/Z");
    c.require(stability_derivative(StabilityInput{1.0, 2.0, 0.2, 0.49, 0.1}) > 0.0,
              "dS/dY not positive below the limit");
    c.require(stability_derivative(StabilityInput{1.0, 2.0, 0.2, 0.51, 0.1}) < 0.0,
              "dS/dY not negative above the limit");

    std::uniform_real_distribution<double> y(0.01, 2.0);
    std::uniform_real_distribution<double> ang(-1.0, 1.0);
    const auto s_of_y = [](double e, double zz, double th, double yy, double ph) {
        return e * e * yy / (1.0 + zz * zz * yy * yy + 2.0 * zz * yy * std::cos(th - ph));
    };
    for (int trial = 0; trial < 200; ++trial) {
        const StabilityInput inp{u(rng), u(rng), ang(rng), y(rng), ang(rng)};
        const double h = 1e-6 * std::max(1.0, inp.y_load);
        const double fd =
            (s_of_y(inp.e_th, inp.z_th, inp.theta_z, inp.y_load + h, inp.phi_load) -
             s_of_y(inp.e_th, inp.z_th, inp.theta_z, inp.y_load - h, inp.phi_load)) /
            (2.0 * h);
        const double analytic = stability_derivative(inp);
        const double scale = std::max(std::abs(analytic), 1e-3 * inp.e_th * inp.e_th);
        if (std::abs(fd - analytic) > 1e-6 * scale) {
            c.require(false, "dS/dY finite-difference mismatch");
            break;
        }
    }

    const SocCalibration cal(1.2, 11.4);
    std::uniform_real_distribution<double> s(-0.5, 1.5);
    for (int trial = 0; trial < 500; ++trial) {
        const double soc = s(rng);
        const double back = soc_from_voc(cal.intercept_b + cal.slope_a * soc, cal).soc;
        if (std::abs(back - soc) > 1e-12) {
            c.require(false, "SOC affine inverse identity violated");
            break;
        }
    }
    return c.ok;
}

// 9. Damped steps never increase the objective; caps stay honored.
bool criterion_solver_discipline(Check& c) {
    const std::vector<SourceSpec> sources{{"s", kTruth, std::nullopt}};
    LoadSchedule schedule;
    for (int i = 0; i < 8; ++i) {
        schedule.entries.push_back(
            {static_cast<double>(i), ComplexImpedance{5.0 + static_cast<double>(i), 0.5}});
    }
    NlsConfig defaults;
    c.require(defaults.max_iterations == 8000, "default iteration cap is not 8000");
    c.require(defaults.max_function_evals == 5000, "default evaluation cap is not 5000");

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto sets =
            run_schedule(sources, schedule, NoiseSpec{5e-3, 5e-3, seed}, 1.0, 7.0);
        NlsConfig cfg;
        cfg.initial_guess = RandomGuess{seed};
        cfg.record_history = true;
        const EstimateReport report = estimate_nonlinear(sets, cfg);
        for (std::size_t i = 1; i < report.objective_history.size(); ++i) {
            if (report.objective_history[i] > report.objective_history[i - 1]) {
                c.require(false, "objective increased on an accepted step");
            }
        }
        c.require(report.iterations <= defaults.max_iterations, "iteration cap exceeded");
        c.require(report.function_evals <= defaults.max_function_evals,
                  "evaluation cap exceeded");
    }

    // a deliberately starved run must stop at its caps with converged = false
    const auto sets = run_schedule(sources, schedule, NoiseSpec{5e-3, 5e-3, 3}, 1.0, 7.0);
    NlsConfig tiny;
    tiny.initial_guess = RandomGuess{11};
    tiny.max_iterations = 3;
    const EstimateReport capped = estimate_nonlinear(sets, tiny);
    c.require(capped.iterations <= 3, "starved run exceeded its iteration cap");
    c.require(!capped.converged, "starved run claims convergence");
    return c.ok;
}

// 10. Byte-identical outputs for every bundled scenario pipeline.
bool criterion_determinism(Check& c) {
    const std::filesystem::path scenario_dir = THEVEST_SCENARIO_DIR;
    testutil::TempDir dir;

    const auto run = [&](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"thevest"};
        for (const auto& a : args) {
            argv.push_back(a.c_str());
        }
        return thevest::cli::run(static_cast<int>(argv.size()), argv.data());
    };

    // Re-running a command with identical arguments must reproduce every
    // output byte, manifests included; the first run's bytes are snapshotted
    // before the rerun overwrites them.
    const auto snapshot_rerun = [&](const std::vector<std::string>& args,
                                    const std::vector<std::filesystem::path>& outputs,
                                    const std::string& tag) {
        c.require(run(args) == 0, tag + ": run 1 failed");
        std::vector<std::string> first;
        for (const auto& out : outputs) {
            first.push_back(testutil::slurp(out));
            first.push_back(testutil::slurp(out.string() + ".manifest.json"));
        }
        c.require(run(args) == 0, tag + ": run 2 failed");
        std::size_t i = 0;
        for (const auto& out : outputs) {
            c.require(testutil::slurp(out) == first[i++], tag + ": output bytes differ");
            c.require(testutil::slurp(out.string() + ".manifest.json") == first[i++],
                      tag + ": manifest bytes differ");
        }
    };

    for (const char* name : {"table2.json", "two_source.json", "step_change.json",
                             "step_change_noisy.json", "constant.json", "near_duplicate.json"}) {
        const auto in = (scenario_dir / name).string();
        const auto csv = dir.file(std::string(name) + ".csv");
        snapshot_rerun({"simulate", in, csv.string()}, {csv}, name);
        if (!c.ok) {
            return false;
        }
    }

    const auto csv = dir.file("table2.json.csv").string();
    const auto truth = (scenario_dir / "table2_truth.json").string();
    for (const char* method : {"--nonlinear", "--linear"}) {
        const auto rep = dir.file(std::string("rep") + method + ".json");
        snapshot_rerun({"estimate", csv, rep.string(), method, "--truth", truth}, {rep},
                       std::string("estimate ") + method);
    }

    const auto step_csv = dir.file("step_change.json.csv").string();
    const auto trace = dir.file("trace.csv");
    const auto events = dir.file("events.json");
    c.require(run({"detect", step_csv, trace.string(), events.string()}) == 0, "detect run 1");
    const std::string trace_first = testutil::slurp(trace);
    const std::string events_first = testutil::slurp(events);
    const std::string manifest_first = testutil::slurp(trace.string() + ".manifest.json");
    c.require(run({"detect", step_csv, trace.string(), events.string()}) == 0, "detect run 2");
    c.require(testutil::slurp(trace) == trace_first, "trace bytes differ");
    c.require(testutil::slurp(events) == events_first, "events bytes differ");
    c.require(testutil::slurp(trace.string() + ".manifest.json") == manifest_first,
              "detect manifest bytes differ");
    return c.ok;
}

struct Criterion {
    int number;
    const char* name;
    double time_limit_s;  // 0 = no stated limit
    std::function<bool(Check&)> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "nonlinear noiseless round-trip within 1e-6", 1.0, criterion_nonlinear_roundtrip},
        {2, "noisy Monte-Carlo median error under 1%", 30.0, criterion_noisy_monte_carlo},
        {3, "linear recovery within 1e-8 and conditioning failure mode", 1.0, criterion_linear},
        {4, "linear/nonlinear agreement within 1e-6 on 50 random problems", 0.0,
         criterion_agreement},
        {5, "simultaneous generator and grid recovery within 1e-6", 2.0,
         criterion_multi_source},
        {6, "impedance step detected on r and x only", 5.0, criterion_change_detection},
        {7, "analytic Jacobian matches finite differences within 1e-6", 0.0,
         criterion_jacobian},
        {8, "application formulas: matched power, dS/dY, SOC identity", 0.0,
         criterion_applications},
        {9, "solver discipline: monotone objective, caps honored", 0.0,
         criterion_solver_discipline},
        {10, "byte-identical outputs across repeated runs", 0.0, criterion_determinism},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        Check check;
        bool ok = false;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            ok = criterion.run(check);
        } catch (const std::exception& e) {
            check.require(false, std::string("exception: ") + e.what());
            ok = false;
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (criterion.time_limit_s > 0.0 && elapsed >= criterion.time_limit_s) {
            check.require(false, "runtime " + std::to_string(elapsed) + " s over the " +
                                     std::to_string(criterion.time_limit_s) + " s limit");
            ok = false;
        }
        std::printf("%s  %2d  %s (%.2f s)%s%s\n", ok ? "PASS" : "FAIL", criterion.number,
                    criterion.name, elapsed, check.detail.str().empty() ? "" : " -- ",
                    check.detail.str().c_str());
        if (!ok) {
            ++failures;
        }
    }
    if (failures > 0) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
