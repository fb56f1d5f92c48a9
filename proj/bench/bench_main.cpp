// Times the OpenMP kernels against their serial reference paths and checks
// that both produce identical results.

#include <chrono>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "thevest/change_detect.hpp"
#include "thevest/circuit_sim.hpp"
#include "thevest/multi_source.hpp"

using namespace thevest;

namespace {

double time_ms(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

LoadSchedule alternating_schedule(double period, double horizon) {
    LoadSchedule schedule;
    for (int i = 0; i * period <= horizon + 1e-9; ++i) {
        schedule.entries.push_back({i * period, (i % 2 == 0) ? ComplexImpedance{10.0, 0.0}
                                                             : ComplexImpedance{8.0, 1.0}});
    }
    return schedule;
}

bool same_params(const TheveninParams& a, const TheveninParams& b) {
    return a.v_th == b.v_th && a.theta == b.theta && a.r_th == b.r_th && a.x_th == b.x_th;
}

void report(const char* kernel, std::size_t items, double serial_ms, double parallel_ms,
            bool identical) {
    std::printf("%-22s %10zu %12.1f ms %12.1f ms %8.2fx   %s\n", kernel, items, serial_ms,
                parallel_ms, serial_ms / parallel_ms, identical ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Serial vs OpenMP kernel benchmark"};
    std::size_t n_samples = 200000;
    std::size_t stream_len = 1500;
    std::size_t n_sources = 16;
    app.add_option("--samples", n_samples, "Samples for the simulation kernel");
    app.add_option("--stream", stream_len, "Stream length for the sliding-window kernel");
    app.add_option("--sources", n_sources, "Sources for the multi-source kernel");
    CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n\n", omp_get_max_threads());
#else
    std::printf("OpenMP not enabled in this build; both paths run serially\n\n");
#endif
    std::printf("%-22s %10s %15s %15s %9s\n", "kernel", "items", "serial", "parallel", "speedup");

    const TheveninParams truth{70.7107, 0.0, 1.0, 0.377};

    {
        const double period = 1e-3;
        const double horizon = period * static_cast<double>(n_samples - 1);
        const std::vector<SourceSpec> sources{{"source", truth, std::nullopt}};
        const LoadSchedule schedule = alternating_schedule(period * 64, horizon);
        const NoiseSpec noise{1e-3, 1e-3, 42};

        std::vector<MeasurementSet> serial_out, parallel_out;
        const double ts = time_ms([&] {
            serial_out = run_schedule(sources, schedule, noise, period, horizon, Exec::serial);
        });
        const double tp = time_ms([&] {
            parallel_out = run_schedule(sources, schedule, noise, period, horizon, Exec::parallel);
        });
        bool same = serial_out.size() == parallel_out.size();
        for (std::size_t i = 0; same && i < serial_out.size(); ++i) {
            same = serial_out[i].v_pcc.magnitude == parallel_out[i].v_pcc.magnitude &&
                   serial_out[i].v_pcc.angle == parallel_out[i].v_pcc.angle;
        }
        report("simulate", serial_out.size(), ts, tp, same);
    }

    {
        const double period = 0.1;
        const double horizon = period * static_cast<double>(stream_len - 1);
        const std::vector<SourceSpec> sources{{"source", truth, std::nullopt}};
        const LoadSchedule schedule = alternating_schedule(period, horizon);
        const auto stream =
            run_schedule(sources, schedule, NoiseSpec{1e-4, 1e-4, 7}, period, horizon);

        WindowConfig cfg;
        cfg.window_size = 8;
        cfg.stride = 1;
        cfg.warm_start = false;  // independent windows, the parallelizable mode

        EstimateTrace serial_trace, parallel_trace;
        const double ts =
            time_ms([&] { serial_trace = sliding_estimate(stream, cfg, Exec::serial); });
        const double tp =
            time_ms([&] { parallel_trace = sliding_estimate(stream, cfg, Exec::parallel); });
        bool same = serial_trace.points.size() == parallel_trace.points.size();
        for (std::size_t i = 0; same && i < serial_trace.points.size(); ++i) {
            same = same_params(serial_trace.points[i].report.params,
                               parallel_trace.points[i].report.params);
        }
        report("sliding windows", serial_trace.points.size(), ts, tp, same);
    }

    {
        std::vector<SourceSpec> sources;
        for (std::size_t s = 0; s < n_sources; ++s) {
            const double k = static_cast<double>(s);
            sources.push_back({"src" + std::to_string(s),
                               TheveninParams{60.0 + 2.0 * k, 0.0, 0.5 + 0.1 * k, 0.2 + 0.05 * k},
                               std::nullopt});
        }
        const LoadSchedule schedule = alternating_schedule(1.0, 63.0);
        const auto sets = run_schedule(sources, schedule, NoiseSpec{1e-4, 1e-4, 3}, 1.0, 63.0);

        MultiSourceReport serial_rep, parallel_rep;
        const double ts = time_ms(
            [&] { serial_rep = estimate_all(sets, Method::nonlinear, {}, {}, Exec::serial); });
        const double tp = time_ms(
            [&] { parallel_rep = estimate_all(sets, Method::nonlinear, {}, {}, Exec::parallel); });
        bool same = serial_rep.per_source.size() == parallel_rep.per_source.size();
        for (std::size_t i = 0; same && i < serial_rep.per_source.size(); ++i) {
            same = serial_rep.per_source[i].ok == parallel_rep.per_source[i].ok &&
                   same_params(serial_rep.per_source[i].report.params,
                               parallel_rep.per_source[i].report.params);
        }
        report("multi-source", serial_rep.per_source.size(), ts, tp, same);
    }

    return 0;
}
