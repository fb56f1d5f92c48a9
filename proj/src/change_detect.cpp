#include "thevest/change_detect.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>

#include "thevest/errors.hpp"
#include "thevest/estimator_linear.hpp"

namespace thevest {

namespace {

constexpr double kJumpEps = 1e-9;  // denominator guard for near-zero parameters

double param_of(const TheveninParams& p, ParamKind k) {
    switch (k) {
        case ParamKind::v_th: return p.v_th;
        case ParamKind::theta: return p.theta;
        case ParamKind::r_th: return p.r_th;
        case ParamKind::x_th: return p.x_th;
    }
    return 0.0;
}

double median_of(const std::vector<double>& series, std::size_t begin, std::size_t count) {
    std::vector<double> v(series.begin() + static_cast<std::ptrdiff_t>(begin),
                          series.begin() + static_cast<std::ptrdiff_t>(begin + count));
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    if (v.size() % 2 == 1) {
        return v[mid];
    }
    const double hi = v[mid];
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

}  // namespace

std::string_view to_string(ParamKind k) {
    switch (k) {
        case ParamKind::v_th: return "v_th";
        case ParamKind::theta: return "theta";
        case ParamKind::r_th: return "r_th";
        case ParamKind::x_th: return "x_th";
    }
    return "?";
}

EstimateTrace sliding_estimate(std::span<const MeasurementSet> stream, const WindowConfig& cfg,
                               Exec exec) {
    if (cfg.window_size < 2) {
        throw InvalidInputError("window_size must be at least 2");
    }
    if (cfg.stride < 1 || cfg.stride > cfg.window_size) {
        throw InvalidInputError("stride must be in [1, window_size]");
    }
    if (static_cast<std::size_t>(cfg.window_size) > stream.size()) {
        throw InvalidInputError("stream is shorter than one window");
    }
    for (std::size_t i = 1; i < stream.size(); ++i) {
        if (stream[i].time_s < stream[i - 1].time_s) {
            throw InvalidInputError("stream must be time-ordered");
        }
    }

    const std::size_t w = static_cast<std::size_t>(cfg.window_size);
    const std::size_t stride = static_cast<std::size_t>(cfg.stride);
    std::vector<std::size_t> positions;
    for (std::size_t p = 0; p + w <= stream.size(); p += stride) {
        positions.push_back(p);
    }

    EstimateTrace trace;
    trace.points.resize(positions.size());

    const auto estimate_window = [&](std::size_t k, const NlsConfig& nls) {
        const std::size_t p = positions[k];
        const auto window = stream.subspan(p, w);
        TracePoint& point = trace.points[k];
        point.time_s = window.back().time_s;
        point.report = cfg.method == Method::nonlinear ? estimate_nonlinear(window, nls)
                                                       : estimate_linear(window);
    };

    const bool sequential = cfg.warm_start && cfg.method == Method::nonlinear;
    if (sequential) {
        NlsConfig nls = cfg.nls;
        for (std::size_t k = 0; k < positions.size(); ++k) {
            estimate_window(k, nls);
            nls.initial_guess = trace.points[k].report.params;
        }
    } else if (exec == Exec::parallel) {
        std::exception_ptr failure;
        const auto n = static_cast<std::int64_t>(positions.size());
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t k = 0; k < n; ++k) {
            try {
                estimate_window(static_cast<std::size_t>(k), cfg.nls);
            } catch (...) {
#pragma omp critical(thevest_sliding_failure)
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
    } else {
        for (std::size_t k = 0; k < positions.size(); ++k) {
            estimate_window(k, cfg.nls);
        }
    }
    return trace;
}

std::vector<ChangeEvent> detect_changes(const EstimateTrace& trace, double threshold_rel,
                                        int settle_points) {
    if (!(threshold_rel > 0.0)) {
        throw InvalidInputError("threshold must be positive");
    }
    if (settle_points < 1) {
        throw InvalidInputError("settle_points must be at least 1");
    }
    const std::size_t n = trace.points.size();
    const std::size_t settle = static_cast<std::size_t>(settle_points);
    if (n < 2 * settle) {
        throw InvalidInputError("trace is shorter than 2*settle_points");
    }

    std::vector<ChangeEvent> events;
    for (const ParamKind kind :
         {ParamKind::v_th, ParamKind::theta, ParamKind::r_th, ParamKind::x_th}) {
        std::vector<double> series(n);
        for (std::size_t i = 0; i < n; ++i) {
            series[i] = param_of(trace.points[i].report.params, kind);
        }

        std::size_t best_j = 0;
        double best_before = 0.0;
        double best_after = 0.0;
        double max_jump = -1.0;
        for (std::size_t j = settle; j + settle <= n; ++j) {
            const double before = median_of(series, j - settle, settle);
            const double after = median_of(series, j, settle);
            const double jump = std::abs(after - before) / std::max(std::abs(before), kJumpEps);
            if (jump > max_jump) {
                max_jump = jump;
                best_j = j;
                best_before = before;
                best_after = after;
            }
        }
        if (!(max_jump > threshold_rel)) {
            continue;
        }

        // The median shift localizes the boundary only to within one settle
        // width: mixed-regime windows at the step can pull neighbouring
        // boundaries into an exact tie. Within that width, the first point
        // whose value sides with the after level is the first point past the
        // jump.
        std::size_t detected = best_j;
        for (std::size_t i = best_j + 1 - settle; i < std::min(best_j + settle, n); ++i) {
            if (std::abs(series[i] - best_after) < std::abs(series[i] - best_before)) {
                detected = i;
                break;
            }
        }

        ChangeEvent event;
        event.parameter = kind;
        event.detected_time_s = trace.points[detected].time_s;
        event.before = best_before;
        event.after = best_after;
        event.relative_jump = max_jump;
        events.push_back(event);
    }
    return events;
}

}  // namespace thevest
