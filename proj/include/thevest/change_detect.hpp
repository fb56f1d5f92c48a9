#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "thevest/estimator_nonlinear.hpp"
#include "thevest/exec.hpp"

namespace thevest {

struct WindowConfig {
    int window_size = 4;  // measurement sets per estimate, >= 2
    int stride = 4;       // window advance, 1 <= stride <= window_size
    Method method = Method::nonlinear;
    bool warm_start = true;  // seed each window from the previous estimate (nonlinear only)
    NlsConfig nls;
};

struct TracePoint {
    double time_s = 0.0;  // time of the window's last sample
    EstimateReport report;
};

/// Time series of window estimates. Windows straddling a parameter step blend
/// both regimes; their reports keep the elevated residual_norm for diagnosis.
struct EstimateTrace {
    std::vector<TracePoint> points;
};

enum class ParamKind { v_th, theta, r_th, x_th };
std::string_view to_string(ParamKind k);

struct ChangeEvent {
    double detected_time_s = 0.0;  // first trace point after the jump
    ParamKind parameter{};
    double before = 0.0;  // settled median before the jump
    double after = 0.0;   // settled median after the jump
    double relative_jump = 0.0;
};

/// One estimate per window position over a time-ordered stream. Warm-started
/// runs are sequential by contract; cold starts and the linear method process
/// windows independently and may run in parallel.
EstimateTrace sliding_estimate(std::span<const MeasurementSet> stream, const WindowConfig& cfg,
                               Exec exec = Exec::parallel);

/// Scans the trace for the boundary with the largest settled-median jump per
/// parameter and emits at most one event per parameter whose jump exceeds
/// threshold_rel. Medians over settle_points on each side resist the
/// mixed-regime windows at the step; boundaries tying at the largest jump are
/// disambiguated by how well their adjacent points sit on the two levels, so
/// detected_time lands on the first trace point after the jump. The trace
/// must hold at least 2*settle_points points.
std::vector<ChangeEvent> detect_changes(const EstimateTrace& trace, double threshold_rel,
                                        int settle_points);

}  // namespace thevest
