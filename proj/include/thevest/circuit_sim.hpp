#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "thevest/exec.hpp"
#include "thevest/phasor.hpp"

namespace thevest {

/// Impedance step applied to a source at a fixed instant.
struct StepEvent {
    double time_s = 0.0;
    double new_r = 0.0;  // ohms
    double new_x = 0.0;  // ohms
};

struct SourceSpec {
    std::string source_id;
    TheveninParams params;  // ground truth driving the simulation
    std::optional<StepEvent> step;
};

/// Time-ordered load impedances at the PCC. At least two distinct values are
/// required: a single operating point cannot identify four parameters.
struct LoadSchedule {
    struct Entry {
        double time_s = 0.0;
        ComplexImpedance z_load;
    };
    std::vector<Entry> entries;
};

/// Gaussian measurement noise: relative on magnitudes, absolute on angles.
/// A fixed seed reproduces the same stream regardless of execution policy.
struct NoiseSpec {
    double mag_rel_sigma = 0.0;
    double angle_sigma = 0.0;  // radians
    std::uint64_t seed = 0;
};

/// A source resolved to the parameters active at one instant (step applied).
struct ActiveSource {
    std::string source_id;
    TheveninParams params;
};

/// Steady-state solution of one source feeding one load:
/// I = emf / (Z_th + Z_load), V_pcc = I * Z_load.
/// Throws SingularCircuitError when |Z_th + Z_load| < 1e-12.
MeasurementSet solve_single(const TheveninParams& source, const ComplexImpedance& z_load,
                            std::string_view source_id = "source");

/// Open-circuit case: branch current zero, V_pcc equals the source emf.
MeasurementSet solve_single_no_load(const TheveninParams& source,
                                    std::string_view source_id = "source");

/// One-node nodal solution for n parallel sources feeding a common load:
///   V_pcc * (sum 1/Z_k + 1/Z_load) = sum emf_k / Z_k
/// with per-branch currents I_k = (emf_k - V_pcc) / Z_k.
MeasurementSet solve_parallel(std::span<const ActiveSource> sources,
                              const ComplexImpedance& z_load);

/// Parameters of `spec` active at time t (the step applies from t >= step.time_s).
TheveninParams params_at(const SourceSpec& spec, double t);

/// Load active at time t: the latest entry with time <= t. Instants before the
/// first entry use the first entry.
const ComplexImpedance& load_at(const LoadSchedule& schedule, double t);

/// Simulates sample instants 0, T, 2T, ... <= horizon and returns one
/// measurement set per instant. Noise is applied per sample from a
/// counter-based generator, so the output is a pure function of the inputs
/// and identical under either execution policy.
std::vector<MeasurementSet> run_schedule(std::span<const SourceSpec> sources,
                                         const LoadSchedule& schedule, const NoiseSpec& noise,
                                         double sample_period_s, double horizon_s,
                                         Exec exec = Exec::parallel);

}  // namespace thevest
