#include "thevest/circuit_sim.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <exception>
#include <random>
#include <set>

#include "thevest/errors.hpp"

namespace thevest {

namespace {

constexpr double kSingularTol = 1e-12;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Phasor noisy(const Phasor& p, std::mt19937_64& rng, const NoiseSpec& noise) {
    std::normal_distribution<double> mag_eps(0.0, noise.mag_rel_sigma);
    std::normal_distribution<double> ang_eps(0.0, noise.angle_sigma);
    const double mag = p.magnitude * (1.0 + (noise.mag_rel_sigma > 0.0 ? mag_eps(rng) : 0.0));
    const double ang = p.angle + (noise.angle_sigma > 0.0 ? ang_eps(rng) : 0.0);
    return Phasor{mag, ang};
}

void validate_sources(std::span<const SourceSpec> sources, double horizon_s) {
    if (sources.empty()) {
        throw InvalidInputError("at least one source is required");
    }
    std::set<std::string> ids;
    for (const auto& s : sources) {
        if (!ids.insert(s.source_id).second) {
            throw InvalidInputError("duplicate source_id '" + s.source_id + "'");
        }
        if (s.params.v_th < 0.0 || !std::isfinite(s.params.v_th)) {
            throw InvalidInputError("source '" + s.source_id + "': v_th must be finite and >= 0");
        }
        if (s.step) {
            if (!(s.step->time_s > 0.0 && s.step->time_s < horizon_s)) {
                throw InvalidInputError("source '" + s.source_id +
                                        "': step time must lie strictly inside the horizon");
            }
        }
    }
}

void validate_schedule(const LoadSchedule& schedule) {
    if (schedule.entries.empty()) {
        throw InvalidInputError("load schedule is empty");
    }
    std::size_t distinct = 1;
    for (std::size_t i = 1; i < schedule.entries.size(); ++i) {
        if (!(schedule.entries[i].time_s > schedule.entries[i - 1].time_s)) {
            throw InvalidInputError("load schedule times must be strictly increasing");
        }
    }
    const auto& e0 = schedule.entries.front().z_load;
    for (const auto& e : schedule.entries) {
        if (e.z_load.resistance != e0.resistance || e.z_load.reactance != e0.reactance) {
            distinct = 2;
            break;
        }
    }
    if (distinct < 2) {
        throw InvalidInputError(
            "load schedule needs at least two distinct load impedances; "
            "a single operating point cannot identify the source parameters");
    }
}

}  // namespace

MeasurementSet solve_single(const TheveninParams& source, const ComplexImpedance& z_load,
                            std::string_view source_id) {
    const ActiveSource act{std::string(source_id), source};
    return solve_parallel(std::span<const ActiveSource>(&act, 1), z_load);
}

MeasurementSet solve_single_no_load(const TheveninParams& source, std::string_view source_id) {
    MeasurementSet out;
    out.v_pcc = from_rect(source.emf());
    out.branches.push_back({std::string(source_id), Phasor{0.0, 0.0}});
    return out;
}

MeasurementSet solve_parallel(std::span<const ActiveSource> sources,
                              const ComplexImpedance& z_load) {
    if (sources.empty()) {
        throw InvalidInputError("solve_parallel: at least one source is required");
    }
    std::complex<double> y_src = 0.0;
    std::complex<double> injection = 0.0;
    for (const auto& s : sources) {
        const std::complex<double> z = s.params.impedance().to_complex();
        if (std::abs(z) < kSingularTol) {
            throw SingularCircuitError("branch impedance of '" + s.source_id + "' is singular");
        }
        y_src += 1.0 / z;
        injection += s.params.emf() / z;
    }
    // The node equation V*(sum 1/Z_k + 1/Z_load) = sum emf_k/Z_k, multiplied
    // through by Z_load so that a short-circuit load stays solvable:
    //   V * (Z_load * y_src + 1) = Z_load * injection
    const std::complex<double> zl = z_load.to_complex();
    if (sources.size() == 1) {
        const std::complex<double> z_tot = sources[0].params.impedance().to_complex() + zl;
        if (std::abs(z_tot) < kSingularTol) {
            throw SingularCircuitError("total impedance Z_th + Z_load is singular");
        }
    }
    const std::complex<double> denom = zl * y_src + 1.0;
    if (std::abs(denom) < kSingularTol) {
        throw SingularCircuitError("nodal admittance is singular");
    }

    const std::complex<double> v_pcc = zl * injection / denom;
    MeasurementSet out;
    out.v_pcc = from_rect(v_pcc);
    out.branches.reserve(sources.size());
    for (const auto& s : sources) {
        const std::complex<double> z = s.params.impedance().to_complex();
        out.branches.push_back({s.source_id, from_rect((s.params.emf() - v_pcc) / z)});
    }
    return out;
}

TheveninParams params_at(const SourceSpec& spec, double t) {
    TheveninParams p = spec.params;
    if (spec.step && t >= spec.step->time_s) {
        p.r_th = spec.step->new_r;
        p.x_th = spec.step->new_x;
    }
    return p;
}

const ComplexImpedance& load_at(const LoadSchedule& schedule, double t) {
    if (schedule.entries.empty()) {
        throw InvalidInputError("load schedule is empty");
    }
    const ComplexImpedance* active = &schedule.entries.front().z_load;
    for (const auto& e : schedule.entries) {
        if (e.time_s > t) {
            break;
        }
        active = &e.z_load;
    }
    return *active;
}

std::vector<MeasurementSet> run_schedule(std::span<const SourceSpec> sources,
                                         const LoadSchedule& schedule, const NoiseSpec& noise,
                                         double sample_period_s, double horizon_s, Exec exec) {
    if (!(sample_period_s > 0.0) || !std::isfinite(sample_period_s)) {
        throw InvalidInputError("sample period must be positive");
    }
    if (!(horizon_s >= sample_period_s)) {
        throw InvalidInputError("horizon must be at least one sample period");
    }
    if (!(noise.mag_rel_sigma >= 0.0) || !(noise.angle_sigma >= 0.0) ||
        !std::isfinite(noise.mag_rel_sigma) || !std::isfinite(noise.angle_sigma)) {
        throw InvalidInputError("noise sigmas must be finite and >= 0");
    }
    validate_sources(sources, horizon_s);
    validate_schedule(schedule);

    // Sample instants 0, T, ..., n*T <= horizon (tolerant of rounding at the end).
    const auto n_samples =
        static_cast<std::int64_t>(std::floor(horizon_s / sample_period_s + 1e-9)) + 1;

    std::vector<MeasurementSet> out(static_cast<std::size_t>(n_samples));
    const bool noisy_run = noise.mag_rel_sigma > 0.0 || noise.angle_sigma > 0.0;

    const auto solve_instant = [&](std::int64_t k) {
        const double t = static_cast<double>(k) * sample_period_s;
        std::vector<ActiveSource> active;
        active.reserve(sources.size());
        for (const auto& s : sources) {
            active.push_back({s.source_id, params_at(s, t)});
        }
        MeasurementSet set = solve_parallel(active, load_at(schedule, t));
        set.sample_id = k;
        set.time_s = t;
        if (noisy_run) {
            // Counter-based stream: one generator per sample, fixed draw order.
            std::mt19937_64 rng(splitmix64(splitmix64(noise.seed) ^ static_cast<std::uint64_t>(k)));
            set.v_pcc = noisy(set.v_pcc, rng, noise);
            for (auto& b : set.branches) {
                b.current = noisy(b.current, rng, noise);
            }
        }
        out[static_cast<std::size_t>(k)] = std::move(set);
    };

    if (exec == Exec::parallel) {
        std::exception_ptr failure;
#pragma omp parallel for schedule(static)
        for (std::int64_t k = 0; k < n_samples; ++k) {
            try {
                solve_instant(k);
            } catch (...) {
// Exceptions must not unwind out of the worker region.
#pragma omp critical(thevest_run_schedule_failure)
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
    } else {
        for (std::int64_t k = 0; k < n_samples; ++k) {
            solve_instant(k);
        }
    }
    return out;
}

}  // namespace thevest
