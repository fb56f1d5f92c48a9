#include "thevest/estimator_nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "thevest/errors.hpp"
#include "thevest/estimator_linear.hpp"

namespace thevest {

namespace {

struct Snapshot {
    double y1, y2;  // rectangular PCC voltage
    double a, b;    // rectangular branch current
};

std::vector<Snapshot> prepare(std::span<const MeasurementSet> measurements) {
    if (measurements.size() < 2) {
        throw InvalidInputError("at least two measurement sets are required");
    }
    std::vector<Snapshot> snaps;
    snaps.reserve(measurements.size());
    for (const auto& m : measurements) {
        if (m.branches.size() != 1) {
            throw InvalidInputError(
                "estimator expects single-branch measurement sets; split multi-source "
                "batches per source first");
        }
        const auto v = to_rect(m.v_pcc);
        const auto i = to_rect(m.branches.front().current);
        snaps.push_back({v.real(), v.imag(), i.real(), i.imag()});
    }

    // All-identical snapshots repeat the same two equations and cannot
    // identify four unknowns.
    double scale = 1.0;
    for (const auto& s : snaps) {
        scale = std::max({scale, std::abs(s.y1), std::abs(s.y2), std::abs(s.a), std::abs(s.b)});
    }
    const auto& s0 = snaps.front();
    const bool all_same = std::all_of(snaps.begin(), snaps.end(), [&](const Snapshot& s) {
        const double d = std::max({std::abs(s.y1 - s0.y1), std::abs(s.y2 - s0.y2),
                                   std::abs(s.a - s0.a), std::abs(s.b - s0.b)});
        return d <= 1e-12 * scale;
    });
    if (all_same) {
        throw DegenerateSystemError(
            "all measurement sets are identical; at least two distinct operating "
            "points are required",
            std::numeric_limits<double>::infinity());
    }
    const bool no_current = std::all_of(snaps.begin(), snaps.end(), [&](const Snapshot& s) {
        return std::hypot(s.a, s.b) <= 1e-14;
    });
    if (no_current) {
        throw DegenerateSystemError(
            "branch current is zero in every measurement set; R and X are unidentifiable",
            std::numeric_limits<double>::infinity());
    }
    return snaps;
}

Eigen::VectorXd residual_at(const std::vector<Snapshot>& snaps, const Eigen::Vector4d& x) {
    Eigen::VectorXd r(2 * static_cast<Eigen::Index>(snaps.size()));
    const double c = std::cos(x(1));
    const double s = std::sin(x(1));
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(snaps.size()); ++k) {
        const auto& m = snaps[static_cast<std::size_t>(k)];
        r(2 * k) = m.y1 - (x(0) * c - m.a * x(2) + m.b * x(3));
        r(2 * k + 1) = m.y2 - (x(0) * s - m.b * x(2) - m.a * x(3));
    }
    return r;
}

Eigen::MatrixXd jacobian_at(const std::vector<Snapshot>& snaps, const Eigen::Vector4d& x) {
    Eigen::MatrixXd j(2 * static_cast<Eigen::Index>(snaps.size()), 4);
    const double c = std::cos(x(1));
    const double s = std::sin(x(1));
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(snaps.size()); ++k) {
        const auto& m = snaps[static_cast<std::size_t>(k)];
        j(2 * k, 0) = c;
        j(2 * k, 1) = -x(0) * s;
        j(2 * k, 2) = -m.a;
        j(2 * k, 3) = m.b;
        j(2 * k + 1, 0) = s;
        j(2 * k + 1, 1) = x(0) * c;
        j(2 * k + 1, 2) = -m.b;
        j(2 * k + 1, 3) = -m.a;
    }
    return j;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Eigen::Vector4d random_guess(const std::vector<Snapshot>& snaps, std::uint64_t seed) {
    double v_sum = 0.0;
    double z_sum = 0.0;
    int z_count = 0;
    for (const auto& s : snaps) {
        const double v = std::hypot(s.y1, s.y2);
        const double i = std::hypot(s.a, s.b);
        v_sum += v;
        if (i > 1e-14) {
            z_sum += v / i;
            ++z_count;
        }
    }
    const double v_mean = v_sum / static_cast<double>(snaps.size());
    const double v_scale = v_mean > 0.0 ? v_mean : 1.0;
    const double z_scale = z_count > 0 ? z_sum / z_count : 1.0;

    std::mt19937_64 rng(splitmix64(seed ^ 0x7468657665737421ULL));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::Vector4d x;
    x(0) = (0.5 + 1.5 * u(rng)) * v_scale;
    x(1) = normalize_angle(-std::numbers::pi + 2.0 * std::numbers::pi * u(rng));
    x(2) = u(rng) * z_scale;
    x(3) = u(rng) * z_scale;
    return x;
}

Eigen::Vector4d as_vector(const TheveninParams& p) {
    const TheveninParams n = normalized(p);
    return {n.v_th, n.theta, n.r_th, n.x_th};
}

double condition_of_normal_matrix(const Eigen::Matrix4d& jtj) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(jtj);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (lo <= 0.0 || hi <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return hi / lo;
}

}  // namespace

Eigen::Vector2d model_f(const TheveninParams& x, const MeasurementSet& m) {
    if (m.branches.size() != 1) {
        throw InvalidInputError("model_f expects a single-branch measurement set");
    }
    const auto i = to_rect(m.branches.front().current);
    const double a = i.real();
    const double b = i.imag();
    return {x.v_th * std::cos(x.theta) - a * x.r_th + b * x.x_th,
            x.v_th * std::sin(x.theta) - b * x.r_th - a * x.x_th};
}

Eigen::Matrix<double, 2, 4> jacobian_f(const TheveninParams& x, const MeasurementSet& m) {
    if (m.branches.size() != 1) {
        throw InvalidInputError("jacobian_f expects a single-branch measurement set");
    }
    const auto i = to_rect(m.branches.front().current);
    const double a = i.real();
    const double b = i.imag();
    Eigen::Matrix<double, 2, 4> j;
    j << std::cos(x.theta), -x.v_th * std::sin(x.theta), -a, b,
         std::sin(x.theta),  x.v_th * std::cos(x.theta), -b, -a;
    return j;
}

EstimateReport estimate_nonlinear(std::span<const MeasurementSet> measurements,
                                  const NlsConfig& cfg,
                                  const std::optional<TheveninParams>& truth) {
    if (cfg.max_iterations <= 0 || cfg.max_function_evals <= 0) {
        throw InvalidInputError("iteration and evaluation caps must be positive");
    }
    if (!(cfg.gradient_tol > 0.0) || !(cfg.step_tol > 0.0)) {
        throw InvalidInputError("tolerances must be positive");
    }
    const std::vector<Snapshot> snaps = prepare(measurements);

    Eigen::Vector4d x;
    if (const auto* rnd = std::get_if<RandomGuess>(&cfg.initial_guess)) {
        x = random_guess(snaps, rnd->seed);
    } else if (const auto* explicit_guess = std::get_if<TheveninParams>(&cfg.initial_guess)) {
        x = as_vector(*explicit_guess);
    } else {
        const auto& warm = std::get<FromLinearGuess>(cfg.initial_guess);
        try {
            x = as_vector(estimate_linear(measurements).params);
        } catch (const EstimationError&) {
            x = random_guess(snaps, warm.fallback_seed);
        }
    }

    EstimateReport report;
    int evals = 0;
    int iterations = 0;

    Eigen::VectorXd r = residual_at(snaps, x);
    ++evals;
    double objective = r.squaredNorm();
    if (cfg.record_history) {
        report.objective_history.push_back(objective);
    }

    double lambda = 1e-3;
    bool converged = false;
    bool stalled = false;
    Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();

    while (!stalled && iterations < cfg.max_iterations && evals < cfg.max_function_evals) {
        const Eigen::MatrixXd j = jacobian_at(snaps, x);
        jtj = j.transpose() * j;
        const Eigen::Vector4d g = j.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() < cfg.gradient_tol) {
            converged = true;
            break;
        }

        // Inflate the damping until a step is accepted or the caps trip.
        bool accepted = false;
        while (iterations < cfg.max_iterations && evals < cfg.max_function_evals) {
            const Eigen::Matrix4d damped = jtj + lambda * Eigen::Matrix4d::Identity();
            const Eigen::Vector4d dx = damped.ldlt().solve(g);
            if (!dx.allFinite()) {
                lambda *= 10.0;
                if (lambda > 1e100) {
                    stalled = true;
                    break;
                }
                continue;
            }
            if (dx.lpNorm<Eigen::Infinity>() < cfg.step_tol) {
                converged = true;
                break;
            }
            Eigen::Vector4d x_trial = x + dx;
            x_trial(1) = normalize_angle(x_trial(1));
            const Eigen::VectorXd r_trial = residual_at(snaps, x_trial);
            ++evals;
            const double obj_trial = r_trial.squaredNorm();
            if (obj_trial <= objective) {
                x = x_trial;
                r = r_trial;
                objective = obj_trial;
                lambda = std::max(lambda * 0.1, 1e-300);
                ++iterations;
                accepted = true;
                if (cfg.record_history) {
                    report.objective_history.push_back(objective);
                }
                break;
            }
            lambda *= 10.0;
            if (lambda > 1e100) {
                stalled = true;
                break;
            }
        }
        if (!accepted) {
            break;  // converged via step criterion, a cap tripped, or stalled
        }
    }

    const TheveninParams params =
        normalized(TheveninParams{x(0), x(1), x(2), x(3)});
    report.params = params;
    report.residual_norm = std::sqrt(objective);
    report.iterations = iterations;
    report.function_evals = evals;
    report.converged = converged;
    report.condition_estimate = condition_of_normal_matrix(jtj);
    report.negative_impedance = params.r_th < 0.0 || params.x_th < 0.0;
    if (truth) {
        report.error_vs_truth = errors_vs_truth(normalized(*truth), params);
    }
    return report;
}

}  // namespace thevest
