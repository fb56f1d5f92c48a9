#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>

#include <Eigen/Dense>

#include "thevest/phasor.hpp"
#include "thevest/report.hpp"

namespace thevest {

/// Seeded random start: v_th in [0.5, 2] * mean |V_pcc|, theta uniform over
/// (-pi, pi], r_th and x_th in [0, mean |V_pcc|/|I|].
struct RandomGuess {
    std::uint64_t seed = 0;
};

/// Warm start from the linear estimator; falls back to RandomGuess{seed}
/// when the linear solve is degenerate.
struct FromLinearGuess {
    std::uint64_t fallback_seed = 0;
};

using InitialGuess = std::variant<RandomGuess, TheveninParams, FromLinearGuess>;

struct NlsConfig {
    int max_iterations = 8000;      // accepted damped steps
    int max_function_evals = 5000;  // residual evaluations
    double gradient_tol = 1e-10;    // on ||J^T r||_inf
    double step_tol = 1e-12;        // on ||dx||_inf
    InitialGuess initial_guess = RandomGuess{};
    bool record_history = false;  // keep the accepted objective values in the report
};

/// Predicted rectangular PCC voltage for one snapshot:
///   [ v cos(theta) - a r + b x ]       a = I cos(phi_i)
///   [ v sin(theta) - b r - a x ]       b = I sin(phi_i)
/// The snapshot must carry exactly one branch current.
Eigen::Vector2d model_f(const TheveninParams& x, const MeasurementSet& m);

/// Analytic Jacobian of model_f w.r.t. (v_th, theta, r_th, x_th):
///   [ cos(theta)   -v sin(theta)   -a    b ]
///   [ sin(theta)    v cos(theta)   -b   -a ]
Eigen::Matrix<double, 2, 4> jacobian_f(const TheveninParams& x, const MeasurementSet& m);

/// Damped Gauss-Newton fit of the stacked squared residual over all
/// snapshots. Accepted steps never increase the objective; convergence is
/// declared on a small gradient or a small step, capped by the iteration and
/// evaluation limits (converged = false, best parameters so far, when a cap
/// is hit). The returned theta is wrapped and v_th is non-negative, the sign
/// absorbed into theta.
///
/// Throws InvalidInputError on fewer than two snapshots and
/// DegenerateSystemError when all snapshots are identical or every branch
/// current is zero (R and X unidentifiable).
EstimateReport estimate_nonlinear(std::span<const MeasurementSet> measurements,
                                  const NlsConfig& cfg = {},
                                  const std::optional<TheveninParams>& truth = std::nullopt);

}  // namespace thevest
