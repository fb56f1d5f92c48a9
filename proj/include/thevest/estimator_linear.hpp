#pragma once

#include <optional>
#include <span>

#include <Eigen/Dense>

#include "thevest/phasor.hpp"
#include "thevest/report.hpp"

namespace thevest {

/// Stacked regression system Y = A X with one 2x4 block per snapshot:
///   [ 1  0  -a   b ]          a = I cos(phi_i)
///   [ 0  1  -b  -a ]          b = I sin(phi_i)
/// and unknowns X = (V cos theta, V sin theta, R, X).
struct LinearSystem {
    Eigen::MatrixXd a;  // 2n x 4
    Eigen::VectorXd y;  // 2n
    int n_sets = 0;
};

struct LinearEstimate {
    Eigen::Vector4d x_hat;
    TheveninParams params;
    double condition_number = 0.0;  // of A^T A
    double residual_norm = 0.0;
    bool conditioning_warning = false;
};

/// cond(A^T A) above kCondError raises DegenerateSystemError; above kCondWarn
/// the estimate carries a warning flag. Too few or too similar snapshots show
/// up here instead of as silently wrong numbers.
inline constexpr double kCondError = 1e10;
inline constexpr double kCondWarn = 1e6;

/// Builds the stacked system from single-branch snapshots, in input order.
/// Requires at least two snapshots.
LinearSystem assemble(std::span<const MeasurementSet> measurements);

/// Least-squares solution via an orthogonal factorization of A (the normal
/// equations characterize the optimum but squaring A is avoided numerically).
LinearEstimate solve_linear(const LinearSystem& sys);

/// Magnitude/angle recovery: v_th = hypot(x1, x2), theta = atan2(x2, x1).
TheveninParams recover_polar(const Eigen::Vector4d& x_hat);

/// assemble + solve_linear, packaged as a standard report.
EstimateReport estimate_linear(std::span<const MeasurementSet> measurements,
                               const std::optional<TheveninParams>& truth = std::nullopt);

}  // namespace thevest
