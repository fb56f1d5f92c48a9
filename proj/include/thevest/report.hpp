#pragma once

#include <array>
#include <optional>
#include <vector>

#include "thevest/phasor.hpp"

namespace thevest {

enum class Method { nonlinear, linear };

/// Signed percentage errors 100*(true - est)/true for the magnitude and
/// impedance components, following the usual table convention. The angle
/// column is the wrapped signed difference in radians: reference angles are
/// typically zero, so a percentage there would be meaningless.
struct ParamErrors {
    double v_th_pct = 0.0;
    double theta_err_rad = 0.0;
    double r_th_pct = 0.0;
    double x_th_pct = 0.0;
};

/// Percentage entries are NaN when the corresponding true value is zero.
ParamErrors errors_vs_truth(const TheveninParams& truth, const TheveninParams& estimate);

/// Result of one estimation run, shared by the nonlinear and linear paths.
struct EstimateReport {
    TheveninParams params;
    double residual_norm = 0.0;  // stacked 2-norm of y - f(x) at the estimate
    int iterations = 0;
    int function_evals = 0;
    bool converged = false;
    double condition_estimate = 0.0;  // condition number of the final normal matrix
    bool conditioning_warning = false;
    bool negative_impedance = false;  // r_th or x_th came out negative; reported, not clamped

    /// Linear estimator only: the raw regression solution
    /// (V cos theta, V sin theta, R, X).
    std::optional<std::array<double, 4>> x_hat;

    std::optional<ParamErrors> error_vs_truth;

    /// Accepted objective values, oldest first. Filled only when
    /// NlsConfig::record_history is set; never serialized.
    std::vector<double> objective_history;
};

}  // namespace thevest
