#include "thevest/estimator_linear.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "thevest/errors.hpp"

namespace thevest {

namespace {

void require_single_branch(std::span<const MeasurementSet> measurements) {
    for (const auto& m : measurements) {
        if (m.branches.size() != 1) {
            throw InvalidInputError(
                "estimator expects single-branch measurement sets; split multi-source "
                "batches per source first");
        }
    }
}

}  // namespace

LinearSystem assemble(std::span<const MeasurementSet> measurements) {
    if (measurements.size() < 2) {
        throw InvalidInputError("at least two measurement sets are required");
    }
    require_single_branch(measurements);

    const auto n = static_cast<Eigen::Index>(measurements.size());
    LinearSystem sys;
    sys.n_sets = static_cast<int>(n);
    sys.a.setZero(2 * n, 4);
    sys.y.resize(2 * n);

    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& m = measurements[static_cast<std::size_t>(k)];
        const std::complex<double> v = to_rect(m.v_pcc);
        const std::complex<double> i = to_rect(m.branches.front().current);
        const double a = i.real();
        const double b = i.imag();
        sys.a(2 * k, 0) = 1.0;
        sys.a(2 * k, 2) = -a;
        sys.a(2 * k, 3) = b;
        sys.a(2 * k + 1, 1) = 1.0;
        sys.a(2 * k + 1, 2) = -b;
        sys.a(2 * k + 1, 3) = -a;
        sys.y(2 * k) = v.real();
        sys.y(2 * k + 1) = v.imag();
    }
    return sys;
}

LinearEstimate solve_linear(const LinearSystem& sys) {
    if (sys.a.rows() != 2 * sys.n_sets || sys.a.cols() != 4 || sys.y.size() != sys.a.rows()) {
        throw InvalidInputError("malformed linear system");
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sigma = svd.singularValues();
    const double smax = sigma(0);
    const double smin = sigma(sigma.size() - 1);

    // cond(A^T A) = cond2(A)^2
    double cond = std::numeric_limits<double>::infinity();
    if (smin > 0.0 && smax > 0.0) {
        const double ratio = smax / smin;
        cond = ratio * ratio;
    }
    if (!(cond < kCondError)) {
        std::ostringstream msg;
        msg << "degenerate regression system: cond(A^T A) = " << cond
            << " exceeds " << kCondError
            << "; the snapshots are too few or too similar to identify the parameters";
        throw DegenerateSystemError(msg.str(), cond);
    }

    LinearEstimate est;
    est.x_hat = svd.solve(sys.y);
    est.params = recover_polar(est.x_hat);
    est.condition_number = cond;
    est.conditioning_warning = cond > kCondWarn;
    est.residual_norm = (sys.y - sys.a * est.x_hat).norm();
    return est;
}

TheveninParams recover_polar(const Eigen::Vector4d& x_hat) {
    const Phasor v = from_rect(x_hat(0), x_hat(1));
    TheveninParams p;
    p.v_th = v.magnitude;
    p.theta = v.angle;
    p.r_th = x_hat(2);
    p.x_th = x_hat(3);
    return p;
}

EstimateReport estimate_linear(std::span<const MeasurementSet> measurements,
                               const std::optional<TheveninParams>& truth) {
    const LinearSystem sys = assemble(measurements);
    const LinearEstimate est = solve_linear(sys);

    EstimateReport report;
    report.params = est.params;
    report.residual_norm = est.residual_norm;
    report.iterations = 1;
    report.function_evals = 1;
    report.converged = true;
    report.condition_estimate = est.condition_number;
    report.conditioning_warning = est.conditioning_warning;
    report.negative_impedance = est.params.r_th < 0.0 || est.params.x_th < 0.0;
    report.x_hat = {est.x_hat(0), est.x_hat(1), est.x_hat(2), est.x_hat(3)};
    if (truth) {
        report.error_vs_truth = errors_vs_truth(normalized(*truth), report.params);
    }
    return report;
}

}  // namespace thevest
