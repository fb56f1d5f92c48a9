#include "thevest/applications.hpp"

#include <cmath>

#include "thevest/errors.hpp"

namespace thevest {

double load_power(double v_th, double r_th, double r_load) {
    if (v_th < 0.0 || r_th < 0.0 || r_load < 0.0) {
        throw InvalidInputError("load_power: inputs must be non-negative");
    }
    if (!(r_th + r_load > 0.0)) {
        throw InvalidInputError("load_power: R_th + R_load must be positive");
    }
    const double i = v_th / (r_th + r_load);
    return i * i * r_load;
}

double load_power_complex(double v_th, const ComplexImpedance& z_th,
                          const ComplexImpedance& z_load) {
    if (v_th < 0.0) {
        throw InvalidInputError("load_power_complex: v_th must be non-negative");
    }
    const std::complex<double> z_total = z_th.to_complex() + z_load.to_complex();
    if (std::abs(z_total) < 1e-12) {
        throw InvalidInputError("load_power_complex: total impedance is singular");
    }
    const double i = v_th / std::abs(z_total);
    return i * i * z_load.resistance;
}

SocCalibration::SocCalibration(double a, double b) : slope_a(a), intercept_b(b) {
    if (a == 0.0 || !std::isfinite(a) || !std::isfinite(b)) {
        throw InvalidInputError("SOC calibration requires a finite, nonzero slope");
    }
}

SocEstimate soc_from_voc(double voc, const SocCalibration& cal) {
    SocEstimate est;
    est.soc = (voc - cal.intercept_b) / cal.slope_a;
    est.out_of_range = est.soc < 0.0 || est.soc > 1.0;
    return est;
}

double stability_derivative(const StabilityInput& inp) {
    if (inp.e_th < 0.0 || !(inp.z_th > 0.0) || inp.y_load < 0.0) {
        throw InvalidInputError(
            "stability_derivative: requires e_th >= 0, z_th > 0, y_load >= 0");
    }
    const double zy = inp.z_th * inp.y_load;
    const double den_root =
        1.0 + zy * zy + 2.0 * zy * std::cos(inp.theta_z - inp.phi_load);
    const double den = den_root * den_root;
    if (den < 1e-12) {
        throw InvalidInputError("stability_derivative: denominator is singular");
    }
    return inp.e_th * inp.e_th * (1.0 - zy * zy) / den;
}

bool at_stability_limit(const StabilityInput& inp, double tol) {
    return std::abs(stability_derivative(inp)) < tol;
}

}  // namespace thevest
