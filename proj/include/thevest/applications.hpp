#pragma once

#include <complex>

#include "thevest/phasor.hpp"

namespace thevest {

/// Power delivered to a resistive load: P_L = (V_th / (R_th + R_L))^2 * R_L.
/// Maximized at R_L = R_th. Throws InvalidInputError when R_th + R_L <= 0 or
/// any input is negative.
double load_power(double v_th, double r_th, double r_load);

/// Complex generalization: P_L = |V_th / (Z_th + Z_L)|^2 * Re(Z_L), maximized
/// at Z_L = conj(Z_th).
double load_power_complex(double v_th, const ComplexImpedance& z_th,
                          const ComplexImpedance& z_load);

/// Affine open-circuit-voltage model voc = a * soc + b.
struct SocCalibration {
    double slope_a = 1.0;      // volts per unit SOC
    double intercept_b = 0.0;  // volts

    SocCalibration(double a, double b);
};

struct SocEstimate {
    double soc = 0.0;          // fraction, not clamped
    bool out_of_range = false;  // set when soc falls outside [0, 1]
};

/// soc = (voc - b) / a. Out-of-range values are flagged, never clamped.
SocEstimate soc_from_voc(double voc, const SocCalibration& cal);

/// Operating point for the loadability derivative. Angles are the impedance
/// angles of the source and the load respectively.
struct StabilityInput {
    double e_th = 0.0;      // volts, source emf magnitude
    double z_th = 0.0;      // ohms, source impedance magnitude, > 0
    double theta_z = 0.0;   // radians, source impedance angle
    double y_load = 0.0;    // siemens, load admittance magnitude 1/|Z_L|
    double phi_load = 0.0;  // radians, load impedance angle
};

/// Sensitivity of delivered apparent power to load admittance:
///   dS/dY = E^2 (1 - Y^2 Z^2) / (1 + Z^2 Y^2 + 2 Z Y cos(theta - phi))^2
/// Zero exactly at Y = 1/Z, the loadability limit; positive below, negative
/// above. Throws InvalidInputError when the denominator is below 1e-12.
double stability_derivative(const StabilityInput& inp);

/// True when |dS/dY| < tol, i.e. the operating point sits at the loadability
/// limit |Z_th| = |Z_load|.
bool at_stability_limit(const StabilityInput& inp, double tol = 1e-9);

}  // namespace thevest
