#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

namespace thevest {

/// Wraps an angle into (-pi, pi]. The boundary maps -pi itself to +pi.
/// Throws InvalidInputError on non-finite input.
double normalize_angle(double angle_rad);

/// Magnitude/angle form of a steady-state sinusoid. Construction keeps the
/// invariants magnitude >= 0 (a negative magnitude folds into the angle by
/// pi) and angle in (-pi, pi].
struct Phasor {
    double magnitude = 0.0;
    double angle = 0.0;  // radians

    Phasor() = default;
    Phasor(double mag, double angle_rad);
};

/// Rectangular components (magnitude*cos(angle), magnitude*sin(angle)).
std::complex<double> to_rect(const Phasor& p);

/// Inverse of to_rect: magnitude = |z|, angle = atan2(im, re).
/// The origin maps to magnitude 0, angle 0.
Phasor from_rect(std::complex<double> z);
inline Phasor from_rect(double re, double im) { return from_rect({re, im}); }

/// Series impedance R + jX in ohms; positive reactance is inductive.
struct ComplexImpedance {
    double resistance = 0.0;
    double reactance = 0.0;

    std::complex<double> to_complex() const { return {resistance, reactance}; }
    double magnitude() const { return std::hypot(resistance, reactance); }
};

/// The four estimated quantities: source voltage magnitude and angle plus
/// the series resistance and reactance.
struct TheveninParams {
    double v_th = 0.0;   // volts
    double theta = 0.0;  // radians
    double r_th = 0.0;   // ohms
    double x_th = 0.0;   // ohms

    std::complex<double> emf() const { return std::polar(v_th, theta); }
    ComplexImpedance impedance() const { return {r_th, x_th}; }
};

/// Canonical form: v_th >= 0 (negative magnitude folds by pi) and theta
/// wrapped into (-pi, pi].
TheveninParams normalized(const TheveninParams& p);

struct BranchCurrent {
    std::string source_id;
    Phasor current;  // amperes, flowing from the source into the PCC
};

/// One steady-state snapshot at the point of common coupling: the shared
/// node voltage plus one current per source branch.
struct MeasurementSet {
    long long sample_id = 0;
    double time_s = 0.0;
    Phasor v_pcc;  // volts
    std::vector<BranchCurrent> branches;
};

/// Checks that every set carries the same source_id list in the same order
/// and that ids are unique within a set. Throws InvalidInputError otherwise.
void validate_batch(std::span<const MeasurementSet> sets);

struct ThreePhaseSample {
    Phasor phase_a;
    Phasor phase_b;
    Phasor phase_c;
};

/// Fortescue positive-sequence component (A + a*B + a^2*C)/3 with a = 1 at
/// 120 degrees, computed in rectangular form. A balanced positively rotating
/// set returns phase A; a pure zero-sequence set returns zero.
Phasor positive_sequence(const ThreePhaseSample& s);

}  // namespace thevest
