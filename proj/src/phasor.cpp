#include "thevest/phasor.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "thevest/errors.hpp"

namespace thevest {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double normalize_angle(double angle_rad) {
    if (!std::isfinite(angle_rad)) {
        throw InvalidInputError("normalize_angle: angle must be finite");
    }
    double r = std::fmod(angle_rad, kTwoPi);  // (-2pi, 2pi)
    if (r <= -std::numbers::pi) {
        r += kTwoPi;
    } else if (r > std::numbers::pi) {
        r -= kTwoPi;
    }
    return r;
}

Phasor::Phasor(double mag, double angle_rad) {
    if (!std::isfinite(mag)) {
        throw InvalidInputError("Phasor: magnitude must be finite");
    }
    if (mag < 0.0) {
        mag = -mag;
        angle_rad += std::numbers::pi;
    }
    magnitude = mag;
    angle = normalize_angle(angle_rad);
}

std::complex<double> to_rect(const Phasor& p) {
    return {p.magnitude * std::cos(p.angle), p.magnitude * std::sin(p.angle)};
}

Phasor from_rect(std::complex<double> z) {
    const double mag = std::hypot(z.real(), z.imag());
    if (mag == 0.0) {
        return Phasor{0.0, 0.0};
    }
    return Phasor{mag, std::atan2(z.imag(), z.real())};
}

TheveninParams normalized(const TheveninParams& p) {
    TheveninParams out = p;
    if (out.v_th < 0.0) {
        out.v_th = -out.v_th;
        out.theta += std::numbers::pi;
    }
    out.theta = normalize_angle(out.theta);
    return out;
}

void validate_batch(std::span<const MeasurementSet> sets) {
    if (sets.empty()) {
        throw InvalidInputError("measurement batch is empty");
    }
    const auto& first = sets.front();
    {
        std::set<std::string> seen;
        for (const auto& b : first.branches) {
            if (!seen.insert(b.source_id).second) {
                throw InvalidInputError("duplicate source_id '" + b.source_id +
                                        "' within one measurement set");
            }
        }
    }
    for (const auto& set : sets) {
        if (set.branches.size() != first.branches.size()) {
            throw InvalidInputError("inconsistent source list across measurement sets");
        }
        for (std::size_t i = 0; i < set.branches.size(); ++i) {
            if (set.branches[i].source_id != first.branches[i].source_id) {
                throw InvalidInputError(
                    "inconsistent source list across measurement sets (expected '" +
                    first.branches[i].source_id + "', got '" + set.branches[i].source_id + "')");
            }
        }
    }
}

Phasor positive_sequence(const ThreePhaseSample& s) {
    const std::complex<double> alpha = std::polar(1.0, kTwoPi / 3.0);
    const std::complex<double> sum =
        to_rect(s.phase_a) + alpha * to_rect(s.phase_b) + alpha * alpha * to_rect(s.phase_c);
    return from_rect(sum / 3.0);
}

}  // namespace thevest
