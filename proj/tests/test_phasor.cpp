#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "thevest/errors.hpp"
#include "thevest/phasor.hpp"

using namespace thevest;
using std::numbers::pi;

TEST_CASE("normalize_angle maps into (-pi, pi]") {
    CHECK(normalize_angle(0.0) == 0.0);
    CHECK(normalize_angle(3.0 * pi) == doctest::Approx(pi).epsilon(1e-15));
    CHECK(normalize_angle(-pi) == doctest::Approx(pi).epsilon(1e-15));
    CHECK(normalize_angle(pi) == pi);
    CHECK_THROWS_AS(normalize_angle(std::numeric_limits<double>::infinity()), InvalidInputError);
    CHECK_THROWS_AS(normalize_angle(std::nan("")), InvalidInputError);
}

TEST_CASE("normalize_angle is idempotent and 2pi-periodic") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    std::uniform_int_distribution<int> turns(-5, 5);
    for (int i = 0; i < 500; ++i) {
        const double a = u(rng);
        const double n = normalize_angle(a);
        CHECK(n > -pi);
        CHECK(n <= pi);
        CHECK(normalize_angle(n) == n);
        const double shifted = normalize_angle(a + 2.0 * pi * turns(rng));
        CHECK(shifted == doctest::Approx(n).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("phasor to rectangular") {
    const auto z1 = to_rect(Phasor{1.0, 0.0});
    CHECK(z1.real() == 1.0);
    CHECK(z1.imag() == 0.0);

    const auto z2 = to_rect(Phasor{70.7107, 0.0});
    CHECK(z2.real() == 70.7107);
    CHECK(z2.imag() == 0.0);

    const auto z3 = to_rect(Phasor{2.0, pi / 2.0});
    CHECK(std::abs(z3.real()) < 1e-12);
    CHECK(z3.imag() == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("rectangular to phasor") {
    const Phasor p1 = from_rect(3.0, 4.0);
    CHECK(p1.magnitude == doctest::Approx(5.0).epsilon(1e-14));
    // atan2(4, 3), frozen from independent arithmetic
    CHECK(p1.angle == doctest::Approx(0.9272952180016122).epsilon(1e-14));

    const Phasor origin = from_rect(0.0, 0.0);
    CHECK(origin.magnitude == 0.0);
    CHECK(origin.angle == 0.0);

    const Phasor neg = from_rect(-1.0, 0.0);
    CHECK(neg.magnitude == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(neg.angle == pi);
}

TEST_CASE("round trip preserves phasors") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> mag(1e-6, 1e4);
    std::uniform_real_distribution<double> ang(-pi + 1e-9, pi);
    for (int i = 0; i < 1000; ++i) {
        const Phasor p{mag(rng), ang(rng)};
        const Phasor q = from_rect(to_rect(p));
        CHECK(std::abs(q.magnitude - p.magnitude) <= 1e-12 * p.magnitude);
        CHECK(std::abs(q.angle - p.angle) <= 1e-12);
    }
}

TEST_CASE("phasor constructor folds negative magnitude and wraps the angle") {
    const Phasor p{-2.0, 0.0};
    CHECK(p.magnitude == 2.0);
    CHECK(p.angle == pi);

    const Phasor q{1.0, 5.0 * pi};
    CHECK(q.angle == doctest::Approx(pi).epsilon(1e-15));

    CHECK_THROWS_AS(Phasor(std::nan(""), 0.0), InvalidInputError);
}

TEST_CASE("positive sequence of special sets") {
    const double v = 230.0;
    SUBCASE("balanced set returns phase A") {
        const ThreePhaseSample s{Phasor{v, 0.0}, Phasor{v, -2.0 * pi / 3.0},
                                 Phasor{v, 2.0 * pi / 3.0}};
        const Phasor p = positive_sequence(s);
        CHECK(p.magnitude == doctest::Approx(v).epsilon(1e-13));
        CHECK(std::abs(p.angle) < 1e-13);
    }
    SUBCASE("zero-sequence set vanishes") {
        const ThreePhaseSample s{Phasor{v, 0.0}, Phasor{v, 0.0}, Phasor{v, 0.0}};
        CHECK(positive_sequence(s).magnitude < 1e-12 * v);
    }
    SUBCASE("single energized phase yields one third") {
        const ThreePhaseSample s{Phasor{1.0, 0.0}, Phasor{}, Phasor{}};
        const Phasor p = positive_sequence(s);
        // (1/3)(A + a*0 + a^2*0), frozen from direct evaluation
        CHECK(p.magnitude == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
        CHECK(std::abs(p.angle) < 1e-14);
    }
}

TEST_CASE("positive sequence is linear") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> mag(0.0, 100.0);
    std::uniform_real_distribution<double> ang(-3.0, 3.0);
    const auto random_sample = [&] {
        return ThreePhaseSample{Phasor{mag(rng), ang(rng)}, Phasor{mag(rng), ang(rng)},
                                Phasor{mag(rng), ang(rng)}};
    };
    for (int i = 0; i < 200; ++i) {
        const ThreePhaseSample s1 = random_sample();
        const ThreePhaseSample s2 = random_sample();
        const ThreePhaseSample sum{from_rect(to_rect(s1.phase_a) + to_rect(s2.phase_a)),
                                   from_rect(to_rect(s1.phase_b) + to_rect(s2.phase_b)),
                                   from_rect(to_rect(s1.phase_c) + to_rect(s2.phase_c))};
        const auto lhs = to_rect(positive_sequence(sum));
        const auto rhs = to_rect(positive_sequence(s1)) + to_rect(positive_sequence(s2));
        CHECK(std::abs(lhs - rhs) <= 1e-9);
    }
}

TEST_CASE("positive sequence of any balanced positive set returns phase A") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> mag(0.1, 500.0);
    std::uniform_real_distribution<double> ang(-3.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        const Phasor a{mag(rng), ang(rng)};
        const ThreePhaseSample s{a, Phasor{a.magnitude, a.angle - 2.0 * pi / 3.0},
                                 Phasor{a.magnitude, a.angle + 2.0 * pi / 3.0}};
        const Phasor p = positive_sequence(s);
        CHECK(std::abs(p.magnitude - a.magnitude) <= 1e-12 * a.magnitude);
        CHECK(std::abs(normalize_angle(p.angle - a.angle)) <= 1e-12);
    }
}

TEST_CASE("normalized folds Thevenin parameters") {
    const TheveninParams p = normalized(TheveninParams{-70.0, 0.25, 1.0, 0.377});
    CHECK(p.v_th == 70.0);
    CHECK(p.theta == doctest::Approx(0.25 - pi).epsilon(1e-15));
    CHECK(p.r_th == 1.0);
}

TEST_CASE("validate_batch enforces consistent source lists") {
    MeasurementSet a;
    a.v_pcc = Phasor{1.0, 0.0};
    a.branches = {{"gen", Phasor{1.0, 0.0}}, {"grid", Phasor{2.0, 0.0}}};
    MeasurementSet b = a;

    std::vector<MeasurementSet> ok{a, b};
    CHECK_NOTHROW(validate_batch(ok));

    MeasurementSet swapped = a;
    std::swap(swapped.branches[0], swapped.branches[1]);
    std::vector<MeasurementSet> bad_order{a, swapped};
    CHECK_THROWS_AS(validate_batch(bad_order), InvalidInputError);

    MeasurementSet dup = a;
    dup.branches[1].source_id = "gen";
    std::vector<MeasurementSet> dup_ids{dup};
    CHECK_THROWS_AS(validate_batch(dup_ids), InvalidInputError);

    CHECK_THROWS_AS(validate_batch(std::vector<MeasurementSet>{}), InvalidInputError);
}
