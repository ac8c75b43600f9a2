#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "softcue/synth.hpp"
#include "support.hpp"

using namespace softcue;
using namespace softcue::synth;
using Catch::Approx;

namespace {

std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST_CASE("triangle: 1 N/s to 2 N lasts four seconds") {
    const Trace tr = triangle_profile(1.0, 2.0, 1000.0);
    CHECK(tr.time(tr.size() - 1) == Approx(4.0));
    const std::size_t apex = argmax(tr.values());
    CHECK(tr.value(apex) == 2.0);
    CHECK(tr.time(apex) == Approx(2.0));
    CHECK(tr.value(0) == 0.0);
    CHECK(tr.value(tr.size() - 1) == 0.0);
}

TEST_CASE("triangle: 2 N/s to 2 N peaks at one second") {
    const Trace tr = triangle_profile(2.0, 2.0, 1000.0);
    CHECK(tr.time(argmax(tr.values())) == Approx(1.0));
}

TEST_CASE("triangle: maximum equals the peak for awkward sampling") {
    testing::Rng rng(51);
    for (int i = 0; i < 200; ++i) {
        const double rate = rng.uniform(0.1, 5.0), peak = rng.uniform(0.1, 5.0), fs = rng.uniform(20.0, 2000.0);
        const Trace tr = triangle_profile(rate, peak, fs);
        CHECK(*std::max_element(tr.values().begin(), tr.values().end()) == peak);
        CHECK(tr.time(tr.size() - 1) == Approx(2.0 * peak / rate).epsilon(1e-12));
        for (std::size_t j = 1; j < tr.size(); ++j) CHECK(tr.time(j) > tr.time(j - 1));
    }
    CHECK_THROWS_AS(triangle_profile(0.0, 1.0, 100.0), ArgumentError);
}

TEST_CASE("piecewise profile follows its knots") {
    const Trace tr = piecewise_profile({{0.0, 0.0}, {0.5, 0.0}, {1.5, 1.0}, {2.0, 1.0}}, 100.0);
    CHECK(tr.size() == 201);
    CHECK(tr.value(50) == 0.0);
    CHECK(tr.value(100) == Approx(0.5));
    CHECK(tr.value(150) == Approx(1.0));
    CHECK(tr.value(200) == Approx(1.0));
    CHECK_THROWS_AS(piecewise_profile({{0.0, 0.0}}, 100.0), ArgumentError);
    CHECK_THROWS_AS(piecewise_profile({{1.0, 0.0}, {0.5, 1.0}}, 100.0), ArgumentError);
}

TEST_CASE("hertz: zero force gives zero indentation and contact") {
    const auto traces = hertz_trace({}, piecewise_profile({{0.0, 0.0}, {1.0, 1.0}}, 10.0), 0.0, 0);
    CHECK(traces.displacement.value(0) == 0.0);
    CHECK(traces.contact_radius_mm[0] == 0.0);
    CHECK(hertz_displacement(0.0, 10.0, 4.0) == 0.0);
}

TEST_CASE("hertz: closed form against a bisection inversion") {
    const double closed = hertz_displacement(2.0, 10.0, 4.0);
    CHECK(closed == Approx(17.784466522450312).epsilon(1e-14));
    const double inverted =
        softcue::detail::bisect([](double d) { return hertz_force(d, 10.0, 4.0) - 2.0; }, 0.0, 100.0, 1e-14);
    CHECK(closed == Approx(inverted).epsilon(1e-12));
}

TEST_CASE("hertz: doubling indentation scales force by two to the three halves") {
    testing::Rng rng(52);
    for (int i = 0; i < 200; ++i) {
        const double d = rng.uniform(0.01, 5.0), e = rng.uniform(1.0, 200.0), r = rng.uniform(1.0, 10.0);
        CHECK(hertz_force(2.0 * d, e, r) / hertz_force(d, e, r) == Approx(std::pow(2.0, 1.5)).epsilon(1e-14));
        CHECK(hertz_displacement(hertz_force(d, e, r), e, r) == Approx(d).epsilon(1e-12));
    }
}

TEST_CASE("hertz: effective modulus combines both bodies") {
    HertzParams p;
    p.finger_poisson = 0.0;
    p.sphere_poisson = 0.0;
    p.finger_modulus_kpa = 20.0;
    p.sphere_modulus_kpa = 20.0;
    CHECK(effective_modulus_kpa(p) == Approx(10.0));
    p.sphere_poisson = 0.5;
    CHECK_THROWS_AS(hertz_trace(p, triangle_profile(1.0, 1.0, 10.0), 0.0, 0), ArgumentError);
}

TEST_CASE("hertz: contact radius, area and the curvature coupling") {
    const HertzParams p{100.0, 10.0, 0.475, 0.475, 4.0};
    const auto traces = hertz_trace(p, triangle_profile(1.0, 2.0, 200.0), 0.0, 0);
    const double e = effective_modulus_kpa(p) * kpa_to_n_per_mm2;
    for (std::size_t i = 1; i < traces.force.size(); ++i) {
        const double f = traces.force.value(i), d = traces.displacement.value(i);
        const double a = traces.contact_radius_mm[i];
        if (f == 0.0) continue;
        CHECK(std::numbers::pi * a * a == Approx(std::numbers::pi * p.radius_mm * d).epsilon(1e-14));
        CHECK(a * a * a == Approx(3.0 * f * p.radius_mm / (4.0 * e)).epsilon(1e-12));
    }
}

TEST_CASE("hertz: force is increasing and convex in indentation") {
    const double e = 9.0, r = 4.0;
    double prev_f = -1.0, prev_slope = -1.0;
    for (int i = 1; i <= 200; ++i) {
        const double d = 0.05 * i;
        const double f = hertz_force(d, e, r);
        CHECK(f > prev_f);
        if (i > 1) {
            const double slope = (f - prev_f) / 0.05;
            CHECK(slope > prev_slope);
            prev_slope = slope;
        }
        prev_f = f;
    }
}

TEST_CASE("spring: displacement is force over stiffness") {
    const Trace profile = testing::sampled({0.0, 1.0, 2.0}, 10.0);
    const auto traces = spring_trace(1.0, profile, 0.0, 0);
    CHECK(traces.displacement.value(2) == 2.0);
    CHECK(traces.contact_radius_mm.empty());
    CHECK(traces.displacement.channel() == Channel::displacement);
    CHECK(spring_trace(4.0, profile, 0.0, 0).displacement.value(2) == 0.5);
    CHECK_THROWS_AS(spring_trace(0.0, profile, 0.0, 0), ArgumentError);
    CHECK_THROWS_AS(spring_trace(1.0, testing::sampled({0.0, -1.0}, 10.0), 0.0, 0), ArgumentError);
}

TEST_CASE("noise: deterministic per seed, multiplicative on displacement only") {
    const Trace profile = triangle_profile(1.0, 2.0, 500.0);
    const auto a = spring_trace(1.5, profile, 0.02, 99);
    const auto b = spring_trace(1.5, profile, 0.02, 99);
    const auto c = spring_trace(1.5, profile, 0.02, 100);
    CHECK(std::equal(a.displacement.values().begin(), a.displacement.values().end(),
                     b.displacement.values().begin()));
    CHECK_FALSE(std::equal(a.displacement.values().begin(), a.displacement.values().end(),
                           c.displacement.values().begin()));
    CHECK(std::equal(a.force.values().begin(), a.force.values().end(), profile.values().begin()));
    CHECK(a.displacement.value(0) == 0.0);
    double sum = 0.0, ss = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < profile.size(); ++i) {
        if (profile.value(i) < 0.5) continue;
        const double rel = a.displacement.value(i) * 1.5 / profile.value(i) - 1.0;
        sum += rel;
        ss += rel * rel;
        ++n;
    }
    const double mean = sum / static_cast<double>(n);
    CHECK(std::abs(mean) < 0.005);
    CHECK(std::sqrt(ss / static_cast<double>(n) - mean * mean) == Approx(0.02).epsilon(0.15));

    const auto h1 = hertz_trace({}, profile, 0.02, 5);
    const auto h2 = hertz_trace({}, profile, 0.02, 5);
    CHECK(std::equal(h1.displacement.values().begin(), h1.displacement.values().end(),
                     h2.displacement.values().begin()));
    CHECK_THROWS_AS(spring_trace(1.0, profile, -0.1, 0), ArgumentError);
}

TEST_CASE("generated traces keep strictly increasing timestamps and finite values") {
    testing::Rng rng(53);
    for (int i = 0; i < 50; ++i) {
        const Trace profile = triangle_profile(rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0), 300.0);
        HertzParams p;
        p.sphere_modulus_kpa = rng.uniform(5.0, 100.0);
        p.radius_mm = rng.uniform(2.0, 10.0);
        const auto traces = hertz_trace(p, profile, 0.02, static_cast<std::uint64_t>(i));
        for (std::size_t j = 0; j < traces.displacement.size(); ++j) {
            CHECK(std::isfinite(traces.displacement.value(j)));
            if (j > 0) CHECK(traces.displacement.time(j) > traces.displacement.time(j - 1));
        }
    }
}
