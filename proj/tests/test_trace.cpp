#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "softcue/synth.hpp"
#include "softcue/trace.hpp"
#include "support.hpp"

using namespace softcue;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Trace load_force(const std::string& text) {
    std::istringstream in(text);
    return load_trace(in, Channel::force);
}

// Baseline, linear ramp, then hold.
std::vector<double> ramp_and_hold(double fs, double baseline_s, double rise_s, double hold_s, double from,
                                  double to) {
    std::vector<double> v;
    const auto n_base = static_cast<std::size_t>(std::llround(baseline_s * fs));
    const auto n_rise = static_cast<std::size_t>(std::llround(rise_s * fs));
    const auto n_hold = static_cast<std::size_t>(std::llround(hold_s * fs));
    for (std::size_t i = 0; i < n_base; ++i) v.push_back(from);
    for (std::size_t i = 0; i <= n_rise; ++i) v.push_back(from + (to - from) * static_cast<double>(i) / static_cast<double>(n_rise));
    for (std::size_t i = 0; i < n_hold; ++i) v.push_back(to);
    return v;
}

}  // namespace

TEST_CASE("load_trace parses a well-formed file") {
    const Trace tr = load_force("t,force,displacement\n0,0,0\n0.1,0.5,0.2\n0.2,1.0,0.4\n");
    REQUIRE(tr.size() == 3);
    CHECK(tr.channel() == Channel::force);
    CHECK(tr.value(2) == 1.0);
    CHECK(tr.time(1) == 0.1);

    std::istringstream in("t,force,displacement\n0,0,0\n0.1,0.5,0.2\n0.2,1.0,0.4\n");
    const Trace d = load_trace(in, Channel::displacement);
    CHECK(d.value(2) == 0.4);
}

TEST_CASE("load_trace names the line of a duplicated timestamp") {
    try {
        load_force("t,force,displacement\n0,0,\n0.1,1,\n0.1,2,\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 4);
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
}

TEST_CASE("load_trace rejects malformed rows with their line number") {
    try {
        load_force("# source=bench\nt,force,displacement\n0,0,\n0.1,abc,\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 4);
    }
    CHECK_THROWS_AS(load_force("t,force,displacement\n0,nan,\n1,1,\n"), ParseError);
    CHECK_THROWS_AS(load_force("t,force,displacement\n0,1,\n0.5,2,\n0.4,3,\n"), ParseError);
    CHECK_THROWS_AS(load_force("t,displacement\n0,1\n1,2\n"), ParseError);
    CHECK_THROWS_AS(load_force(""), ParseError);
}

TEST_CASE("load_trace needs two rows") {
    CHECK_THROWS_AS(load_force("t,force,displacement\n0,1,\n"), InsufficientDataError);
    CHECK_THROWS_AS(load_force("t,force,displacement\n"), InsufficientDataError);
}

TEST_CASE("force-only files leave displacement empty") {
    std::istringstream in("t,force,displacement\n0,0,\n1,1,\n");
    const Recording rec = load_recording(in);
    CHECK_FALSE(rec.displacement.has_value());
    std::istringstream partial("t,force,displacement\n0,0,1\n1,1,\n");
    CHECK_THROWS_AS(load_recording(partial), ParseError);
    std::istringstream need("t,force,displacement\n0,0,\n1,1,\n");
    CHECK_THROWS_AS(load_trace(need, Channel::displacement), ParseError);
}

TEST_CASE("comment lines become trace metadata") {
    const Trace tr = load_force("# subject = s02\n#stimulus=10kPa\nt,force,displacement\n0,0,\n1,1,\n");
    CHECK(tr.meta().at("subject") == "s02");
    CHECK(tr.meta().at("stimulus") == "10kPa");
}

TEST_CASE("write then load is bit-stable") {
    const Trace profile = synth::triangle_profile(1.0, 2.0, 80.0);
    const auto traces = synth::spring_trace(0.7, profile, 0.02, 11);
    std::ostringstream out;
    write_recording(out, traces.force, &traces.displacement, {{"k", "0.7"}});
    std::istringstream in(out.str());
    const Recording back = load_recording(in);
    REQUIRE(back.displacement.has_value());
    for (std::size_t i = 0; i < profile.size(); ++i) {
        REQUIRE(back.force.time(i) == traces.force.time(i));
        REQUIRE(back.force.value(i) == traces.force.value(i));
        REQUIRE(back.displacement->value(i) == traces.displacement.value(i));
    }
    CHECK(back.force.meta().at("k") == "0.7");

    // Awkward doubles survive as well.
    testing::Rng rng(5);
    std::vector<double> t, v;
    double now = 0.0;
    for (int i = 0; i < 500; ++i) {
        now += rng.uniform(1e-9, 1e-2);
        t.push_back(now);
        v.push_back(rng.gaussian() * std::pow(10.0, rng.uniform(-300, 300)));
    }
    const Trace odd(t, v, Channel::force);
    std::ostringstream o2;
    write_recording(o2, odd, nullptr);
    CHECK(load_force(o2.str()) == odd);
}

TEST_CASE("Trace enforces its invariants") {
    CHECK_THROWS_AS(Trace({0, 0}, {1, 2}, Channel::force), ArgumentError);
    CHECK_THROWS_AS(Trace({0, 1}, {1, INFINITY}, Channel::force), ArgumentError);
    CHECK_THROWS_AS(Trace({0, 1}, {1}, Channel::force), ArgumentError);
}

TEST_CASE("moving_average examples") {
    const Trace five = testing::sampled({1, 2, 3, 4, 5}, 1.0);
    const Trace smooth = moving_average(five, 3);
    const std::vector<double> want{1.5, 2, 3, 4, 4.5};
    for (std::size_t i = 0; i < 5; ++i) CHECK_THAT(smooth.value(i), WithinAbs(want[i], 1e-15));
    CHECK(moving_average(five, 1) == five);
    CHECK_THROWS_AS(moving_average(five, 0), ArgumentError);
    const auto times = smooth.times();
    CHECK(std::vector<double>(times.begin(), times.end()) == std::vector<double>{0, 1, 2, 3, 4});
}

TEST_CASE("moving_average of a constant is exact for every window") {
    testing::Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const double c = rng.uniform(-1e3, 1e3);
        const std::size_t n = 2 + rng.index(300);
        const Trace tr = testing::sampled(std::vector<double>(n, c), 100.0);
        const std::size_t w = 1 + rng.index(150);
        const Trace once = moving_average(tr, w);
        CHECK(once == tr);
        CHECK(moving_average(once, w) == tr);
    }
}

TEST_CASE("moving_average matches a direct window sum") {
    testing::Rng rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 1 + rng.index(60);
        const auto v = testing::uniform_values(rng, n, -5, 5);
        const std::size_t w = 1 + rng.index(20);
        const Trace got = moving_average(testing::sampled(v, 10.0), w);
        const long left = static_cast<long>((w - 1) / 2), right = static_cast<long>(w / 2);
        for (long i = 0; i < static_cast<long>(n); ++i) {
            double sum = 0.0;
            int count = 0;
            for (long j = i - left; j <= i + right; ++j) {
                if (j < 0 || j >= static_cast<long>(n)) continue;
                sum += v[static_cast<std::size_t>(j)];
                ++count;
            }
            REQUIRE_THAT(got.value(static_cast<std::size_t>(i)), WithinAbs(sum / count, 1e-12));
        }
    }
}

TEST_CASE("extract_ramp finds the corners of a triangle") {
    // 0 -> 2 N over 1 s then back down, 100 Hz.
    const Trace tri = synth::triangle_profile(2.0, 2.0, 100.0);
    const RampSegment ramp = extract_ramp(tri);
    CHECK(ramp.onset_index <= 1);
    CHECK(std::abs(tri.time(ramp.peak_index) - 1.0) <= 0.0100001);
}

TEST_CASE("extract_ramp after a zero baseline") {
    const double fs = 200.0;
    const auto v = ramp_and_hold(fs, 0.5, 1.0, 0.2, 0.0, 2.0);
    const Trace tr = testing::sampled(v, fs);
    const RampSegment ramp = extract_ramp(tr);
    const double baseline_end = 0.5;  // the corner sample
    CHECK(std::abs(tr.time(ramp.onset_index) - baseline_end) <= 1.0 / fs + 1e-12);
    CHECK(ramp.onset_index < ramp.peak_index);
}

TEST_CASE("extract_ramp rejects flat traces") {
    CHECK_THROWS_AS(extract_ramp(testing::sampled(std::vector<double>(50, 0.0), 10.0)), NoRampError);
    CHECK_THROWS_AS(extract_ramp(testing::sampled({1.0, 1.0}, 10.0)), InsufficientDataError);
    CHECK_THROWS_AS(extract_ramp(testing::sampled({3.0, 2.0, 1.0}, 10.0)), NoRampError);
}

TEST_CASE("extract_ramp recovers generator corners for random triangles") {
    testing::Rng rng(101);
    for (int trial = 0; trial < 100; ++trial) {
        const double rate = rng.uniform(0.25, 4.0);
        const double peak = rng.uniform(0.5, 4.0);
        const double fs = rng.uniform(50.0, 2000.0);
        const Trace tri = synth::triangle_profile(rate, peak, fs);
        const RampSegment ramp = extract_ramp(tri);
        const std::size_t apex = (tri.size() - 1) / 2;
        REQUIRE(ramp.onset_index <= 1);
        REQUIRE(ramp.peak_index + 1 >= apex);
        REQUIRE(ramp.peak_index <= apex + 1);
    }
}

TEST_CASE("linear_fit examples") {
    const std::vector<double> x{0, 1, 2};
    const LineFit exact = linear_fit(x, std::vector<double>{0, 2, 4});
    CHECK_THAT(exact.slope, WithinAbs(2.0, 1e-15));
    CHECK_THAT(exact.intercept, WithinAbs(0.0, 1e-15));
    CHECK(exact.r2 == 1.0);
    const LineFit flat = linear_fit(x, std::vector<double>{1, 1, 1});
    CHECK(flat.slope == 0.0);
    CHECK(flat.intercept == 1.0);
    CHECK_THROWS_AS(linear_fit(std::vector<double>{1, 1, 1}, std::vector<double>{0, 1, 2}), SingularFitError);
    CHECK_THROWS_AS(linear_fit(std::vector<double>{1}, std::vector<double>{0}), InsufficientDataError);

    std::vector<double> t, f;
    for (int i = 0; i < 100; ++i) {
        t.push_back(i / 80.0);
        f.push_back(i / 80.0);
    }
    CHECK_THAT(linear_fit(t, f).slope, WithinAbs(1.0, 1e-9));
}

TEST_CASE("linear_fit r2 stays in [0, 1]") {
    testing::Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.index(30);
        const auto x = testing::uniform_values(rng, n, -3, 3);
        const auto y = testing::uniform_values(rng, n, -3, 3);
        const LineFit fit = linear_fit(x, y);
        REQUIRE(fit.r2 >= 0.0);
        REQUIRE(fit.r2 <= 1.0);
        REQUIRE(std::isfinite(fit.slope));
    }
}

TEST_CASE("force_rate recovers the loading rate") {
    CHECK_THAT(force_rate(synth::triangle_profile(2.0, 2.0, 1000.0)).slope, WithinRel(2.0, 0.01));
    CHECK_THAT(force_rate(synth::triangle_profile(1.0, 2.0, 1000.0)).slope, WithinRel(1.0, 0.01));
    CHECK_THROWS_AS(force_rate(testing::sampled(std::vector<double>(500, 0.3), 1000.0)), NoRampError);
    const Trace disp = testing::sampled({0, 1, 2}, 1.0, Channel::displacement);
    CHECK_THROWS_AS(force_rate(disp), ArgumentError);
}

TEST_CASE("force_rate after a baseline") {
    const double fs = 1000.0;
    const Trace tr = testing::sampled(ramp_and_hold(fs, 0.5, 1.0, 0.5, 0.0, 2.0), fs);
    CHECK_THAT(force_rate(tr).slope, WithinRel(2.0, 1e-9));
    // Force-sensor sampling at 80 Hz with a shorter window.
    const Trace slow = synth::triangle_profile(1.0, 2.0, 80.0);
    CHECK_THAT(force_rate(slow, {8, 0.05}).slope, WithinRel(1.0, 0.01));
}

TEST_CASE("force_rate within 1% on random triangle profiles") {
    testing::Rng rng(2024);
    for (int trial = 0; trial < 30; ++trial) {
        const double rate = rng.uniform(0.5, 3.0);
        const double peak = rng.uniform(1.0, 3.0);
        const Trace tri = synth::triangle_profile(rate, peak, 1000.0);
        REQUIRE_THAT(force_rate(tri).slope, WithinRel(rate, 0.01));
    }
}

TEST_CASE("displacement_amplitude examples") {
    const double fs = 1000.0;
    const auto up = ramp_and_hold(fs, 0.2, 1.0, 0.5, 10.0, 13.0);
    // The 5% onset sits a hair up the smoothed corner.
    CHECK_THAT(displacement_amplitude(testing::sampled(up, fs, Channel::displacement)), WithinAbs(3.0, 1e-3));
    const auto down = ramp_and_hold(fs, 0.2, 1.0, 0.5, 13.0, 10.0);
    CHECK_THAT(displacement_amplitude(testing::sampled(down, fs, Channel::displacement)), WithinAbs(3.0, 1e-3));

    testing::Rng rng(77);
    auto noisy = ramp_and_hold(fs, 0.3, 1.0, 0.5, 4.0, 6.5);
    for (double& d : noisy) d += 0.01 * rng.gaussian();
    CHECK_THAT(displacement_amplitude(testing::sampled(noisy, fs, Channel::displacement)), WithinAbs(2.5, 0.05));
}

TEST_CASE("downsample keeps index-anchored strides") {
    std::vector<double> v(101);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    const Trace tr = testing::sampled(v, 1.0);
    CHECK(downsample(tr, 1) == tr);
    const Trace hundred = testing::sampled(std::vector<double>(v.begin(), v.begin() + 100), 1.0);
    const Trace two = downsample(hundred, 50);
    REQUIRE(two.size() == 2);
    CHECK(two.value(0) == 0.0);
    CHECK(two.value(1) == 50.0);
    const Trace three = downsample(tr, 50);
    REQUIRE(three.size() == 3);
    CHECK(three.value(2) == 100.0);
    CHECK_THROWS_AS(downsample(tr, 0), ArgumentError);
}

TEST_CASE("downsample composes multiplicatively") {
    testing::Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.index(500);
        const std::size_t a = 1 + rng.index(12), b = 1 + rng.index(12);
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i);
        const Trace tr = testing::sampled(v, 1.0);
        REQUIRE(downsample(downsample(tr, a), b) == downsample(tr, a * b));
    }
}

TEST_CASE("sigmoid_normalize examples") {
    CHECK(sigmoid_normalize(std::vector<double>{3.25}, 3.25, 1.0)[0] == 0.5);
    CHECK_THAT(sigmoid_normalize(std::vector<double>{2.0 + std::log(3.0)}, 2.0, 1.0)[0], WithinAbs(0.75, 1e-15));
    const auto pair = sigmoid_normalize(std::vector<double>{0.0, 10.0});
    CHECK_THAT(pair[0], WithinRel(0.0066928509242848554, 1e-14));
    CHECK_THAT(pair[1], WithinRel(0.9933071490757153, 1e-14));
}

TEST_CASE("sigmoid_normalize is strictly increasing and strictly inside (0, 1)") {
    testing::Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        auto v = testing::uniform_values(rng, 40, -50, 50);
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        const double rate = rng.uniform(0.01, 0.5);
        const auto s = sigmoid_normalize(v, std::nullopt, rate);
        for (std::size_t i = 0; i < s.size(); ++i) {
            REQUIRE(s[i] > 0.0);
            REQUIRE(s[i] < 1.0);
            if (i > 0) REQUIRE(s[i] > s[i - 1]);
        }
    }
    const auto extreme = sigmoid_normalize(std::vector<double>{-1e6, 0.0, 1e6}, 0.0, 1.0);
    CHECK(extreme[0] > 0.0);
    CHECK(extreme[2] < 1.0);
    CHECK(extreme[1] == 0.5);
}

TEST_CASE("average_trials truncates to the shortest trial") {
    const Trace a = testing::sampled({1, 2, 3, 4}, 1.0);
    const Trace b = testing::sampled({3, 4, 5}, 1.0);
    const std::vector<Trace> trials{a, b};
    const Trace avg = average_trials(trials);
    REQUIRE(avg.size() == 3);
    CHECK(avg.value(0) == 2.0);
    CHECK(avg.value(2) == 4.0);
}
