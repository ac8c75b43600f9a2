#pragma once

// Seeded synthetic explorations: commanded force profiles and the
// displacement they produce on closed-form contact models.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "softcue/csv.hpp"
#include "softcue/detail/numeric.hpp"
#include "softcue/errors.hpp"
#include "softcue/trace.hpp"

namespace softcue::synth {

/// Sphere pressed on a finger pad. Moduli in kPa, radius in mm.
struct HertzParams {
    double finger_modulus_kpa = 100.0;
    double sphere_modulus_kpa = 10.0;
    double finger_poisson = 0.475;
    double sphere_poisson = 0.475;
    double radius_mm = 4.0;

    void validate() const {
        if (!(finger_modulus_kpa > 0.0) || !(sphere_modulus_kpa > 0.0))
            throw ArgumentError("hertz: moduli must be positive");
        for (double nu : {finger_poisson, sphere_poisson})
            if (!(nu >= 0.0 && nu < 0.5)) throw ArgumentError("hertz: Poisson ratio outside [0, 0.5)");
        if (!(radius_mm > 0.0)) throw ArgumentError("hertz: radius must be positive");
    }
};

/// 1/E* = (1 - nu_f^2)/E_f + (1 - nu_s^2)/E_s, in kPa.
inline double effective_modulus_kpa(const HertzParams& p) {
    return 1.0 / ((1.0 - p.finger_poisson * p.finger_poisson) / p.finger_modulus_kpa +
                  (1.0 - p.sphere_poisson * p.sphere_poisson) / p.sphere_modulus_kpa);
}

// kPa -> N/mm^2
inline constexpr double kpa_to_n_per_mm2 = 1e-3;

/// Indentation depth (mm) for force F (N): delta = (3F / (4 E* sqrt(R)))^(2/3).
inline double hertz_displacement(double force_n, double effective_kpa, double radius_mm) {
    if (force_n <= 0.0) return 0.0;
    const double e = effective_kpa * kpa_to_n_per_mm2;
    return std::cbrt(std::pow(3.0 * force_n / (4.0 * e * std::sqrt(radius_mm)), 2.0));
}

/// F = (4/3) E* sqrt(R) delta^(3/2).
inline double hertz_force(double displacement_mm, double effective_kpa, double radius_mm) {
    if (displacement_mm <= 0.0) return 0.0;
    const double e = effective_kpa * kpa_to_n_per_mm2;
    return 4.0 / 3.0 * e * std::sqrt(radius_mm) * std::pow(displacement_mm, 1.5);
}

/// Linear rise at `rate` (N/s) to `peak` (N) and a symmetric fall. The apex is
/// always a sample, so the maximum equals `peak` exactly; the step is adjusted
/// slightly when peak/rate is not a whole number of sampling periods.
inline Trace triangle_profile(double rate, double peak, double sample_rate) {
    if (!(rate > 0.0) || !(peak > 0.0) || !(sample_rate > 0.0))
        throw ArgumentError("triangle_profile: rate, peak and sample rate must be positive");
    const double rise = peak / rate;
    const std::size_t half = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(rise * sample_rate)));
    const double dt = rise / static_cast<double>(half);
    std::vector<double> t(2 * half + 1), v(2 * half + 1);
    for (std::size_t i = 0; i <= 2 * half; ++i) {
        t[i] = static_cast<double>(i) * dt;
        const std::size_t from_edge = i <= half ? i : 2 * half - i;
        v[i] = peak * (static_cast<double>(from_edge) / static_cast<double>(half));
    }
    return Trace(std::move(t), std::move(v), Channel::force,
                 {{"profile", "triangle"}, {"rate", csv::format(rate)}, {"peak", csv::format(peak)}});
}

struct Knot {
    double t;
    double value;
};

/// Piecewise-linear profile through `knots`, sampled at `sample_rate` from the
/// first knot time. Handy for baselines and holds.
inline Trace piecewise_profile(const std::vector<Knot>& knots, double sample_rate,
                               Channel channel = Channel::force) {
    if (knots.size() < 2) throw ArgumentError("piecewise_profile: needs at least 2 knots");
    if (!(sample_rate > 0.0)) throw ArgumentError("piecewise_profile: sample rate must be positive");
    for (std::size_t i = 1; i < knots.size(); ++i)
        if (!(knots[i].t > knots[i - 1].t))
            throw ArgumentError("piecewise_profile: knot times must increase");
    const double t0 = knots.front().t;
    const auto n = static_cast<std::size_t>(std::floor((knots.back().t - t0) * sample_rate + 1e-9)) + 1;
    std::vector<double> t(n), v(n);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = t0 + static_cast<double>(i) / sample_rate;
        while (seg + 2 < knots.size() && t[i] > knots[seg + 1].t) ++seg;
        const Knot& a = knots[seg];
        const Knot& b = knots[seg + 1];
        const double w = std::clamp((t[i] - a.t) / (b.t - a.t), 0.0, 1.0);
        v[i] = a.value + w * (b.value - a.value);
    }
    return Trace(std::move(t), std::move(v), channel);
}

struct ContactTraces {
    Trace force;
    Trace displacement;
    std::vector<double> contact_radius_mm;  // empty for the spring model
};

namespace detail {

inline void require_non_negative(const Trace& profile) {
    if (profile.channel() != Channel::force) throw ArgumentError("synth: profile must be a force trace");
    for (double f : profile.values())
        if (f < 0.0) throw ArgumentError("synth: force profile must be non-negative");
}

inline void apply_noise(std::vector<double>& displacement, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw ArgumentError("synth: noise sigma must be non-negative");
    if (sigma == 0.0) return;
    softcue::detail::Rng rng(seed);
    for (double& d : displacement) d *= 1.0 + sigma * rng.gaussian();
}

}  // namespace detail

/// Displacement of a Hertz contact under the commanded force profile, with
/// multiplicative Gaussian noise on displacement only.
inline ContactTraces hertz_trace(const HertzParams& params, const Trace& profile, double noise_sigma,
                                 std::uint64_t seed) {
    params.validate();
    detail::require_non_negative(profile);
    const double e_star = effective_modulus_kpa(params);
    std::vector<double> d, a;
    d.reserve(profile.size());
    a.reserve(profile.size());
    for (double f : profile.values()) {
        const double delta = hertz_displacement(f, e_star, params.radius_mm);
        d.push_back(delta);
        a.push_back(std::sqrt(params.radius_mm * delta));
    }
    detail::apply_noise(d, noise_sigma, seed);
    Meta meta = profile.meta();
    meta["model"] = "hertz";
    meta["effective_modulus_kpa"] = csv::format(e_star);
    meta["radius_mm"] = csv::format(params.radius_mm);
    return {Trace({profile.times().begin(), profile.times().end()},
                  {profile.values().begin(), profile.values().end()}, Channel::force, meta),
            Trace({profile.times().begin(), profile.times().end()}, std::move(d), Channel::displacement, meta),
            std::move(a)};
}

/// Linear spring: delta = F / k, same noise model.
inline ContactTraces spring_trace(double k_n_per_mm, const Trace& profile, double noise_sigma,
                                  std::uint64_t seed) {
    if (!(k_n_per_mm > 0.0)) throw ArgumentError("spring_trace: k must be positive");
    detail::require_non_negative(profile);
    std::vector<double> d;
    d.reserve(profile.size());
    for (double f : profile.values()) d.push_back(f / k_n_per_mm);
    detail::apply_noise(d, noise_sigma, seed);
    Meta meta = profile.meta();
    meta["model"] = "spring";
    meta["k"] = csv::format(k_n_per_mm);
    return {Trace({profile.times().begin(), profile.times().end()},
                  {profile.values().begin(), profile.values().end()}, Channel::force, meta),
            Trace({profile.times().begin(), profile.times().end()}, std::move(d), Channel::displacement, meta),
            {}};
}

}  // namespace softcue::synth
