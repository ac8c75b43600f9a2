#pragma once

// Discrete Frechet distance between polygonal curves and the differencing-rule
// estimate of how long two explorations must run before their cues differ.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "softcue/errors.hpp"
#include "softcue/trace.hpp"

namespace softcue {

/// Ordered points of a fixed dimension, stored row-major.
class PolyCurve {
public:
    PolyCurve(std::size_t dim, std::vector<double> coords, std::string label = {})
        : dim_(dim), coords_(std::move(coords)), label_(std::move(label)) {
        if (dim_ == 0) throw ArgumentError("PolyCurve: dimension must be >= 1");
        if (coords_.empty() || coords_.size() % dim_ != 0)
            throw ArgumentError("PolyCurve: coordinates must form at least one whole point");
        for (double c : coords_)
            if (!std::isfinite(c)) throw ArgumentError("PolyCurve: non-finite coordinate");
    }

    static PolyCurve from_values(std::span<const double> values, std::string label = {}) {
        return PolyCurve(1, {values.begin(), values.end()}, std::move(label));
    }

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return coords_.size() / dim_; }
    std::span<const double> point(std::size_t i) const { return std::span(coords_).subspan(i * dim_, dim_); }
    const std::string& label() const { return label_; }

    // First `count` points.
    PolyCurve prefix(std::size_t count) const {
        count = std::clamp<std::size_t>(count, 1, size());
        return PolyCurve(dim_, {coords_.begin(), coords_.begin() + static_cast<std::ptrdiff_t>(count * dim_)},
                         label_);
    }

private:
    std::size_t dim_;
    std::vector<double> coords_;
    std::string label_;
};

namespace detail {

inline double euclidean(std::span<const double> a, std::span<const double> b) {
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        ss += d * d;
    }
    return std::sqrt(ss);
}

inline void require_same_dim(const PolyCurve& p, const PolyCurve& q) {
    if (p.dim() != q.dim()) throw ArgumentError("frechet: curves differ in dimension");
}

// Full coupling table: table[i * m + j] is the distance between prefixes
// P[0..i] and Q[0..j].
inline std::vector<double> frechet_table(const PolyCurve& p, const PolyCurve& q) {
    const std::size_t n = p.size(), m = q.size();
    std::vector<double> ca(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double d = euclidean(p.point(i), q.point(j));
            double reach;
            if (i == 0 && j == 0) reach = d;
            else if (i == 0) reach = ca[j - 1];
            else if (j == 0) reach = ca[(i - 1) * m];
            else reach = std::min({ca[(i - 1) * m + j], ca[(i - 1) * m + j - 1], ca[i * m + j - 1]});
            ca[i * m + j] = std::max(reach, d);
        }
    }
    return ca;
}

}  // namespace detail

/// Minimum over monotone couplings of the largest coupled distance, O(n m).
inline double discrete_frechet(const PolyCurve& p, const PolyCurve& q) {
    detail::require_same_dim(p, q);
    const std::size_t m = q.size();
    std::vector<double> prev(m), cur(m);
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double d = detail::euclidean(p.point(i), q.point(j));
            double reach;
            if (i == 0 && j == 0) reach = d;
            else if (i == 0) reach = cur[j - 1];
            else if (j == 0) reach = prev[0];
            else reach = std::min({prev[j], prev[j - 1], cur[j - 1]});
            cur[j] = std::max(reach, d);
        }
        std::swap(prev, cur);
    }
    return prev[m - 1];
}

/// Direct enumeration of every coupling; a reference for small curves only.
inline double brute_force_frechet(const PolyCurve& p, const PolyCurve& q) {
    detail::require_same_dim(p, q);
    constexpr std::size_t limit = 6;
    if (p.size() > limit || q.size() > limit)
        throw ArgumentError("brute_force_frechet: curves longer than 6 points");

    const std::size_t n = p.size(), m = q.size();
    double best = std::numeric_limits<double>::infinity();
    // Depth-first walk over coupling paths from (0,0) to (n-1,m-1).
    struct Frame {
        std::size_t a, b;
        double worst;
    };
    std::vector<Frame> stack{{0, 0, 0.0}};
    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        const auto u = p.point(f.a);
        const auto v = q.point(f.b);
        double ss = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) ss += (u[k] - v[k]) * (u[k] - v[k]);
        const double worst = std::max(f.worst, std::sqrt(ss));
        if (f.a == n - 1 && f.b == m - 1) {
            best = std::min(best, worst);
            continue;
        }
        if (f.a + 1 < n) stack.push_back({f.a + 1, f.b, worst});
        if (f.b + 1 < m) stack.push_back({f.a, f.b + 1, worst});
        if (f.a + 1 < n && f.b + 1 < m) stack.push_back({f.a + 1, f.b + 1, worst});
    }
    return best;
}

enum class Cue { force, force_rate };

enum class ThresholdMode {
    relative,  // dissimilarity > jnd * max |cue| over both prefixes
    absolute,  // dissimilarity > jnd, in cue units
};

struct DissimilarityOptions {
    Cue cue = Cue::force;
    std::size_t downsample_factor = 50;
    std::size_t smoothing_window = 100;  // applied before differentiating for the force-rate cue
    // Two-dimensional (time, value) curves when set; scales convert each axis
    // into a common distance unit.
    bool time_value_curves = false;
    double time_scale = 1.0;
    double value_scale = 1.0;
};

/// Cue curves after trial averaging, cropping to the common length and
/// downsampling; both share the time base of `times`.
struct CuePair {
    std::vector<double> times;
    PolyCurve h;
    PolyCurve s;
};

namespace detail {

inline Trace cue_trace(const Trace& averaged, const DissimilarityOptions& opt) {
    if (opt.cue == Cue::force) return averaged;
    return derivative(moving_average(averaged, opt.smoothing_window));
}

inline PolyCurve to_curve(const Trace& tr, const DissimilarityOptions& opt, std::string label) {
    if (!opt.time_value_curves) return PolyCurve::from_values(tr.values(), std::move(label));
    std::vector<double> coords;
    coords.reserve(2 * tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        coords.push_back(tr.time(i) * opt.time_scale);
        coords.push_back(tr.value(i) * opt.value_scale);
    }
    return PolyCurve(2, std::move(coords), std::move(label));
}

}  // namespace detail

inline CuePair prepare_cue_curves(std::span<const Trace> h_trials, std::span<const Trace> s_trials,
                                  const DissimilarityOptions& opt = {}) {
    if (h_trials.empty() || s_trials.empty()) throw ArgumentError("frechet: empty trial set");
    if (opt.downsample_factor < 1) throw ArgumentError("frechet: downsample factor must be >= 1");
    const Trace h_avg = average_trials(h_trials);
    const Trace s_avg = average_trials(s_trials);
    const std::size_t common = std::min(h_avg.size(), s_avg.size());
    if (common < 2) throw ArgumentError("frechet: traces share no analysis window");
    const Trace h_cue = downsample(detail::cue_trace(crop(h_avg, common), opt), opt.downsample_factor);
    const Trace s_cue = downsample(detail::cue_trace(crop(s_avg, common), opt), opt.downsample_factor);
    return {{h_cue.times().begin(), h_cue.times().end()},
            detail::to_curve(h_cue, opt, "H"),
            detail::to_curve(s_cue, opt, "S")};
}

/// Frechet dissimilarity between the cue curves of two explorations.
inline double pair_dissimilarity(std::span<const Trace> h_trials, std::span<const Trace> s_trials,
                                 const DissimilarityOptions& opt = {}) {
    const CuePair pair = prepare_cue_curves(h_trials, s_trials, opt);
    return discrete_frechet(pair.h, pair.s);
}

inline double pair_dissimilarity(const Trace& h, const Trace& s, const DissimilarityOptions& opt = {}) {
    return pair_dissimilarity(std::span(&h, 1), std::span(&s, 1), opt);
}

struct ProfilePoint {
    double t;
    double dissimilarity;
    double reference;
    double ratio;
};

struct DiscriminationResult {
    std::optional<double> time;  // nullopt: never exceeds the threshold
    std::vector<ProfilePoint> profile;
};

struct DiscriminationOptions {
    double jnd_fraction = 0.10;
    ThresholdMode mode = ThresholdMode::relative;
};

/// Growing-prefix dissimilarity profile of two prepared cue curves and the
/// first time it exceeds the threshold. Prefixes start at two points.
inline DiscriminationResult discrimination_profile(const CuePair& pair, const DiscriminationOptions& opt = {}) {
    if (!(opt.jnd_fraction > 0.0)) throw ArgumentError("discrimination_time: jnd must be positive");
    const std::size_t n = std::min(pair.h.size(), pair.s.size());
    if (n < 2) throw ArgumentError("discrimination_time: need at least 2 cue points");
    const PolyCurve h = pair.h.prefix(n);
    const PolyCurve s = pair.s.prefix(n);
    // Prefix-pair distances are the diagonal of a single coupling table.
    const auto table = detail::frechet_table(h, s);

    DiscriminationResult result;
    double magnitude = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        // Reference magnitude uses the cue value (last coordinate) only.
        magnitude = std::max({magnitude, std::abs(h.point(i).back()), std::abs(s.point(i).back())});
        if (i == 0) continue;
        const double dissimilarity = table[i * n + i];
        const double reference = opt.mode == ThresholdMode::relative ? magnitude : 1.0;
        const double ratio = reference > 0.0 ? dissimilarity / reference : 0.0;
        result.profile.push_back({pair.times[i], dissimilarity, reference, ratio});
        if (!result.time && ratio > opt.jnd_fraction) result.time = pair.times[i];
    }
    return result;
}

inline DiscriminationResult discrimination_time(std::span<const Trace> h_trials, std::span<const Trace> s_trials,
                                                const DiscriminationOptions& opt = {},
                                                const DissimilarityOptions& cue_opt = {}) {
    return discrimination_profile(prepare_cue_curves(h_trials, s_trials, cue_opt), opt);
}

inline DiscriminationResult discrimination_time(const Trace& h, const Trace& s,
                                                const DiscriminationOptions& opt = {},
                                                const DissimilarityOptions& cue_opt = {}) {
    return discrimination_time(std::span(&h, 1), std::span(&s, 1), opt, cue_opt);
}

}  // namespace softcue
