#pragma once

// Virtual stiffness: single-exploration observations (peak ratio, fitted
// slope), their fusion, the recursive gain-weighted estimator over
// instantaneous stiffness, and the applied-work cue.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "softcue/detail/numeric.hpp"
#include "softcue/errors.hpp"
#include "softcue/trace.hpp"

namespace softcue {

enum class EstimateSource { peak, slope, fused, recursive };

inline std::string_view to_string(EstimateSource s) {
    switch (s) {
        case EstimateSource::peak: return "peak";
        case EstimateSource::slope: return "slope";
        case EstimateSource::fused: return "fused";
        case EstimateSource::recursive: return "recursive";
    }
    return "?";
}

/// Stiffness in N/mm with its standard deviation.
struct StiffnessEstimate {
    double value;
    double sigma;
    EstimateSource source;
};

struct FDPoint {
    double displacement_mm;
    double force_n;
};

/// Force-displacement samples of one loading ramp, displacement non-decreasing.
class FDCurve {
public:
    explicit FDCurve(std::vector<FDPoint> points) : points_(std::move(points)) {
        if (points_.size() < 2) throw InsufficientDataError("FDCurve: needs at least 2 points");
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const auto& p = points_[i];
            if (!std::isfinite(p.displacement_mm) || !std::isfinite(p.force_n))
                throw ArgumentError("FDCurve: non-finite point");
            if (i > 0 && p.displacement_mm < points_[i - 1].displacement_mm)
                throw ArgumentError("FDCurve: displacement decreases at point " + std::to_string(i));
        }
    }

    std::span<const FDPoint> points() const { return points_; }
    std::size_t size() const { return points_.size(); }

    std::vector<double> displacements() const {
        std::vector<double> d;
        d.reserve(points_.size());
        for (const auto& p : points_) d.push_back(p.displacement_mm);
        return d;
    }
    std::vector<double> forces() const {
        std::vector<double> f;
        f.reserve(points_.size());
        for (const auto& p : points_) f.push_back(p.force_n);
        return f;
    }

private:
    std::vector<FDPoint> points_;
};

/// Least-squares non-decreasing fit (pool adjacent violators). Identity on
/// sequences that are already non-decreasing.
inline std::vector<double> isotonic_non_decreasing(std::span<const double> y) {
    struct Block {
        double sum;
        std::size_t count;
        double mean() const { return sum / static_cast<double>(count); }
    };
    std::vector<Block> blocks;
    for (double v : y) {
        blocks.push_back({v, 1});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
            blocks[blocks.size() - 2].sum += blocks.back().sum;
            blocks[blocks.size() - 2].count += blocks.back().count;
            blocks.pop_back();
        }
    }
    std::vector<double> out;
    out.reserve(y.size());
    for (const auto& b : blocks) {
        if (b.count == 1) {
            out.push_back(b.sum);
            continue;
        }
        out.insert(out.end(), b.count, b.mean());
    }
    return out;
}

/// FD curve of a loading ramp plus the time of each of its points.
struct RampCurve {
    FDCurve curve;
    std::vector<double> times;
};

/// The loading ramp of a recording: both channels are smoothed, the ramp is
/// located on force, and displacement noise that breaks monotonicity is
/// removed by isotonic projection.
inline RampCurve ramp_curve_from_traces(const Trace& force, const Trace& displacement,
                                        const CueOptions& opt = {}) {
    if (force.channel() != Channel::force || displacement.channel() != Channel::displacement)
        throw ArgumentError("fd_curve_from_traces: expected force and displacement channels");
    if (force.size() != displacement.size())
        throw ArgumentError("fd_curve_from_traces: channel lengths differ");
    const Trace f = moving_average(force, opt.window);
    const Trace d = moving_average(displacement, opt.window);
    const RampSegment ramp = extract_ramp(f, opt.onset_fraction);
    const auto d_ramp = isotonic_non_decreasing(d.values().subspan(ramp.onset_index, ramp.length()));
    std::vector<FDPoint> pts;
    pts.reserve(ramp.length());
    for (std::size_t i = 0; i < ramp.length(); ++i) pts.push_back({d_ramp[i], f.value(ramp.onset_index + i)});
    const auto t = f.times().subspan(ramp.onset_index, ramp.length());
    return {FDCurve(std::move(pts)), {t.begin(), t.end()}};
}

inline FDCurve fd_curve_from_traces(const Trace& force, const Trace& displacement,
                                    const CueOptions& opt = {}) {
    return ramp_curve_from_traces(force, displacement, opt).curve;
}

/// Maximum force over the displacement at which it occurs.
inline StiffnessEstimate peak_observation(const FDCurve& fd) {
    const auto pts = fd.points();
    const auto it = std::max_element(pts.begin(), pts.end(),
                                     [](const FDPoint& a, const FDPoint& b) { return a.force_n < b.force_n; });
    if (!(it->displacement_mm > 0.0))
        throw DomainError("peak_observation: zero displacement at peak force");
    return {it->force_n / it->displacement_mm, 0.0, EstimateSource::peak};
}

struct SlopeObservation {
    StiffnessEstimate estimate;
    double r2;
};

/// OLS slope of force against displacement over the ramp.
inline SlopeObservation slope_observation(const FDCurve& fd) {
    const auto fit = linear_fit(fd.displacements(), fd.forces());
    return {{fit.slope, 0.0, EstimateSource::slope}, fit.r2};
}

/// Two observations combined as x1 + sqrt(s1^2 / (s1^2 + s2^2)) (x2 - x1).
///
/// Both sigmas zero is only meaningful when the observations agree; agreement
/// is judged to 1e-12 relative so the same value computed two ways still fuses.
inline StiffnessEstimate fuse_observations(double x1, double sigma1, double x2, double sigma2) {
    if (sigma1 < 0.0 || sigma2 < 0.0 || std::isnan(sigma1) || std::isnan(sigma2))
        throw ArgumentError("fuse_observations: sigmas must be non-negative");
    const double v1 = sigma1 * sigma1;
    const double v2 = sigma2 * sigma2;
    if (v1 + v2 == 0.0) {
        const double scale = std::max(std::abs(x1), std::abs(x2));
        if (std::abs(x1 - x2) <= 1e-12 * scale)
            return {x1, 0.0, EstimateSource::fused};
        throw ArgumentError("fuse_observations: both sigmas are zero and observations differ");
    }
    double weight = 0.0;
    if (std::isinf(v1) && std::isinf(v2)) throw ArgumentError("fuse_observations: both sigmas infinite");
    if (std::isinf(v1)) weight = 1.0;
    else if (!std::isinf(v2)) weight = std::sqrt(v1 / (v1 + v2));
    const double value = x1 + weight * (x2 - x1);
    // Spread of the two observations under the same weight.
    const double sigma = std::sqrt((1.0 - weight) * (1.0 - weight) * v1 +
                                   (std::isinf(v2) ? 0.0 : weight * weight * v2));
    return {value, sigma, EstimateSource::fused};
}

/// k_j = F_j / d_j for every point after the first.
inline std::vector<double> instantaneous_stiffness(const FDCurve& fd) {
    const auto pts = fd.points();
    std::vector<double> k;
    k.reserve(pts.size() - 1);
    for (std::size_t j = 1; j < pts.size(); ++j) {
        if (!(pts[j].displacement_mm != 0.0))
            throw DomainError("instantaneous_stiffness: zero displacement at point " + std::to_string(j));
        k.push_back(pts[j].force_n / pts[j].displacement_mm);
    }
    return k;
}

enum class PosteriorUpdate {
    variance,      // sigma^2 <- (1 - gain) sigma^2
    literal_sqrt,  // sigma^2 <- sqrt((1 - gain) sigma^2), the square root applied literally
};

/// Output of the recursive estimator. `estimates`, `variances` and
/// `timestamps` have one entry per stiffness sample (the first is the
/// initialization); `gains[i]` is the gain applied to reach `estimates[i + 1]`.
struct RecursionTrajectory {
    std::vector<double> estimates;
    std::vector<double> gains;
    std::vector<double> variances;
    std::vector<double> timestamps;

    StiffnessEstimate terminal() const {
        return {estimates.back(), std::sqrt(variances.back()), EstimateSource::recursive};
    }
};

/// Gain-weighted recursion over instantaneous stiffness.
///
/// The estimate starts at the first sample with variance `init_variance`;
/// each later sample k is blended in with gain sqrt(P / (P + R)), R being
/// `meas_variance`. Timestamps default to the sample index.
inline RecursionTrajectory recursive_update(std::span<const double> k_series, double meas_variance,
                                            double init_variance,
                                            PosteriorUpdate mode = PosteriorUpdate::variance,
                                            std::span<const double> timestamps = {}) {
    if (k_series.size() < 2) throw InsufficientDataError("recursive_update: needs at least 2 samples");
    if (!(meas_variance > 0.0) || !(init_variance > 0.0) || !std::isfinite(meas_variance) ||
        !std::isfinite(init_variance))
        throw ArgumentError("recursive_update: variances must be positive and finite");
    if (!timestamps.empty() && timestamps.size() != k_series.size())
        throw ArgumentError("recursive_update: timestamps must match the stiffness series");

    RecursionTrajectory traj;
    const std::size_t n = k_series.size();
    traj.estimates.reserve(n);
    traj.variances.reserve(n);
    traj.gains.reserve(n - 1);
    traj.estimates.push_back(k_series[0]);
    traj.variances.push_back(init_variance);
    for (std::size_t i = 1; i < n; ++i) {
        const double prior = traj.variances.back();
        const double gain = std::sqrt(prior / (prior + meas_variance));
        const double previous = traj.estimates.back();
        traj.estimates.push_back(previous + gain * (k_series[i] - previous));
        traj.gains.push_back(gain);
        const double posterior = (1.0 - gain) * prior;
        traj.variances.push_back(mode == PosteriorUpdate::variance ? posterior : std::sqrt(posterior));
    }
    if (timestamps.empty()) {
        for (std::size_t i = 0; i < n; ++i) traj.timestamps.push_back(static_cast<double>(i));
    } else {
        traj.timestamps.assign(timestamps.begin(), timestamps.end());
    }
    return traj;
}

struct VarianceDefaults {
    double measurement;
    double initial;
};

/// Data-driven variances for `recursive_update`.
///
/// Measurement variance is the mean residual variance of k about a local line
/// over sliding windows of `window` samples; initial variance is the sample
/// variance of the first `window` samples, falling back to the measurement
/// variance. Noiseless series get a tiny positive floor so the recursion is
/// still defined.
inline VarianceDefaults estimate_variances(std::span<const double> k_series, std::size_t window = 5) {
    if (k_series.size() < 2) throw InsufficientDataError("estimate_variances: needs at least 2 samples");
    if (window < 3) throw ArgumentError("estimate_variances: window must be >= 3");
    const std::size_t w = std::min(window, k_series.size());

    double meas = 0.0;
    std::size_t windows = 0;
    if (w >= 3) {
        std::vector<double> x(w);
        for (std::size_t i = 0; i < w; ++i) x[i] = static_cast<double>(i);
        for (std::size_t start = 0; start + w <= k_series.size(); ++start) {
            const auto y = k_series.subspan(start, w);
            const LineFit fit = linear_fit(x, y);
            double ss = 0.0;
            for (std::size_t i = 0; i < w; ++i) {
                const double r = y[i] - (fit.slope * x[i] + fit.intercept);
                ss += r * r;
            }
            meas += ss / static_cast<double>(w - 2);
            ++windows;
        }
    }
    if (windows > 0) meas /= static_cast<double>(windows);

    const double head_sd = detail::sample_sd(k_series.first(w));
    double init = head_sd * head_sd;

    double scale = 0.0;
    for (double k : k_series) scale = std::max(scale, std::abs(k));
    const double floor = 1e-12 * std::max(1.0, scale * scale);
    if (!(meas > floor)) meas = floor;
    if (!(init > floor)) init = meas;
    return {meas, init};
}

/// Time of the first gain below `threshold_fraction` of the largest gain;
/// nullopt when the gains never fall that far.
inline std::optional<double> recognition_time(std::span<const double> gains,
                                              std::span<const double> gain_times,
                                              double threshold_fraction = 0.10) {
    if (gains.empty()) throw InsufficientDataError("recognition_time: no gains");
    if (gains.size() != gain_times.size())
        throw ArgumentError("recognition_time: gains and times differ in length");
    if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0))
        throw ArgumentError("recognition_time: threshold fraction must lie in (0, 1)");
    const double threshold = threshold_fraction * *std::max_element(gains.begin(), gains.end());
    for (std::size_t i = 0; i < gains.size(); ++i)
        if (gains[i] < threshold) return gain_times[i];
    return std::nullopt;
}

inline std::optional<double> recognition_time(const RecursionTrajectory& traj,
                                              double threshold_fraction = 0.10) {
    return recognition_time(traj.gains, std::span<const double>(traj.timestamps).subspan(1),
                            threshold_fraction);
}

/// Trapezoidal integral of F dd over the curve, N*mm (= mJ).
inline double applied_work(const FDCurve& fd) {
    const auto pts = fd.points();
    double work = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        work += 0.5 * (pts[i].force_n + pts[i - 1].force_n) *
                (pts[i].displacement_mm - pts[i - 1].displacement_mm);
    return work;
}

/// Mean of the normalized stiffness and work cues.
inline double combine_recognition_cues(double stiffness_normalized, double work_normalized) {
    return 0.5 * (stiffness_normalized + work_normalized);
}

/// Cohort form: each cue is sigmoid-normalized within its cohort first.
inline std::vector<double> combine_recognition_cues(std::span<const double> stiffness,
                                                    std::span<const double> work) {
    if (stiffness.size() != work.size())
        throw ArgumentError("combine_recognition_cues: cohorts differ in size");
    const auto s = sigmoid_normalize(stiffness);
    const auto w = sigmoid_normalize(work);
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = combine_recognition_cues(s[i], w[i]);
    return out;
}

}  // namespace softcue
