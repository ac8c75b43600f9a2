#pragma once

// Exploration time series: ingestion, smoothing, ramp segmentation, and the
// scalar cues (force-rate, displacement amplitude) derived from them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "softcue/csv.hpp"
#include "softcue/errors.hpp"

namespace softcue {

enum class Channel { force, displacement };

inline std::string_view to_string(Channel c) {
    return c == Channel::force ? "force" : "displacement";
}

using Meta = std::map<std::string, std::string>;

/// Time-ordered samples from one channel of one exploration.
///
/// Times are seconds and strictly increasing; values are newtons (force) or
/// millimeters (displacement). Immutable once constructed.
class Trace {
public:
    Trace(std::vector<double> times, std::vector<double> values, Channel channel, Meta meta = {})
        : times_(std::move(times)), values_(std::move(values)), channel_(channel),
          meta_(std::move(meta)) {
        if (times_.size() != values_.size())
            throw ArgumentError("trace: times and values differ in length");
        if (times_.empty()) throw InsufficientDataError("trace: no samples");
        for (std::size_t i = 0; i < times_.size(); ++i) {
            if (!std::isfinite(times_[i]) || !std::isfinite(values_[i]))
                throw ArgumentError("trace: non-finite sample at index " + std::to_string(i));
            if (i > 0 && !(times_[i] > times_[i - 1]))
                throw ArgumentError("trace: time not strictly increasing at index " +
                                    std::to_string(i));
        }
    }

    std::span<const double> times() const { return times_; }
    std::span<const double> values() const { return values_; }
    double time(std::size_t i) const { return times_.at(i); }
    double value(std::size_t i) const { return values_.at(i); }
    std::size_t size() const { return times_.size(); }
    Channel channel() const { return channel_; }
    const Meta& meta() const { return meta_; }

    // Same times, channel and meta; new values.
    Trace with_values(std::vector<double> values) const {
        return Trace(times_, std::move(values), channel_, meta_);
    }

    bool operator==(const Trace&) const = default;

private:
    std::vector<double> times_;
    std::vector<double> values_;
    Channel channel_;
    Meta meta_;
};

/// Ramp of a trace: from the sample where the rise starts to the global maximum.
struct RampSegment {
    std::size_t onset_index;
    std::size_t peak_index;

    std::size_t length() const { return peak_index - onset_index + 1; }
};

struct LineFit {
    double slope;
    double intercept;
    double r2;
};

/// Force channel plus the optional displacement channel of one recording.
struct Recording {
    Trace force;
    std::optional<Trace> displacement;
};

namespace detail {

inline void require_samples(const Trace& trace, std::size_t n, const char* what) {
    if (trace.size() < n)
        throw InsufficientDataError(std::string(what) + ": needs at least " + std::to_string(n) +
                                    " samples, got " + std::to_string(trace.size()));
}

struct ParsedColumns {
    std::vector<double> t;
    std::vector<double> force;
    std::vector<double> displacement;
    bool has_displacement = false;
    std::vector<std::string> comments;
};

inline ParsedColumns parse_trace_csv(std::istream& in, bool need_force, bool need_displacement) {
    const csv::Table table = csv::read(in);
    const auto t_col = table.column("t");
    const auto f_col = table.column("force");
    const auto d_col = table.column("displacement");
    if (!t_col) throw ParseError(table.header_line, "header lacks column 't'");
    if (need_force && !f_col) throw ParseError(table.header_line, "header lacks column 'force'");
    if (need_displacement && !d_col)
        throw ParseError(table.header_line, "header lacks column 'displacement'");

    ParsedColumns out;
    out.comments = table.comments;
    std::size_t present = 0;
    std::size_t first_missing_line = 0;
    for (const auto& row : table.rows) {
        if (row.fields.size() > table.header.size())
            throw ParseError(row.line, "more fields than header columns");
        const double t = csv::number(row, *t_col, "t");
        if (!out.t.empty() && !(t > out.t.back()))
            throw ParseError(row.line, "non-increasing timestamp " + row.fields[*t_col]);
        out.t.push_back(t);
        if (f_col && need_force) out.force.push_back(csv::number(row, *f_col, "force"));
        if (d_col) {
            if (*d_col < row.fields.size() && !row.fields[*d_col].empty()) {
                out.displacement.push_back(csv::number(row, *d_col, "displacement"));
                ++present;
            } else {
                if (need_displacement) throw ParseError(row.line, "missing value for 'displacement'");
                if (first_missing_line == 0) first_missing_line = row.line;
            }
        }
    }
    if (present > 0 && first_missing_line != 0)
        throw ParseError(first_missing_line, "displacement column is only partially filled");
    if (out.t.size() < 2)
        throw InsufficientDataError("trace file needs at least 2 rows, got " +
                                    std::to_string(out.t.size()));
    out.has_displacement = present > 0;
    return out;
}

inline Meta comments_to_meta(const std::vector<std::string>& comments) {
    Meta meta;
    for (const auto& c : comments) {
        const auto eq = c.find('=');
        if (eq == std::string::npos) continue;
        meta.emplace(std::string(csv::trim(std::string_view(c).substr(0, eq))),
                     std::string(csv::trim(std::string_view(c).substr(eq + 1))));
    }
    return meta;
}

}  // namespace detail

/// Parses a `t,force,displacement` CSV and returns the selected channel.
inline Trace load_trace(std::istream& in, Channel channel) {
    auto cols = detail::parse_trace_csv(in, channel == Channel::force,
                                        channel == Channel::displacement);
    auto meta = detail::comments_to_meta(cols.comments);
    if (channel == Channel::force) return Trace(std::move(cols.t), std::move(cols.force), channel, meta);
    return Trace(std::move(cols.t), std::move(cols.displacement), channel, meta);
}

/// Parses both channels; displacement is absent when its column is empty.
inline Recording load_recording(std::istream& in) {
    auto cols = detail::parse_trace_csv(in, true, false);
    auto meta = detail::comments_to_meta(cols.comments);
    Recording rec{Trace(cols.t, std::move(cols.force), Channel::force, meta), std::nullopt};
    if (cols.has_displacement)
        rec.displacement = Trace(std::move(cols.t), std::move(cols.displacement),
                                 Channel::displacement, meta);
    return rec;
}

/// Writes the trace CSV schema at full round-trip precision. `comments` become
/// leading `# key=value` lines.
inline void write_recording(std::ostream& out, const Trace& force, const Trace* displacement,
                            const std::vector<std::pair<std::string, std::string>>& comments = {}) {
    if (displacement && displacement->times().size() != force.times().size())
        throw ArgumentError("write_recording: channel lengths differ");
    for (const auto& [key, value] : comments) out << "# " << key << '=' << value << '\n';
    out << "t,force,displacement\n";
    for (std::size_t i = 0; i < force.size(); ++i) {
        out << csv::format(force.time(i)) << ',' << csv::format(force.value(i)) << ',';
        if (displacement) out << csv::format(displacement->value(i));
        out << '\n';
    }
}

/// Centered moving average. Near the ends the window is clipped to the
/// samples that exist, so the output keeps the input length and timestamps.
inline Trace moving_average(const Trace& trace, std::size_t window = 100) {
    if (window < 1) throw ArgumentError("moving_average: window must be >= 1");
    const auto v = trace.values();
    const std::size_t n = v.size();
    const std::size_t left = (window - 1) / 2;
    const std::size_t right = window / 2;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= left ? i - left : 0;
        const std::size_t hi = std::min(n - 1, i + right);
        // Deviations from the center sample keep constant runs exact.
        double acc = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) acc += v[j] - v[i];
        out[i] = v[i] + acc / static_cast<double>(hi - lo + 1);
    }
    return trace.with_values(std::move(out));
}

/// Locates the loading ramp from first differences.
///
/// The peak is the first global maximum. The onset walks back from the steepest
/// rising difference while the difference stays above `onset_fraction` of it.
inline RampSegment extract_ramp(const Trace& trace, double onset_fraction = 0.05) {
    detail::require_samples(trace, 3, "extract_ramp");
    if (!(onset_fraction >= 0.0 && onset_fraction < 1.0))
        throw ArgumentError("extract_ramp: onset fraction must lie in [0, 1)");
    const auto t = trace.times();
    const auto v = trace.values();
    const std::size_t peak =
        static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    if (peak == 0) throw NoRampError("extract_ramp: trace never rises above its first sample");

    std::vector<double> diff(peak);
    for (std::size_t i = 0; i < peak; ++i) diff[i] = (v[i + 1] - v[i]) / (t[i + 1] - t[i]);
    const std::size_t steepest =
        static_cast<std::size_t>(std::max_element(diff.begin(), diff.end()) - diff.begin());
    const double max_rate = diff[steepest];
    if (!(max_rate > 0.0)) throw NoRampError("extract_ramp: derivative peak is zero");

    const double threshold = onset_fraction * max_rate;
    std::size_t onset = steepest;
    while (onset > 0 && diff[onset - 1] > threshold) --onset;
    return {onset, peak};
}

/// Ordinary least squares y = slope * x + intercept.
inline LineFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ArgumentError("linear_fit: x and y differ in length");
    if (x.size() < 2) throw InsufficientDataError("linear_fit: needs at least 2 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw SingularFitError("linear_fit: x values are all identical");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (slope * x[i] + intercept);
        ss_res += r * r;
    }
    const double r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return {slope, intercept, r2};
}

struct CueOptions {
    std::size_t window = 100;
    double onset_fraction = 0.05;
};

/// Slope of the smoothed force ramp against time (N/s).
///
/// Smoothing bends the ramp near both of its ends. When the ramp is long
/// enough, one window at each end is left out of the regression so a linear
/// ramp is fitted exactly; short ramps use the whole slice.
inline LineFit force_rate(const Trace& trace, const CueOptions& opt = {}) {
    if (trace.channel() != Channel::force) throw ArgumentError("force_rate: needs a force trace");
    const Trace smooth = moving_average(trace, opt.window);
    const RampSegment ramp = extract_ramp(smooth, opt.onset_fraction);
    std::size_t first = ramp.onset_index, last = ramp.peak_index;
    if (opt.window > 1 && ramp.onset_index + 2 * opt.window + 3 <= ramp.peak_index) {
        first = ramp.onset_index + opt.window;
        last = ramp.peak_index - opt.window;
    }
    return linear_fit(smooth.times().subspan(first, last - first + 1),
                      smooth.values().subspan(first, last - first + 1));
}

/// |end - start| of the movement in mm; works for either movement direction.
inline double displacement_amplitude(const Trace& trace, const CueOptions& opt = {}) {
    if (trace.channel() != Channel::displacement)
        throw ArgumentError("displacement_amplitude: needs a displacement trace");
    const Trace smooth = moving_average(trace, opt.window);
    const auto v = smooth.values();
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const bool rising = (*hi - v.front()) >= (v.front() - *lo);
    std::vector<double> oriented(v.begin(), v.end());
    if (!rising)
        for (double& x : oriented) x = -x;
    const RampSegment ramp = extract_ramp(smooth.with_values(oriented), opt.onset_fraction);
    return std::abs(v[ramp.peak_index] - v[ramp.onset_index]);
}

/// Keeps samples 0, factor, 2*factor, ...
inline Trace downsample(const Trace& trace, std::size_t factor = 50) {
    if (factor < 1) throw ArgumentError("downsample: factor must be >= 1");
    std::vector<double> t, v;
    for (std::size_t i = 0; i < trace.size(); i += factor) {
        t.push_back(trace.time(i));
        v.push_back(trace.value(i));
    }
    return Trace(std::move(t), std::move(v), trace.channel(), trace.meta());
}

/// Logistic membership 1 / (1 + exp(-rate (x - center))). The center defaults
/// to the sample mean. Outputs are kept strictly inside (0, 1).
inline std::vector<double> sigmoid_normalize(std::span<const double> values,
                                             std::optional<double> center = std::nullopt,
                                             std::optional<double> rate = std::nullopt) {
    if (values.empty()) return {};
    double c = 0.0;
    if (center) {
        c = *center;
    } else {
        for (double x : values) c += x;
        c /= static_cast<double>(values.size());
    }
    const double r = rate.value_or(1.0);
    constexpr double lo = std::numeric_limits<double>::min();
    const double hi = std::nextafter(1.0, 0.0);
    std::vector<double> out;
    out.reserve(values.size());
    for (double x : values) out.push_back(std::clamp(1.0 / (1.0 + std::exp(-r * (x - c))), lo, hi));
    return out;
}

/// Central-difference derivative (one-sided at the ends), same timestamps.
inline Trace derivative(const Trace& trace) {
    detail::require_samples(trace, 2, "derivative");
    const auto t = trace.times();
    const auto v = trace.values();
    const std::size_t n = v.size();
    std::vector<double> d(n);
    d[0] = (v[1] - v[0]) / (t[1] - t[0]);
    d[n - 1] = (v[n - 1] - v[n - 2]) / (t[n - 1] - t[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (t[i + 1] - t[i - 1]);
    return trace.with_values(std::move(d));
}

/// First `count` samples.
inline Trace crop(const Trace& trace, std::size_t count) {
    if (count < 1) throw ArgumentError("crop: empty window");
    count = std::min(count, trace.size());
    return Trace({trace.times().begin(), trace.times().begin() + static_cast<std::ptrdiff_t>(count)},
                 {trace.values().begin(), trace.values().begin() + static_cast<std::ptrdiff_t>(count)},
                 trace.channel(), trace.meta());
}

/// Sample-wise mean of repeated trials, truncated to the shortest trial.
/// Timestamps come from the first trial.
inline Trace average_trials(std::span<const Trace> trials) {
    if (trials.empty()) throw InsufficientDataError("average_trials: no trials");
    std::size_t n = trials.front().size();
    for (const auto& tr : trials) {
        if (tr.channel() != trials.front().channel())
            throw ArgumentError("average_trials: mixed channels");
        n = std::min(n, tr.size());
    }
    std::vector<double> mean(n, 0.0);
    for (const auto& tr : trials)
        for (std::size_t i = 0; i < n; ++i) mean[i] += tr.value(i);
    for (double& m : mean) m /= static_cast<double>(trials.size());
    return crop(trials.front(), n).with_values(std::move(mean));
}

}  // namespace softcue
