#pragma once

// Same-different signal detection under the differencing rule, and
// maximum-likelihood psychometric functions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "softcue/detail/numeric.hpp"
#include "softcue/errors.hpp"

namespace softcue::psycho {

/// Trial and "different"-response counts of a same-different block.
struct ResponseTable {
    long n_same = 0;
    long n_diff = 0;
    long resp_diff_given_same = 0;
    long resp_diff_given_diff = 0;

    void validate() const {
        if (n_same < 1 || n_diff < 1) throw ArgumentError("ResponseTable: trial counts must be >= 1");
        if (resp_diff_given_same < 0 || resp_diff_given_same > n_same || resp_diff_given_diff < 0 ||
            resp_diff_given_diff > n_diff)
            throw ArgumentError("ResponseTable: response counts outside [0, trials]");
    }
};

enum class RateCorrection { none, half_trial };

struct Rates {
    double hit;
    double false_alarm;
};

namespace detail {

inline double corrected(long k, long n, RateCorrection c) {
    const double r = static_cast<double>(k) / static_cast<double>(n);
    if (c == RateCorrection::none) return r;
    const double half = 0.5 / static_cast<double>(n);
    if (k == 0) return half;
    if (k == n) return 1.0 - half;
    return r;
}

}  // namespace detail

/// Hit = P("different" | different pair), false alarm = P("different" | same pair).
/// The half-trial correction maps 0 to 1/(2N) and 1 to 1 - 1/(2N).
inline Rates rates(const ResponseTable& table, RateCorrection correction = RateCorrection::none) {
    table.validate();
    return {detail::corrected(table.resp_diff_given_diff, table.n_diff, correction),
            detail::corrected(table.resp_diff_given_same, table.n_same, correction)};
}

/// Forward differencing model: the observer answers "different" when the
/// absolute difference of two unit-variance observations exceeds `criterion`.
inline Rates roc_differencing(double dprime, double criterion) {
    if (dprime < 0.0 || criterion < 0.0)
        throw ArgumentError("roc_differencing: d' and criterion must be non-negative");
    using softcue::detail::normal_cdf;
    const double root2 = std::numbers::sqrt2;
    const double fa = 2.0 * normal_cdf(-criterion / root2);
    const double hit = normal_cdf((dprime - criterion) / root2) + normal_cdf(-(dprime + criterion) / root2);
    return {hit, fa};
}

/// Criterion implied by a false-alarm rate: c = -sqrt(2) Phi^-1(fa / 2).
inline double differencing_criterion(double false_alarm) {
    // -sqrt(2) Phi^-1(p/2) == 2 erfc^-1(p)
    return 2.0 * boost::math::erfc_inv(false_alarm);
}

/// Inverts the differencing model for d'. Returns 0 when hit <= fa and caps
/// at the top of the [0, 10] search interval.
inline double dprime_differencing(double hit, double false_alarm) {
    if (!(hit > 0.0 && hit < 1.0) || !(false_alarm > 0.0 && false_alarm < 1.0))
        throw MustCorrectError("dprime_differencing: rates must lie strictly inside (0, 1)");
    if (hit <= false_alarm) return 0.0;
    const double c = differencing_criterion(false_alarm);
    constexpr double upper = 10.0;
    const auto excess = [&](double d) { return roc_differencing(d, c).hit - hit; };
    if (excess(upper) <= 0.0) return upper;
    return softcue::detail::bisect(excess, 0.0, upper, 1e-13);
}

struct Response {
    bool truth;     // the pair was different
    bool response;  // the observer said different
};

inline double percent_correct(std::span<const Response> responses) {
    if (responses.empty()) throw InsufficientDataError("percent_correct: no responses");
    std::size_t correct = 0;
    for (const auto& r : responses) correct += r.truth == r.response ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(responses.size());
}

struct PsychometricOptions {
    double guess = 0.5;       // same-different chance level
    double max_lapse = 0.1;
    // Beta-binomial intra-class correlation in (0, 1); plain binomial when unset.
    std::optional<double> overdispersion;
};

struct PsychometricFit {
    double threshold;
    double slope;
    double lapse;
    double deviance;
    double guess;
    double log_likelihood;

    /// psi(x) = guess + (1 - guess - lapse) * logistic(slope (x - threshold))
    double operator()(double x) const {
        return guess + (1.0 - guess - lapse) / (1.0 + std::exp(-slope * (x - threshold)));
    }
};

namespace detail {

inline double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

inline double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// Log-likelihood of y successes in n at probability p, without the
// binomial coefficient (it cancels in the deviance).
inline double log_lik(double y, double n, double p, const std::optional<double>& rho) {
    if (!rho) return xlogy(y, p) + xlogy(n - y, 1.0 - p);
    if (p <= 0.0) return y == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return y == n ? 0.0 : -std::numeric_limits<double>::infinity();
    const double scale = (1.0 - *rho) / *rho;
    const double a = p * scale, b = (1.0 - p) * scale;
    return log_beta(y + a, n - y + b) - log_beta(a, b);
}

}  // namespace detail

/// Maximum-likelihood psychometric function with fixed guess rate and bounded
/// lapse. The deviance is 2 (LL_saturated - LL_model).
inline PsychometricFit fit_psychometric(std::span<const double> levels, std::span<const double> n_correct,
                                        std::span<const double> n_total, const PsychometricOptions& opt = {}) {
    if (levels.size() != n_correct.size() || levels.size() != n_total.size())
        throw ArgumentError("fit_psychometric: input lengths differ");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!std::isfinite(levels[i])) throw ArgumentError("fit_psychometric: non-finite level");
        if (!(n_total[i] > 0.0) || n_correct[i] < 0.0 || n_correct[i] > n_total[i])
            throw ArgumentError("fit_psychometric: counts outside [0, total]");
    }
    if (std::set<double>(levels.begin(), levels.end()).size() < 3)
        throw FitError("fit_psychometric: needs at least 3 distinct stimulus levels");
    if (!(opt.guess >= 0.0 && opt.guess < 1.0)) throw ArgumentError("fit_psychometric: guess outside [0, 1)");
    if (!(opt.max_lapse >= 0.0 && opt.guess + opt.max_lapse < 1.0))
        throw ArgumentError("fit_psychometric: invalid lapse bound");
    if (opt.overdispersion && !(*opt.overdispersion > 0.0 && *opt.overdispersion < 1.0))
        throw ArgumentError("fit_psychometric: overdispersion must lie in (0, 1)");

    const auto [lo_it, hi_it] = std::minmax_element(levels.begin(), levels.end());
    const double lo = *lo_it, hi = *hi_it, range = hi - lo;
    const double log_slope_min = std::log(1e-3 / range);
    const double log_slope_max = std::log(1e4 / range);

    // Parameters: threshold, log slope, lapse (clamped into bounds).
    using Params = std::array<double, 3>;
    auto unpack = [&](const Params& x) {
        PsychometricFit f{};
        f.threshold = x[0];
        f.slope = std::exp(std::clamp(x[1], log_slope_min, log_slope_max));
        f.lapse = std::clamp(x[2], 0.0, opt.max_lapse);
        f.guess = opt.guess;
        return f;
    };
    auto negative_ll = [&](const Params& x) {
        const PsychometricFit f = unpack(x);
        double ll = 0.0;
        for (std::size_t i = 0; i < levels.size(); ++i)
            ll += detail::log_lik(n_correct[i], n_total[i], f(levels[i]), opt.overdispersion);
        // Soft walls keep the simplex near the feasible box.
        const double over = std::max(0.0, x[1] - log_slope_max) + std::max(0.0, log_slope_min - x[1]) +
                            std::max(0.0, x[2] - opt.max_lapse) + std::max(0.0, -x[2]);
        return -ll + over * over;
    };

    // Deterministic multi-start grid, then simplex refinement of the best nodes.
    std::vector<std::pair<double, Params>> starts;
    for (int ti = 0; ti <= 8; ++ti)
        for (double rel_slope : {1.0, 4.0, 16.0, 64.0})
            for (double lapse : {0.0, 0.5 * opt.max_lapse}) {
                const Params x{lo + range * ti / 8.0, std::log(rel_slope / range), lapse};
                starts.emplace_back(negative_ll(x), x);
            }
    std::stable_sort(starts.begin(), starts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    Params best = starts.front().second;
    double best_value = starts.front().first;
    for (std::size_t s = 0; s < std::min<std::size_t>(4, starts.size()); ++s) {
        auto run = softcue::detail::nelder_mead<3>(negative_ll, starts[s].second,
                                                   {0.05 * range, 0.5, 0.25 * opt.max_lapse + 1e-3});
        // Restart once from the result to shake off a collapsed simplex.
        run = softcue::detail::nelder_mead<3>(negative_ll, run.x, {0.01 * range, 0.1, 0.05 * opt.max_lapse + 1e-4});
        if (run.value < best_value) {
            best_value = run.value;
            best = run.x;
        }
    }

    PsychometricFit fit = unpack(best);
    double ll_model = 0.0, ll_saturated = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        ll_model += detail::log_lik(n_correct[i], n_total[i], fit(levels[i]), opt.overdispersion);
        ll_saturated += detail::log_lik(n_correct[i], n_total[i], n_correct[i] / n_total[i], opt.overdispersion);
    }
    fit.log_likelihood = ll_model;
    fit.deviance = std::max(0.0, 2.0 * (ll_saturated - ll_model));
    return fit;
}

}  // namespace softcue::psycho
