#pragma once

// Rank correlation, Mann-Whitney U, effect size, percentile bootstrap,
// seeded k-means and cluster/label agreement.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "softcue/detail/numeric.hpp"
#include "softcue/errors.hpp"

namespace softcue::stats {

/// Average ranks (1-based) with ties sharing their mean rank.
inline std::vector<double> mid_ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ArgumentError("pearson: lengths differ");
    if (x.size() < 2) throw InsufficientDataError("pearson: needs at least 2 pairs");
    const double mx = softcue::detail::mean(x), my = softcue::detail::mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw ArgumentError("correlation undefined: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Spearman's rho: Pearson correlation of mid-ranks.
inline double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ArgumentError("spearman: lengths differ");
    if (x.size() < 2) throw InsufficientDataError("spearman: needs at least 2 pairs");
    const auto rx = mid_ranks(x);
    const auto ry = mid_ranks(y);
    return pearson(rx, ry);
}

struct MannWhitney {
    double u;  // U of the first sample: pairs with a > b, ties counted one half
    double p;
    bool exact;
};

namespace detail {

struct RankSums {
    std::vector<std::int64_t> doubled_ranks;  // pooled, first `n` belong to sample a
    std::int64_t doubled_sum_a = 0;
    std::size_t n = 0, m = 0;
    double tie_term = 0.0;  // sum of t^3 - t over tie groups
};

inline RankSums rank_sums(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw InsufficientDataError("mann_whitney_u: both samples must be non-empty");
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = mid_ranks(pooled);
    RankSums out;
    out.n = a.size();
    out.m = b.size();
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        out.doubled_ranks.push_back(std::llround(2.0 * ranks[i]));
        if (i < a.size()) out.doubled_sum_a += out.doubled_ranks.back();
    }
    std::map<double, std::size_t> groups;
    for (double v : pooled) ++groups[v];
    for (const auto& [v, t] : groups) out.tie_term += static_cast<double>(t * t * t - t);
    return out;
}

inline double u_from_doubled(std::int64_t doubled_sum, std::size_t n) {
    return 0.5 * static_cast<double>(doubled_sum) - static_cast<double>(n * (n + 1)) / 2.0;
}

}  // namespace detail

/// Exact permutation p-value from the rank-sum distribution over every split
/// of the pooled (mid-)ranks, ties included.
inline double mann_whitney_exact_p(std::span<const double> a, std::span<const double> b, bool two_sided = true) {
    const auto rs = detail::rank_sums(a, b);
    const std::size_t total = rs.n + rs.m;
    std::int64_t max_sum = 0;
    for (auto r : rs.doubled_ranks) max_sum += r;
    // ways[c][s]: subsets of size c with doubled rank sum s.
    std::vector<std::vector<double>> ways(rs.n + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t item = 0; item < total; ++item) {
        const auto r = static_cast<std::size_t>(rs.doubled_ranks[item]);
        for (std::size_t c = std::min(rs.n, item + 1); c >= 1; --c)
            for (std::size_t s = static_cast<std::size_t>(max_sum); s >= r; --s) {
                ways[c][s] += ways[c - 1][s - r];
                if (s == r) break;
            }
    }
    // Doubled expected sum is n (N + 1).
    const auto center = static_cast<std::int64_t>(rs.n * (total + 1));
    const std::int64_t observed = rs.doubled_sum_a - center;
    double hits = 0.0, all = 0.0;
    for (std::size_t s = 0; s <= static_cast<std::size_t>(max_sum); ++s) {
        const double w = ways[rs.n][s];
        if (w == 0.0) continue;
        all += w;
        const std::int64_t dev = static_cast<std::int64_t>(s) - center;
        if (two_sided ? std::llabs(dev) >= std::llabs(observed) : dev >= observed) hits += w;
    }
    return std::min(1.0, hits / all);
}

/// Normal approximation with tie-corrected variance and continuity correction.
inline double mann_whitney_normal_p(std::span<const double> a, std::span<const double> b, bool two_sided = true) {
    const auto rs = detail::rank_sums(a, b);
    const double n = static_cast<double>(rs.n), m = static_cast<double>(rs.m), total = n + m;
    const double u = detail::u_from_doubled(rs.doubled_sum_a, rs.n);
    const double mu = n * m / 2.0;
    const double var = n * m / 12.0 * ((total + 1.0) - rs.tie_term / (total * (total - 1.0)));
    if (!(var > 0.0)) return 1.0;
    const double sd = std::sqrt(var);
    if (two_sided) {
        const double z = std::max(0.0, std::abs(u - mu) - 0.5) / sd;
        return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    }
    const double z = (u - mu - 0.5) / sd;
    return 1.0 - softcue::detail::normal_cdf(z);
}

/// Mann-Whitney U of `a` against `b`. Exact when n*m <= 64, normal
/// approximation otherwise. One-sided tests ask whether `a` tends larger.
inline MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b, bool two_sided = true) {
    const auto rs = detail::rank_sums(a, b);
    const double u = detail::u_from_doubled(rs.doubled_sum_a, rs.n);
    const bool exact = rs.n * rs.m <= 64;
    const double p = exact ? mann_whitney_exact_p(a, b, two_sided) : mann_whitney_normal_p(a, b, two_sided);
    return {u, p, exact};
}

/// |mean(a) - mean(b)| over the pooled standard deviation.
inline double cohens_d(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw InsufficientDataError("cohens_d: each sample needs >= 2 values");
    const double sa = softcue::detail::sample_sd(a), sb = softcue::detail::sample_sd(b);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double pooled = std::sqrt(((na - 1.0) * sa * sa + (nb - 1.0) * sb * sb) / (na + nb - 2.0));
    if (!(pooled > 0.0)) throw ArgumentError("cohens_d: zero pooled standard deviation");
    return std::abs(softcue::detail::mean(a) - softcue::detail::mean(b)) / pooled;
}

struct Interval {
    double lo;
    double hi;
};

/// Linear-interpolated quantile of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw InsufficientDataError("quantile: empty data");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

template <class S>
concept Statistic = std::invocable<S, std::span<const double>> &&
                    std::convertible_to<std::invoke_result_t<S, std::span<const double>>, double>;

/// Percentile bootstrap. Iteration i draws from its own generator seeded from
/// (seed, i), so the result does not depend on evaluation order.
template <Statistic S>
Interval bootstrap_ci(std::span<const double> values, S&& statistic, std::size_t iterations = 1000,
                      double level = 0.95, std::uint64_t seed = 0) {
    if (values.empty()) throw InsufficientDataError("bootstrap_ci: no values");
    if (iterations < 1) throw ArgumentError("bootstrap_ci: iterations must be >= 1");
    if (!(level > 0.0 && level < 1.0)) throw ArgumentError("bootstrap_ci: level must lie in (0, 1)");
    std::vector<double> stats_out(iterations);
    std::vector<double> resample(values.size());
    for (std::size_t it = 0; it < iterations; ++it) {
        softcue::detail::Rng rng(softcue::detail::splitmix64(seed) ^ softcue::detail::splitmix64(it + 1));
        for (double& r : resample) r = values[rng.index(values.size())];
        stats_out[it] = statistic(std::span<const double>(resample));
    }
    std::sort(stats_out.begin(), stats_out.end());
    const double tail = (1.0 - level) / 2.0;
    return {quantile_sorted(stats_out, tail), quantile_sorted(stats_out, 1.0 - tail)};
}

inline double mean(std::span<const double> v) { return softcue::detail::mean(v); }

inline double median(std::span<const double> v) {
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    return quantile_sorted(s, 0.5);
}

using Point = std::vector<double>;

struct KMeansResult {
    std::vector<std::size_t> assignments;
    std::vector<Point> centroids;
    double sse;
    std::vector<double> sse_history;  // after each assignment step
    std::size_t iterations;
    bool converged;
};

namespace detail {

inline double squared_distance(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

}  // namespace detail

/// Lloyd's algorithm from a seeded k-means++ start. Ties in nearest-centroid
/// assignment go to the lowest centroid index; an emptied cluster keeps its
/// previous centroid.
inline KMeansResult kmeans(const std::vector<Point>& points, std::size_t k, std::uint64_t seed,
                           std::size_t max_iter = 300) {
    if (k < 1) throw ArgumentError("kmeans: k must be >= 1");
    if (k > points.size()) throw ArgumentError("kmeans: k exceeds the number of points");
    const std::size_t dim = points.front().size();
    for (const auto& p : points) {
        if (p.size() != dim) throw ArgumentError("kmeans: points differ in dimension");
        for (double c : p)
            if (!std::isfinite(c)) throw ArgumentError("kmeans: non-finite coordinate");
    }

    softcue::detail::Rng rng(seed);
    std::vector<Point> centroids;
    std::vector<bool> chosen(points.size(), false);
    std::size_t first = rng.index(points.size());
    centroids.push_back(points[first]);
    chosen[first] = true;
    std::vector<double> nearest(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) nearest[i] = detail::squared_distance(points[i], centroids[0]);
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) total += chosen[i] ? 0.0 : nearest[i];
        std::size_t pick = points.size();
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (chosen[i] || nearest[i] == 0.0) continue;
                acc += nearest[i];
                pick = i;
                if (acc > target) break;
            }
        } else {
            // Every remaining point duplicates a centroid.
            for (std::size_t i = 0; i < points.size() && pick == points.size(); ++i)
                if (!chosen[i]) pick = i;
        }
        chosen[pick] = true;
        centroids.push_back(points[pick]);
        for (std::size_t i = 0; i < points.size(); ++i)
            nearest[i] = std::min(nearest[i], detail::squared_distance(points[i], centroids.back()));
    }

    KMeansResult result{std::vector<std::size_t>(points.size(), k), centroids, 0.0, {}, 0, false};
    for (std::size_t it = 0; it < max_iter; ++it) {
        bool changed = false;
        double sse = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            std::size_t best = 0;
            double best_d = detail::squared_distance(points[i], result.centroids[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = detail::squared_distance(points[i], result.centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (result.assignments[i] != best) changed = true;
            result.assignments[i] = best;
            sse += best_d;
        }
        result.sse_history.push_back(sse);
        result.iterations = it + 1;
        if (!changed) {
            result.converged = true;
            break;
        }
        std::vector<Point> sums(k, Point(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            ++counts[result.assignments[i]];
            for (std::size_t d = 0; d < dim; ++d) sums[result.assignments[i]][d] += points[i][d];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t d = 0; d < dim; ++d) result.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
        }
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
        sse += detail::squared_distance(points[i], result.centroids[result.assignments[i]]);
    result.sse = sse;
    return result;
}

namespace detail {

// Minimum-cost assignment of rows to columns (rows <= cols), Hungarian method.
// Returns the column chosen for each row.
inline std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
    const std::size_t n = cost.size(), m = cost.front().size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<bool> used(m + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n, 0);
    for (std::size_t j = 1; j <= m; ++j)
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

}  // namespace detail

/// Best agreement fraction between two labelings over all one-to-one
/// relabelings of the clusters.
template <class A, class B>
double match_rate(std::span<const A> truth, std::span<const B> assigned) {
    if (truth.size() != assigned.size()) throw ArgumentError("match_rate: lengths differ");
    if (truth.empty()) throw InsufficientDataError("match_rate: no labels");
    std::map<A, std::size_t> truth_ids;
    std::map<B, std::size_t> cluster_ids;
    for (const auto& t : truth) truth_ids.emplace(t, truth_ids.size());
    for (const auto& c : assigned) cluster_ids.emplace(c, cluster_ids.size());
    const std::size_t side = std::max(truth_ids.size(), cluster_ids.size());
    std::vector<std::vector<double>> counts(side, std::vector<double>(side, 0.0));
    for (std::size_t i = 0; i < truth.size(); ++i) counts[cluster_ids[assigned[i]]][truth_ids[truth[i]]] += 1.0;
    std::vector<std::vector<double>> cost(side, std::vector<double>(side));
    for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) cost[r][c] = -counts[r][c];
    const auto match = detail::hungarian(cost);
    double agree = 0.0;
    for (std::size_t r = 0; r < side; ++r) agree += counts[r][match[r]];
    return agree / static_cast<double>(truth.size());
}

}  // namespace softcue::stats
