#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "softcue/errors.hpp"

namespace softcue::detail {

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seeded generator whose output does not depend on the standard library's
// distribution implementations (mt19937_64 itself is fully specified).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal by Box-Muller; the second variate is cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Root of a monotone function on [lo, hi]; f(lo) and f(hi) must differ in sign.
template <class F>
double bisect(F&& f, double lo, double hi, double x_tol, int max_iter = 200) {
    double f_lo = f(lo);
    if (f_lo == 0.0) return lo;
    const double f_hi = f(hi);
    if (f_hi == 0.0) return hi;
    if ((f_lo > 0.0) == (f_hi > 0.0)) throw NumericError("bisect: root not bracketed");
    for (int it = 0; it < max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi || hi - lo <= x_tol) return mid;
        const double f_mid = f(mid);
        if (f_mid == 0.0) return mid;
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct ScalarMax {
    double x;
    double value;
};

// Golden-section search for the maximum of a unimodal function on [lo, hi].
template <class F>
ScalarMax golden_section_max(F&& f, double lo, double hi, double x_tol, int max_iter = 500) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < max_iter && (b - a) > x_tol; ++it) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    // The bracket endpoints are candidates too: the optimum may sit on a bound.
    ScalarMax best{c, fc};
    if (fd > best.value) best = {d, fd};
    for (double x : {lo, hi}) {
        const double fx = f(x);
        if (fx > best.value) best = {x, fx};
    }
    return best;
}

template <std::size_t N>
struct SimplexResult {
    std::array<double, N> x;
    double value;
    int iterations;
};

// Nelder-Mead minimization; deterministic for a fixed start and step.
template <std::size_t N, class F>
SimplexResult<N> nelder_mead(F&& f, std::array<double, N> start, std::array<double, N> step,
                             double f_tol = 1e-14, int max_iter = 5000) {
    using Point = std::array<double, N>;
    std::array<Point, N + 1> simplex;
    std::array<double, N + 1> values;
    simplex[0] = start;
    for (std::size_t i = 0; i < N; ++i) {
        simplex[i + 1] = start;
        simplex[i + 1][i] += step[i];
    }
    for (std::size_t i = 0; i <= N; ++i) values[i] = f(simplex[i]);

    int it = 0;
    for (; it < max_iter; ++it) {
        std::array<std::size_t, N + 1> order;
        for (std::size_t i = 0; i <= N; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order[0], worst = order[N], second = order[N - 1];
        if (std::abs(values[worst] - values[best]) <= f_tol * (std::abs(values[best]) + f_tol)) {
            double spread = 0.0;
            for (std::size_t i = 0; i < N; ++i)
                spread = std::max(spread, std::abs(simplex[worst][i] - simplex[best][i]));
            if (spread < 1e-10) break;
        }

        Point centroid{};
        for (std::size_t i = 0; i <= N; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < N; ++j) centroid[j] += simplex[i][j] / N;
        }
        auto along = [&](double coef) {
            Point p;
            for (std::size_t j = 0; j < N; ++j)
                p[j] = centroid[j] + coef * (simplex[worst][j] - centroid[j]);
            return p;
        };

        const Point reflected = along(-1.0);
        const double f_reflected = f(reflected);
        if (f_reflected < values[best]) {
            const Point expanded = along(-2.0);
            const double f_expanded = f(expanded);
            if (f_expanded < f_reflected) {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
            continue;
        }
        if (f_reflected < values[second]) {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
            continue;
        }
        const bool outside = f_reflected < values[worst];
        const Point contracted = along(outside ? -0.5 : 0.5);
        const double f_contracted = f(contracted);
        if (f_contracted < (outside ? f_reflected : values[worst])) {
            simplex[worst] = contracted;
            values[worst] = f_contracted;
            continue;
        }
        for (std::size_t i = 0; i <= N; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < N; ++j)
                simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
            values[i] = f(simplex[i]);
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i <= N; ++i)
        if (values[i] < values[best]) best = i;
    return {simplex[best], values[best], it};
}

inline double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1); zero for fewer than two values.
inline double sample_sd(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace softcue::detail
