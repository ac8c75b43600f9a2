#pragma once

// Seeded generators and small helpers shared by the test binaries.

#include <cmath>
#include <cstdint>
#include <vector>

#include "softcue/detail/numeric.hpp"
#include "softcue/trace.hpp"

namespace testing {

using softcue::detail::Rng;

inline std::vector<double> uniform_values(Rng& rng, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

// Evenly sampled trace at `fs` Hz.
inline softcue::Trace sampled(const std::vector<double>& values, double fs,
                              softcue::Channel channel = softcue::Channel::force) {
    std::vector<double> t(values.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i) / fs;
    return softcue::Trace(std::move(t), values, channel);
}

inline bool within_rel(double got, double want, double rel) {
    return std::abs(got - want) <= rel * std::abs(want);
}

}  // namespace testing
