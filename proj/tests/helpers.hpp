#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <utility>
#include <vector>

#include "bayeswin/core.hpp"

namespace testutil {

inline bayeswin::ArmWindowSummary summary(bayeswin::ArmId arm, std::uint64_t s, std::uint64_t n) {
    bayeswin::ArmWindowSummary out{arm, n, s, std::nullopt};
    if (n > 0) out.r_mle = static_cast<double>(s) / static_cast<double>(n);
    return out;
}

// {assignments, successes} per arm.
inline bayeswin::BatchStats batch(std::uint64_t index,
                                  std::initializer_list<std::pair<std::uint64_t, std::uint64_t>> arms) {
    bayeswin::BatchStats b;
    b.update_index = index;
    for (auto [n, s] : arms) b.per_arm.push_back({n, s});
    return b;
}

inline bayeswin::WindowMemory window_of(const std::vector<bayeswin::BatchStats>& batches,
                                        std::size_t min_memory = 2) {
    bayeswin::WindowMemory m(min_memory);
    for (const auto& b : batches) m = append_batch(std::move(m), b);
    return m;
}

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline bool rel_close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

}  // namespace testutil
