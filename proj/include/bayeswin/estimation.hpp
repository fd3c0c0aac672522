// estimation.hpp
//
// Point estimates over the window: shrunk per-arm rewards, pooled rates and
// the standard error of a reward difference.
#pragma once

#include <span>
#include <vector>

#include "bayeswin/core.hpp"

namespace bayeswin {

struct ShrunkEstimates {
    std::vector<ArmId> arms;
    std::vector<double> r_js;
    double grand_mean = 0.0;
    // 1 keeps the MLEs, 0 collapses every arm to the grand mean.
    double shrink_factor = 1.0;

    // Shrunk estimate for `arm`; throws ContractViolation if absent.
    double at(ArmId arm) const;
};

// Positive-part James-Stein toward the unweighted grand mean of the MLEs.
// With k arms and averaged sampling variance v = mean(r(1-r)/n):
//   c = max(0, 1 - (k-3) v / S),  S = sum (r_i - grand_mean)^2,
// for k >= 4; c = 1 for k < 4 or S = 0.
ShrunkEstimates james_stein(std::span<const ArmWindowSummary> summaries);

double pooled_rate(const ArmWindowSummary& a, const ArmWindowSummary& b);

// Bernoulli variance of the pooled rate, Laplace-smoothed when the pooled
// rate is exactly 0 or 1 so the result stays positive.
double pooled_variance(const ArmWindowSummary& a, const ArmWindowSummary& b, double pooled);

// sqrt(p(1-p)(1/n_a + 1/n_b)) with the smoothing of pooled_variance.
double diff_standard_error(const ArmWindowSummary& a, const ArmWindowSummary& b, double pooled);

}  // namespace bayeswin
