#include "bayeswin/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bayeswin {

namespace {

void require_data(const ArmWindowSummary& s) {
    if (s.n == 0)
        throw InsufficientData(s.arm, "arm " + std::to_string(s.arm) + " has no assignments in window");
}

}  // namespace

double ShrunkEstimates::at(ArmId arm) const {
    for (std::size_t i = 0; i < arms.size(); ++i)
        if (arms[i] == arm) return r_js[i];
    throw ContractViolation("no shrunk estimate for arm " + std::to_string(arm));
}

ShrunkEstimates james_stein(std::span<const ArmWindowSummary> summaries) {
    if (summaries.size() < 2) throw ContractViolation("james_stein needs at least 2 arms");
    for (const auto& s : summaries) require_data(s);

    const auto k = static_cast<double>(summaries.size());
    ShrunkEstimates out;
    std::vector<double> r;
    r.reserve(summaries.size());
    double var_sum = 0.0;
    for (const auto& s : summaries) {
        const double rate = static_cast<double>(s.s) / static_cast<double>(s.n);
        r.push_back(rate);
        out.arms.push_back(s.arm);
        var_sum += rate * (1.0 - rate) / static_cast<double>(s.n);
    }
    double mean = 0.0;
    for (double x : r) mean += x;
    mean /= k;

    double spread = 0.0;
    for (double x : r) spread += (x - mean) * (x - mean);

    double c = 1.0;
    if (summaries.size() >= 4 && spread > 0.0) {
        const double v_bar = var_sum / k;
        c = std::max(0.0, 1.0 - (k - 3.0) * v_bar / spread);
    }

    out.grand_mean = mean;
    out.shrink_factor = c;
    out.r_js.reserve(r.size());
    for (double x : r) out.r_js.push_back(c == 1.0 ? x : mean + c * (x - mean));
    return out;
}

double pooled_rate(const ArmWindowSummary& a, const ArmWindowSummary& b) {
    const auto n = a.n + b.n;
    if (n == 0)
        throw InsufficientData(a.arm, "pooled_rate: arms " + std::to_string(a.arm) + " and " +
                                          std::to_string(b.arm) + " have no assignments");
    return static_cast<double>(a.s + b.s) / static_cast<double>(n);
}

double pooled_variance(const ArmWindowSummary& a, const ArmWindowSummary& b, double pooled) {
    double p = pooled;
    if (p <= 0.0 || p >= 1.0) {
        p = (static_cast<double>(a.s + b.s) + 1.0) / (static_cast<double>(a.n + b.n) + 2.0);
    }
    return p * (1.0 - p);
}

double diff_standard_error(const ArmWindowSummary& a, const ArmWindowSummary& b, double pooled) {
    require_data(a);
    require_data(b);
    const double inv_n = 1.0 / static_cast<double>(a.n) + 1.0 / static_cast<double>(b.n);
    return std::sqrt(pooled_variance(a, b, pooled) * inv_n);
}

}  // namespace bayeswin
