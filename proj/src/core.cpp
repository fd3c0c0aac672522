#include "bayeswin/core.hpp"

#include <algorithm>
#include <cmath>

namespace bayeswin {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ContractViolation(what);
}

bool is_probability(double p) { return std::isfinite(p) && p > 0.0 && p < 1.0; }

}  // namespace

void ExperimentConfig::validate() const {
    require(n_arms >= 2, "n_arms must be >= 2");
    require(batch_size >= 1, "batch_size must be positive");
    require(is_probability(detection_threshold), "detection_threshold must lie in (0,1)");
    require(std::isfinite(prior_alpha) && prior_alpha > 0.0, "prior_alpha must be positive");
    require(std::isfinite(prior_beta) && prior_beta > 0.0, "prior_beta must be positive");
    require(min_memory >= 2, "min_memory must be >= 2");
    require(is_probability(mde_power), "mde_power must lie in (0,1)");
    require(std::isfinite(h1_prior_sd_ratio) && h1_prior_sd_ratio > 0.0,
            "h1_prior_sd_ratio must be positive");
    require(allocation_samples >= 1, "allocation_samples must be positive");
    require(fixed_window >= min_memory, "fixed_window must be >= min_memory");
}

std::uint64_t BatchStats::total_assignments() const {
    std::uint64_t total = 0;
    for (const auto& c : per_arm) total += c.assignments;
    return total;
}

void BatchStats::validate() const {
    require(!per_arm.empty(), "batch has no arms");
    for (std::size_t a = 0; a < per_arm.size(); ++a) {
        require(per_arm[a].successes <= per_arm[a].assignments,
                "batch " + std::to_string(update_index) + " arm " + std::to_string(a) +
                    ": successes exceed assignments");
    }
}

WindowMemory::WindowMemory(std::size_t min_memory) : min_memory_(min_memory) {
    require(min_memory >= 2, "min_memory must be >= 2");
}

std::size_t WindowMemory::n_arms() const noexcept {
    return batches_.empty() ? 0 : batches_.front().per_arm.size();
}

WindowMemory append_batch(WindowMemory memory, BatchStats batch) {
    batch.validate();
    if (!memory.batches_.empty()) {
        const auto last = memory.batches_.back().update_index;
        require(batch.update_index == last + 1,
                "non-contiguous update_index: expected " + std::to_string(last + 1) + ", got " +
                    std::to_string(batch.update_index));
        require(batch.per_arm.size() == memory.n_arms(), "batch arm count differs from window");
    }
    memory.batches_.push_back(std::move(batch));
    return memory;
}

WindowMemory drop_oldest(WindowMemory memory, std::size_t k) {
    const std::size_t m = memory.batches_.size();
    const std::size_t removable = m > memory.min_memory_ ? m - memory.min_memory_ : 0;
    const std::size_t n = std::min(k, removable);
    memory.batches_.erase(memory.batches_.begin(),
                          memory.batches_.begin() + static_cast<std::ptrdiff_t>(n));
    return memory;
}

std::vector<ArmWindowSummary> summarize_window(const WindowMemory& memory) {
    require(!memory.empty(), "summarize_window on empty memory");
    std::vector<ArmWindowSummary> out(memory.n_arms());
    for (std::size_t a = 0; a < out.size(); ++a) out[a].arm = a;
    for (const auto& batch : memory.batches()) {
        for (std::size_t a = 0; a < out.size(); ++a) {
            out[a].n += batch.per_arm[a].assignments;
            out[a].s += batch.per_arm[a].successes;
        }
    }
    for (auto& summary : out) {
        if (summary.n > 0)
            summary.r_mle = static_cast<double>(summary.s) / static_cast<double>(summary.n);
    }
    return out;
}

}  // namespace bayeswin
