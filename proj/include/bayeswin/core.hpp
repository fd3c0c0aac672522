// core.hpp
//
// Domain types shared across the library: experiment configuration,
// per-batch aggregates and the sliding window memory built from them.
#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bayeswin {

using ArmId = std::size_t;

// Raised when a caller breaks a documented precondition.
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised when an estimate needs observations that the window does not hold.
class InsufficientData : public std::runtime_error {
public:
    InsufficientData(ArmId arm, const std::string& what)
        : std::runtime_error(what), arm_(arm) {}
    ArmId arm() const noexcept { return arm_; }

private:
    ArmId arm_;
};

struct ExperimentConfig {
    std::size_t n_arms = 5;
    std::size_t batch_size = 1000;
    // p_d for BayesWin, delta for BatchedADWIN.
    double detection_threshold = 0.05;
    double prior_alpha = 1.0;
    double prior_beta = 1.0;
    std::size_t min_memory = 2;
    double mde_power = 0.8;
    double h1_prior_sd_ratio = 0.2;
    std::size_t allocation_samples = 10000;
    // Target length for the "fixed" memory policy.
    std::size_t fixed_window = 20;

    // Throws ContractViolation naming the offending field.
    void validate() const;
};

struct ArmCounts {
    std::uint64_t assignments = 0;
    std::uint64_t successes = 0;

    friend bool operator==(const ArmCounts&, const ArmCounts&) = default;
};

struct BatchStats {
    std::uint64_t update_index = 0;
    std::vector<ArmCounts> per_arm;

    std::uint64_t total_assignments() const;
    // successes <= assignments for every arm.
    void validate() const;

    friend bool operator==(const BatchStats&, const BatchStats&) = default;
};

// The m most recent batches, oldest first. All estimates, tests and
// posteriors are derived from this and nothing else.
class WindowMemory {
public:
    WindowMemory() = default;
    explicit WindowMemory(std::size_t min_memory);

    std::size_t size() const noexcept { return batches_.size(); }
    bool empty() const noexcept { return batches_.empty(); }
    std::size_t min_memory() const noexcept { return min_memory_; }
    const std::deque<BatchStats>& batches() const noexcept { return batches_; }
    // Arm count of the stored batches; 0 when empty.
    std::size_t n_arms() const noexcept;

    friend WindowMemory append_batch(WindowMemory memory, BatchStats batch);
    friend WindowMemory drop_oldest(WindowMemory memory, std::size_t k);
    friend bool operator==(const WindowMemory&, const WindowMemory&) = default;

private:
    std::deque<BatchStats> batches_;
    std::size_t min_memory_ = 2;
};

// Appends at the newest end. The batch index must directly follow the last
// stored index.
WindowMemory append_batch(WindowMemory memory, BatchStats batch);

// Removes up to k oldest batches without going below min_memory. A window
// that is still filling (size <= min_memory) is returned unchanged.
WindowMemory drop_oldest(WindowMemory memory, std::size_t k);

struct ArmWindowSummary {
    ArmId arm = 0;
    std::uint64_t n = 0;
    std::uint64_t s = 0;
    // Empty when the arm has no assignments in the window.
    std::optional<double> r_mle;

    bool has_data() const noexcept { return n > 0; }
};

std::vector<ArmWindowSummary> summarize_window(const WindowMemory& memory);

}  // namespace bayeswin
