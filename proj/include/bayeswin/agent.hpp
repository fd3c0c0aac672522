// agent.hpp
//
// Batched Thompson-sampling agent. Each update runs a fixed pipeline:
//   append -> summarise -> shrink estimates -> pairwise tests
//   -> memory policy -> posteriors -> allocation plan
// and every stage's output is kept in the returned snapshot.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bayeswin/core.hpp"
#include "bayeswin/estimation.hpp"
#include "bayeswin/hypothesis.hpp"
#include "bayeswin/memory.hpp"

namespace bayeswin {

struct ArmPosterior {
    ArmId arm = 0;
    double alpha = 1.0;
    double beta = 1.0;

    friend bool operator==(const ArmPosterior&, const ArmPosterior&) = default;
};

struct AllocationPlan {
    std::vector<double> shares;

    static AllocationPlan uniform(std::size_t n_arms);
    // Shares are non-negative and sum to 1 within 1e-9.
    void validate() const;

    friend bool operator==(const AllocationPlan&, const AllocationPlan&) = default;
};

struct PolicyState {
    PolicyKind kind = PolicyKind::bayeswin;
    PolicyDecision decision;
    std::size_t memory_before = 0;  // m before the newest batch was appended
    std::size_t memory_after = 0;   // m after the policy was applied

    friend bool operator==(const PolicyState&, const PolicyState&) = default;
};

struct AgentSnapshot {
    // Index of the most recent batch absorbed; empty before the first update.
    std::optional<std::uint64_t> update_index;
    WindowMemory memory;
    std::vector<ArmWindowSummary> summaries;
    ShrunkEstimates estimates;
    std::vector<PairwiseTest> tests;
    PolicyState policy;
    std::vector<ArmPosterior> posteriors;
    AllocationPlan plan;

    std::uint64_t next_update_index() const { return update_index ? *update_index + 1 : 0; }
};

// Agent with an empty window, prior posteriors and a uniform plan.
AgentSnapshot initial_snapshot(const ExperimentConfig& config, PolicyKind policy);

// Beta(prior_alpha + s, prior_beta + n - s) per arm over the window.
std::vector<ArmPosterior> posteriors_from_window(const WindowMemory& memory,
                                                 const ExperimentConfig& config);

// Monte-Carlo probability that each arm's posterior draw is the largest.
// Ties go to the lowest arm index. Deterministic in `seed`.
AllocationPlan thompson_shares(std::span<const ArmPosterior> posteriors, std::size_t samples,
                               std::uint64_t seed);

// FNV-1a 64 of `unit_id + ":" + experiment_id`, avalanched with the
// splitmix64 finaliser.
std::uint64_t assignment_hash(std::string_view unit_id, std::string_view experiment_id);

// Maps the hash to u in [0,1) and returns the arm whose cumulative share
// interval (arm-index order) contains u.
ArmId hash_assign(std::string_view unit_id, std::string_view experiment_id,
                  const AllocationPlan& plan);

// Runs the full pipeline. The input snapshot is never modified; any stage
// failure propagates as an exception.
AgentSnapshot agent_update(const AgentSnapshot& snapshot, BatchStats batch,
                           const ExperimentConfig& config, PolicyKind policy,
                           std::uint64_t allocation_seed);

// Versioned JSON document ("version": 1).
std::string snapshot_to_json(const AgentSnapshot& snapshot);
AgentSnapshot snapshot_from_json(std::string_view text);

}  // namespace bayeswin
