// memory.hpp
//
// Memory policies. Each returns a PolicyDecision; the agent applies it to
// the shared window.
//
// BayesWin decisions are relative to the memory length before the newest
// batch was appended (grow = keep everything, shrink(1) = one batch shorter
// than before the update). The other policies see the window after the
// append and their shrink(k) counts batches dropped from it.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bayeswin/core.hpp"
#include "bayeswin/hypothesis.hpp"

namespace bayeswin {

enum class PolicyKind { bayeswin, adwin, fixed, unbounded };

std::string_view to_string(PolicyKind kind);
// Accepts "bayeswin", "adwin", "fixed", "unbounded".
PolicyKind parse_policy(std::string_view name);

enum class Action { grow, shrink, hold };

std::string_view to_string(Action action);
Action parse_action(std::string_view name);

struct PolicyDecision {
    Action action = Action::hold;
    std::size_t k = 0;  // batches to drop when action == shrink
    std::string reason;

    static PolicyDecision grow(std::string reason) { return {Action::grow, 0, std::move(reason)}; }
    static PolicyDecision shrink(std::size_t k, std::string reason) {
        return {Action::shrink, k, std::move(reason)};
    }
    static PolicyDecision hold(std::string reason) { return {Action::hold, 0, std::move(reason)}; }

    friend bool operator==(const PolicyDecision&, const PolicyDecision&) = default;
};

// Shrinks by one when any pair accepts H1 or every pair accepts H0, grows
// otherwise. Pairs without data count as inconclusive. A shrink that would
// take m below min_memory becomes hold.
PolicyDecision bayeswin_adjust(std::span<const PairwiseTest> tests, double k_threshold,
                               std::size_t m, std::size_t min_memory = 2);

// Change threshold for one arm and one split:
//   delta' = delta / ln m,  m~ = harmonic mean of n0 and n1,
//   eps = sqrt(2/m~ * var * ln(2/delta')) + 2/(3 m~) * ln(2/delta'),
// var = r_w (1 - r_w), Laplace-smoothed when r_w is 0 or 1.
double adwin_epsilon(std::uint64_t n0, std::uint64_t n1, double r_w, double delta, std::size_t m);

struct ArmGap {
    double gap = 0.0;
    double epsilon = 0.0;
    // False when the arm has no assignments on one side of the split.
    bool tested = false;
};

struct AdwinSplit {
    // W0 = batches [0, split_point), W1 = [split_point, m).
    std::size_t split_point = 0;
    std::vector<ArmGap> per_arm_gap;
};

// First split (scanning split points in increasing order) at which some arm
// has |r_W0 - r_W1| >= eps, or nothing if the window is consistent.
std::optional<AdwinSplit> find_adwin_split(const WindowMemory& memory, double delta);

// Drops the oldest batch while some split of some arm violates eps and the
// window is above min_memory. Returns shrink(total dropped) or hold.
PolicyDecision adwin_adjust(const WindowMemory& memory, double delta);

PolicyDecision fixed_window_adjust(std::size_t m, std::size_t target);

}  // namespace bayeswin
