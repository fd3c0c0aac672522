#include "bayeswin/memory.hpp"

#include <cmath>
#include <string>

namespace bayeswin {

std::string_view to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::bayeswin: return "bayeswin";
        case PolicyKind::adwin: return "adwin";
        case PolicyKind::fixed: return "fixed";
        case PolicyKind::unbounded: return "unbounded";
    }
    return "unbounded";
}

PolicyKind parse_policy(std::string_view name) {
    if (name == "bayeswin") return PolicyKind::bayeswin;
    if (name == "adwin") return PolicyKind::adwin;
    if (name == "fixed") return PolicyKind::fixed;
    if (name == "unbounded") return PolicyKind::unbounded;
    throw ContractViolation("unknown policy '" + std::string(name) + "'");
}

std::string_view to_string(Action action) {
    switch (action) {
        case Action::grow: return "grow";
        case Action::shrink: return "shrink";
        case Action::hold: return "hold";
    }
    return "hold";
}

Action parse_action(std::string_view name) {
    if (name == "grow") return Action::grow;
    if (name == "shrink") return Action::shrink;
    if (name == "hold") return Action::hold;
    throw ContractViolation("unknown action '" + std::string(name) + "'");
}

PolicyDecision bayeswin_adjust(std::span<const PairwiseTest> tests, double k_threshold,
                               std::size_t m, std::size_t min_memory) {
    if (tests.empty()) throw ContractViolation("bayeswin_adjust needs at least one test");
    const double log_k = std::log(k_threshold);

    bool any_h1 = false;
    bool all_h0 = true;
    for (const auto& t : tests) {
        if (t.no_data()) {
            all_h0 = false;
            continue;
        }
        if (*t.log_bf > log_k) any_h1 = true;
        if (!(*t.log_bf < -log_k)) all_h0 = false;
    }

    std::string reason;
    if (any_h1)
        reason = "H1_accepted";
    else if (all_h0)
        reason = "all_H0";
    else
        return PolicyDecision::grow("inconclusive");

    if (m <= min_memory) return PolicyDecision::hold(reason);
    return PolicyDecision::shrink(1, reason);
}

double adwin_epsilon(std::uint64_t n0, std::uint64_t n1, double r_w, double delta, std::size_t m) {
    if (m < 2) throw ContractViolation("adwin_epsilon: window must hold at least 2 batches");
    if (n0 == 0 || n1 == 0) throw ContractViolation("adwin_epsilon: empty subwindow");
    if (!(delta > 0.0 && delta < 1.0)) throw ContractViolation("adwin_epsilon: delta must lie in (0,1)");
    if (!(r_w >= 0.0 && r_w <= 1.0)) throw ContractViolation("adwin_epsilon: rate must lie in [0,1]");

    const double a = static_cast<double>(n0);
    const double b = static_cast<double>(n1);
    double p = r_w;
    if (p <= 0.0 || p >= 1.0) p = (r_w * (a + b) + 1.0) / (a + b + 2.0);
    const double variance = p * (1.0 - p);

    const double delta_prime = delta / std::log(static_cast<double>(m));
    const double log_term = std::log(2.0 / delta_prime);
    const double harmonic = 2.0 / (1.0 / a + 1.0 / b);
    return std::sqrt(2.0 / harmonic * variance * log_term) + 2.0 / (3.0 * harmonic) * log_term;
}

namespace {

// Per-arm prefix sums over the window, so any subwindow is O(1).
struct PrefixCounts {
    std::vector<std::vector<std::uint64_t>> n;  // [arm][batch + 1]
    std::vector<std::vector<std::uint64_t>> s;

    explicit PrefixCounts(const WindowMemory& memory) {
        const std::size_t arms = memory.n_arms();
        const std::size_t m = memory.size();
        n.assign(arms, std::vector<std::uint64_t>(m + 1, 0));
        s.assign(arms, std::vector<std::uint64_t>(m + 1, 0));
        for (std::size_t t = 0; t < m; ++t) {
            const auto& batch = memory.batches()[t];
            for (std::size_t a = 0; a < arms; ++a) {
                n[a][t + 1] = n[a][t] + batch.per_arm[a].assignments;
                s[a][t + 1] = s[a][t] + batch.per_arm[a].successes;
            }
        }
    }
};

// Scan the subwindow [begin, end) for a violating split.
std::optional<AdwinSplit> scan(const PrefixCounts& pc, std::size_t begin, std::size_t end,
                               double delta) {
    const std::size_t m = end - begin;
    if (m < 2) return std::nullopt;
    const std::size_t arms = pc.n.size();
    for (std::size_t split = begin + 1; split < end; ++split) {
        AdwinSplit result{split - begin, std::vector<ArmGap>(arms)};
        bool violated = false;
        for (std::size_t a = 0; a < arms; ++a) {
            const auto n0 = pc.n[a][split] - pc.n[a][begin];
            const auto n1 = pc.n[a][end] - pc.n[a][split];
            if (n0 == 0 || n1 == 0) continue;
            const auto s0 = pc.s[a][split] - pc.s[a][begin];
            const auto s1 = pc.s[a][end] - pc.s[a][split];
            const double r0 = static_cast<double>(s0) / static_cast<double>(n0);
            const double r1 = static_cast<double>(s1) / static_cast<double>(n1);
            const double r_w = static_cast<double>(s0 + s1) / static_cast<double>(n0 + n1);
            auto& g = result.per_arm_gap[a];
            g.tested = true;
            g.gap = std::abs(r0 - r1);
            g.epsilon = adwin_epsilon(n0, n1, r_w, delta, m);
            if (g.gap >= g.epsilon) violated = true;
        }
        if (violated) return result;
    }
    return std::nullopt;
}

}  // namespace

std::optional<AdwinSplit> find_adwin_split(const WindowMemory& memory, double delta) {
    if (memory.size() < 2) return std::nullopt;
    const PrefixCounts pc(memory);
    return scan(pc, 0, memory.size(), delta);
}

PolicyDecision adwin_adjust(const WindowMemory& memory, double delta) {
    const std::size_t m = memory.size();
    if (m <= memory.min_memory()) return PolicyDecision::hold("no_split");
    const PrefixCounts pc(memory);
    std::size_t dropped = 0;
    while (m - dropped > memory.min_memory() && scan(pc, dropped, m, delta)) ++dropped;
    if (dropped == 0) return PolicyDecision::hold("no_split");
    return PolicyDecision::shrink(dropped, "split_detected");
}

PolicyDecision fixed_window_adjust(std::size_t m, std::size_t target) {
    if (m > target) return PolicyDecision::shrink(m - target, "fixed");
    return PolicyDecision::hold("fixed");
}

}  // namespace bayeswin
