#include "bayeswin/agent.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <json.hpp>

#include "bayeswin/random.hpp"

namespace bayeswin {

AllocationPlan AllocationPlan::uniform(std::size_t n_arms) {
    if (n_arms == 0) throw ContractViolation("plan needs at least one arm");
    return {std::vector<double>(n_arms, 1.0 / static_cast<double>(n_arms))};
}

void AllocationPlan::validate() const {
    if (shares.empty()) throw ContractViolation("plan has no arms");
    double total = 0.0;
    for (double s : shares) {
        if (!(s >= 0.0) || !std::isfinite(s)) throw ContractViolation("plan share must be >= 0");
        total += s;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ContractViolation("plan shares must sum to 1");
}

AgentSnapshot initial_snapshot(const ExperimentConfig& config, PolicyKind policy) {
    config.validate();
    AgentSnapshot snap;
    snap.memory = WindowMemory(config.min_memory);
    snap.policy.kind = policy;
    snap.posteriors = posteriors_from_window(snap.memory, config);
    snap.plan = AllocationPlan::uniform(config.n_arms);
    return snap;
}

std::vector<ArmPosterior> posteriors_from_window(const WindowMemory& memory,
                                                 const ExperimentConfig& config) {
    std::vector<ArmPosterior> out(config.n_arms);
    for (std::size_t a = 0; a < out.size(); ++a) {
        out[a] = {a, config.prior_alpha, config.prior_beta};
    }
    if (!memory.empty() && memory.n_arms() != config.n_arms)
        throw ContractViolation("window arm count differs from config");
    for (const auto& batch : memory.batches()) {
        for (std::size_t a = 0; a < out.size(); ++a) {
            const auto& c = batch.per_arm[a];
            out[a].alpha += static_cast<double>(c.successes);
            out[a].beta += static_cast<double>(c.assignments - c.successes);
        }
    }
    return out;
}

AllocationPlan thompson_shares(std::span<const ArmPosterior> posteriors, std::size_t samples,
                               std::uint64_t seed) {
    if (posteriors.empty()) throw ContractViolation("thompson_shares needs at least one arm");
    if (samples == 0) throw ContractViolation("thompson_shares needs samples >= 1");
    if (posteriors.size() == 1) return {{1.0}};

    Rng rng(seed);
    std::vector<std::gamma_distribution<double>> x, y;
    for (const auto& p : posteriors) {
        x.emplace_back(p.alpha, 1.0);
        y.emplace_back(p.beta, 1.0);
    }
    std::vector<std::uint64_t> wins(posteriors.size(), 0);
    for (std::size_t s = 0; s < samples; ++s) {
        std::size_t best = 0;
        double best_draw = -1.0;
        for (std::size_t a = 0; a < posteriors.size(); ++a) {
            const double gx = x[a](rng);
            const double gy = y[a](rng);
            const double draw = gx / (gx + gy);
            if (draw > best_draw) {
                best_draw = draw;
                best = a;
            }
        }
        ++wins[best];
    }
    AllocationPlan plan;
    plan.shares.reserve(wins.size());
    for (auto w : wins) plan.shares.push_back(static_cast<double>(w) / static_cast<double>(samples));
    return plan;
}

std::uint64_t assignment_hash(std::string_view unit_id, std::string_view experiment_id) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](std::string_view bytes) {
        for (unsigned char c : bytes) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    };
    feed(unit_id);
    feed(":");
    feed(experiment_id);
    return mix64(h);
}

ArmId hash_assign(std::string_view unit_id, std::string_view experiment_id,
                  const AllocationPlan& plan) {
    if (unit_id.empty()) throw ContractViolation("hash_assign: empty unit_id");
    if (experiment_id.empty()) throw ContractViolation("hash_assign: empty experiment_id");
    plan.validate();
    // Top 53 bits give an exactly representable u in [0,1).
    const double u = static_cast<double>(assignment_hash(unit_id, experiment_id) >> 11) * 0x1.0p-53;
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t a = 0; a < plan.shares.size(); ++a) {
        if (plan.shares[a] <= 0.0) continue;
        last_positive = a;
        cumulative += plan.shares[a];
        if (u < cumulative) return a;
    }
    // Only reachable when rounding leaves the total just below u.
    return last_positive;
}

AgentSnapshot agent_update(const AgentSnapshot& snapshot, BatchStats batch,
                           const ExperimentConfig& config, PolicyKind policy,
                           std::uint64_t allocation_seed) {
    if (batch.per_arm.size() != config.n_arms)
        throw ContractViolation("batch arm count differs from config");
    if (batch.update_index != snapshot.next_update_index())
        throw ContractViolation("batch update_index " + std::to_string(batch.update_index) +
                                " does not follow snapshot");

    AgentSnapshot next;
    next.update_index = batch.update_index;
    const std::size_t m_before = snapshot.memory.size();

    // (1)-(4): tests see the window before any policy adjustment.
    WindowMemory memory = append_batch(snapshot.memory, std::move(batch));
    next.summaries = summarize_window(memory);
    {
        std::vector<ArmWindowSummary> with_data;
        for (const auto& s : next.summaries)
            if (s.has_data()) with_data.push_back(s);
        if (with_data.size() >= 2) next.estimates = james_stein(with_data);
    }
    next.tests = test_all_pairs(next.estimates, next.summaries, config);

    // (5)
    const std::size_t m_post = memory.size();
    PolicyDecision decision;
    std::size_t drop = 0;
    switch (policy) {
        case PolicyKind::bayeswin: {
            decision = bayeswin_adjust(next.tests, threshold_from_fdr(config.detection_threshold),
                                       m_before, config.min_memory);
            long target = static_cast<long>(m_before);
            if (decision.action == Action::grow) target += 1;
            if (decision.action == Action::shrink) target -= static_cast<long>(decision.k);
            const long floor = static_cast<long>(std::min(config.min_memory, m_post));
            target = std::clamp(target, floor, static_cast<long>(m_post));
            drop = m_post - static_cast<std::size_t>(target);
            break;
        }
        case PolicyKind::adwin:
            decision = adwin_adjust(memory, config.detection_threshold);
            drop = decision.k;
            break;
        case PolicyKind::fixed:
            decision = fixed_window_adjust(m_post, config.fixed_window);
            drop = decision.k;
            break;
        case PolicyKind::unbounded:
            decision = PolicyDecision::hold("unbounded");
            break;
    }
    next.memory = drop_oldest(std::move(memory), drop);
    next.policy = {policy, decision, m_before, next.memory.size()};

    // (6)-(7)
    next.posteriors = posteriors_from_window(next.memory, config);
    next.plan = thompson_shares(next.posteriors, config.allocation_samples, allocation_seed);
    return next;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using nlohmann::json;

json to_json_value(const BatchStats& b) {
    json assignments = json::array();
    json successes = json::array();
    for (const auto& c : b.per_arm) {
        assignments.push_back(c.assignments);
        successes.push_back(c.successes);
    }
    return {{"update_index", b.update_index}, {"assignments", assignments}, {"successes", successes}};
}

BatchStats batch_from_json(const json& j) {
    BatchStats b;
    b.update_index = j.at("update_index").get<std::uint64_t>();
    const auto& assignments = j.at("assignments");
    const auto& successes = j.at("successes");
    if (assignments.size() != successes.size())
        throw ContractViolation("snapshot batch: assignments/successes length mismatch");
    for (std::size_t a = 0; a < assignments.size(); ++a)
        b.per_arm.push_back({assignments[a].get<std::uint64_t>(), successes[a].get<std::uint64_t>()});
    return b;
}

Decision parse_decision(const std::string& s) {
    if (s == "H1_accepted") return Decision::h1_accepted;
    if (s == "H0_accepted") return Decision::h0_accepted;
    if (s == "inconclusive") return Decision::inconclusive;
    throw ContractViolation("unknown decision '" + s + "'");
}

}  // namespace

std::string snapshot_to_json(const AgentSnapshot& snap) {
    json j;
    j["version"] = 1;
    j["update_index"] = snap.update_index ? json(*snap.update_index) : json(nullptr);

    json batches = json::array();
    for (const auto& b : snap.memory.batches()) batches.push_back(to_json_value(b));
    j["memory"] = {{"m", snap.memory.size()}, {"min_memory", snap.memory.min_memory()},
                   {"batches", batches}};

    json summaries = json::array();
    for (const auto& s : snap.summaries) {
        summaries.push_back({{"arm", s.arm}, {"n", s.n}, {"s", s.s},
                             {"r_mle", s.r_mle ? json(*s.r_mle) : json(nullptr)}});
    }
    j["summaries"] = summaries;
    j["estimates"] = {{"arms", snap.estimates.arms},
                      {"r_js", snap.estimates.r_js},
                      {"grand_mean", snap.estimates.grand_mean},
                      {"shrink_factor", snap.estimates.shrink_factor}};

    json tests = json::array();
    for (const auto& t : snap.tests) {
        tests.push_back({{"pair", {t.arm_i, t.arm_j}},
                         {"observed_effect", t.observed_effect},
                         {"standard_error", t.standard_error},
                         {"mde", t.mde},
                         {"log_bayes_factor", t.log_bf ? json(*t.log_bf) : json(nullptr)},
                         {"band", t.band},
                         {"decision", std::string(to_string(t.decision))},
                         {"no_data", t.no_data()}});
    }
    j["tests"] = tests;

    j["policy"] = {{"name", std::string(to_string(snap.policy.kind))},
                   {"action", std::string(to_string(snap.policy.decision.action))},
                   {"k", snap.policy.decision.k},
                   {"reason", snap.policy.decision.reason},
                   {"memory_before", snap.policy.memory_before},
                   {"memory_after", snap.policy.memory_after}};

    json posteriors = json::array();
    for (const auto& p : snap.posteriors)
        posteriors.push_back({{"arm", p.arm}, {"alpha", p.alpha}, {"beta", p.beta}});
    j["posteriors"] = posteriors;
    j["plan"] = {{"shares", snap.plan.shares}};
    return j.dump(2);
}

AgentSnapshot snapshot_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ContractViolation(std::string("snapshot: ") + e.what());
    }
    if (j.value("version", 0) != 1) throw ContractViolation("snapshot: unsupported version");

    try {
        AgentSnapshot snap;
        if (!j.at("update_index").is_null()) snap.update_index = j.at("update_index").get<std::uint64_t>();

        const auto& mem = j.at("memory");
        snap.memory = WindowMemory(mem.at("min_memory").get<std::size_t>());
        for (const auto& b : mem.at("batches")) snap.memory = append_batch(std::move(snap.memory), batch_from_json(b));
        if (snap.memory.size() != mem.at("m").get<std::size_t>())
            throw ContractViolation("snapshot: m does not match stored batches");

        for (const auto& s : j.at("summaries")) {
            ArmWindowSummary sum{s.at("arm").get<ArmId>(), s.at("n").get<std::uint64_t>(),
                                 s.at("s").get<std::uint64_t>(), std::nullopt};
            if (!s.at("r_mle").is_null()) sum.r_mle = s.at("r_mle").get<double>();
            snap.summaries.push_back(sum);
        }
        const auto& est = j.at("estimates");
        snap.estimates.arms = est.at("arms").get<std::vector<ArmId>>();
        snap.estimates.r_js = est.at("r_js").get<std::vector<double>>();
        snap.estimates.grand_mean = est.at("grand_mean").get<double>();
        snap.estimates.shrink_factor = est.at("shrink_factor").get<double>();

        for (const auto& t : j.at("tests")) {
            PairwiseTest test;
            test.arm_i = t.at("pair").at(0).get<ArmId>();
            test.arm_j = t.at("pair").at(1).get<ArmId>();
            test.observed_effect = t.at("observed_effect").get<double>();
            test.standard_error = t.at("standard_error").get<double>();
            test.mde = t.at("mde").get<double>();
            if (!t.at("log_bayes_factor").is_null()) test.log_bf = t.at("log_bayes_factor").get<double>();
            test.band = t.at("band").get<int>();
            test.decision = parse_decision(t.at("decision").get<std::string>());
            snap.tests.push_back(test);
        }

        const auto& pol = j.at("policy");
        snap.policy.kind = parse_policy(pol.at("name").get<std::string>());
        snap.policy.decision = {parse_action(pol.at("action").get<std::string>()),
                                pol.at("k").get<std::size_t>(), pol.at("reason").get<std::string>()};
        snap.policy.memory_before = pol.at("memory_before").get<std::size_t>();
        snap.policy.memory_after = pol.at("memory_after").get<std::size_t>();

        for (const auto& p : j.at("posteriors"))
            snap.posteriors.push_back({p.at("arm").get<ArmId>(), p.at("alpha").get<double>(),
                                       p.at("beta").get<double>()});
        snap.plan.shares = j.at("plan").at("shares").get<std::vector<double>>();
        return snap;
    } catch (const json::exception& e) {
        throw ContractViolation(std::string("snapshot: ") + e.what());
    }
}

}  // namespace bayeswin
