#include "bayeswin/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "bayeswin/random.hpp"

namespace bayeswin {

std::string_view to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::stationary: return "stationary";
        case ScenarioKind::abrupt: return "abrupt";
        case ScenarioKind::gradual: return "gradual";
    }
    return "abrupt";
}

ScenarioKind parse_scenario(std::string_view name) {
    if (name == "stationary") return ScenarioKind::stationary;
    if (name == "abrupt") return ScenarioKind::abrupt;
    if (name == "gradual") return ScenarioKind::gradual;
    throw ContractViolation("unknown scenario '" + std::string(name) + "'");
}

void ScenarioSpec::validate() const {
    if (n_arms < 1) throw ContractViolation("scenario needs at least one arm");
    if (updates < 1) throw ContractViolation("scenario needs at least one update");
    if (!(reward_prior_alpha > 0.0) || !(reward_prior_beta > 0.0))
        throw ContractViolation("reward prior shapes must be positive");
    if (kind == ScenarioKind::abrupt && change_update >= updates)
        throw ContractViolation("change_update must be < updates");
    if (!initial_rates.empty()) {
        if (initial_rates.size() != n_arms) throw ContractViolation("initial_rates length must equal n_arms");
        for (double r : initial_rates)
            if (!(r >= 0.0 && r <= 1.0)) throw ContractViolation("initial_rates must lie in [0,1]");
    }
}

RateTrajectory::RateTrajectory(const ScenarioSpec& spec, std::uint64_t run_seed) : spec_(spec) {
    spec_.validate();
    if (!spec_.initial_rates.empty()) {
        initial_ = spec_.initial_rates;
    } else {
        Rng rng(derive_seed(run_seed, Stream::rates));
        for (std::size_t a = 0; a < spec_.n_arms; ++a)
            initial_.push_back(sample_beta(rng, spec_.reward_prior_alpha, spec_.reward_prior_beta));
    }

    permutation_.resize(spec_.n_arms);
    std::iota(permutation_.begin(), permutation_.end(), std::size_t{0});
    if (spec_.kind != ScenarioKind::stationary && spec_.n_arms >= 2) {
        Rng rng(derive_seed(run_seed, Stream::permutation));
        auto is_identity = [&] {
            for (std::size_t i = 0; i < permutation_.size(); ++i)
                if (permutation_[i] != i) return false;
            return true;
        };
        do {
            std::shuffle(permutation_.begin(), permutation_.end(), rng);
        } while (is_identity());
    }
    target_.resize(spec_.n_arms);
    for (std::size_t a = 0; a < spec_.n_arms; ++a) target_[a] = initial_[permutation_[a]];
}

std::vector<double> RateTrajectory::at(std::size_t update) const {
    if (update >= spec_.updates) throw ContractViolation("update beyond scenario length");
    switch (spec_.kind) {
        case ScenarioKind::stationary: return initial_;
        case ScenarioKind::abrupt: return update < spec_.change_update ? initial_ : target_;
        case ScenarioKind::gradual: {
            if (spec_.updates == 1) return initial_;
            if (update == 0) return initial_;
            if (update == spec_.updates - 1) return target_;
            const double t = static_cast<double>(update) / static_cast<double>(spec_.updates - 1);
            std::vector<double> out(initial_.size());
            for (std::size_t a = 0; a < out.size(); ++a)
                out[a] = (1.0 - t) * initial_[a] + t * target_[a];
            return out;
        }
    }
    return initial_;
}

std::vector<double> true_rates(const ScenarioSpec& spec, std::size_t update, std::uint64_t run_seed) {
    return RateTrajectory(spec, run_seed).at(update);
}

BatchStats step_environment(std::span<const double> rates, const AllocationPlan& plan,
                            std::size_t batch_size, std::uint64_t update_index, std::uint64_t seed) {
    plan.validate();
    if (rates.size() != plan.shares.size()) throw ContractViolation("rates and plan differ in arm count");
    Rng rng(seed);
    BatchStats batch;
    batch.update_index = update_index;
    batch.per_arm.resize(rates.size());

    // Multinomial as a chain of conditional binomials.
    std::uint64_t remaining = batch_size;
    double mass_left = 1.0;
    for (std::size_t a = 0; a < rates.size(); ++a) {
        std::uint64_t n = 0;
        if (a + 1 == rates.size()) {
            n = remaining;
        } else if (remaining > 0 && plan.shares[a] > 0.0) {
            const double p = std::clamp(plan.shares[a] / mass_left, 0.0, 1.0);
            n = std::binomial_distribution<std::uint64_t>(remaining, p)(rng);
        }
        remaining -= n;
        mass_left -= plan.shares[a];
        if (mass_left <= 0.0) mass_left = 0.0;
        batch.per_arm[a].assignments = n;
    }
    // Units left over by rounding go to the last arm with positive share.
    if (remaining > 0) {
        for (std::size_t a = rates.size(); a-- > 0;)
            if (plan.shares[a] > 0.0) {
                batch.per_arm[a].assignments += remaining;
                break;
            }
    }
    for (std::size_t a = 0; a < rates.size(); ++a) {
        const auto n = batch.per_arm[a].assignments;
        const double r = std::clamp(rates[a], 0.0, 1.0);
        batch.per_arm[a].successes = n == 0 ? 0 : std::binomial_distribution<std::uint64_t>(n, r)(rng);
    }
    return batch;
}

double regret_for_update(std::span<const double> rates, const AllocationPlan& plan,
                         std::size_t batch_size) {
    if (rates.size() != plan.shares.size()) throw ContractViolation("rates and plan differ in arm count");
    const double best = *std::max_element(rates.begin(), rates.end());
    double expected = 0.0;
    for (std::size_t a = 0; a < rates.size(); ++a) expected += plan.shares[a] * rates[a];
    return std::max(0.0, static_cast<double>(batch_size) * (best - expected));
}

double realised_regret(std::span<const double> rates, const BatchStats& batch) {
    const double best = *std::max_element(rates.begin(), rates.end());
    double total = 0.0;
    for (std::size_t a = 0; a < rates.size(); ++a)
        total += static_cast<double>(batch.per_arm[a].assignments) * (best - rates[a]);
    return total;
}

std::uint64_t run_seed(std::uint64_t base_seed, std::size_t run) {
    return derive_seed(base_seed, static_cast<std::uint64_t>(run));
}

std::uint64_t bootstrap_seed(std::uint64_t base_seed) { return derive_seed(base_seed, 0xB0075u); }

namespace {

std::vector<MetricsRow> simulate_run(const ScenarioSpec& spec, PolicyKind policy,
                                     const ExperimentConfig& config, std::size_t run,
                                     std::uint64_t seed) {
    const RateTrajectory trajectory(spec, seed);
    AgentSnapshot agent = initial_snapshot(config, policy);

    std::vector<MetricsRow> rows;
    rows.reserve(spec.updates);
    std::vector<PairRecord> previous;
    double cum_regret = 0.0;
    double cum_realised = 0.0;
    long cum_band = 0;
    for (std::size_t u = 0; u < spec.updates; ++u) {
        MetricsRow row;
        row.run = run;
        row.update = u;
        row.true_rates = trajectory.at(u);
        row.share_planned = agent.plan.shares;

        BatchStats batch = step_environment(row.true_rates, agent.plan, config.batch_size, u,
                                            derive_seed(seed, Stream::environment, u));
        row.counts = batch.per_arm;
        const double total = static_cast<double>(batch.total_assignments());
        for (const auto& c : batch.per_arm)
            row.share_realised.push_back(total > 0 ? static_cast<double>(c.assignments) / total : 0.0);

        const double best = *std::max_element(row.true_rates.begin(), row.true_rates.end());
        for (std::size_t a = 0; a < row.true_rates.size(); ++a)
            if (row.true_rates[a] == best) row.best_arm_share += row.share_planned[a];

        row.regret = regret_for_update(row.true_rates, agent.plan, config.batch_size);
        row.regret_realised = realised_regret(row.true_rates, batch);
        cum_regret += row.regret;
        cum_realised += row.regret_realised;
        row.cum_regret = cum_regret;
        row.cum_regret_realised = cum_realised;

        agent = agent_update(agent, std::move(batch), config, policy,
                             derive_seed(seed, Stream::allocation, u));
        row.memory_len = agent.memory.size();

        for (const auto& t : agent.tests) row.pairs.push_back({t.arm_i, t.arm_j, t.log_bf, t.band, t.decision});
        if (u > 0) {
            for (std::size_t p = 0; p < row.pairs.size(); ++p) {
                if (row.pairs[p].log_bf && previous[p].log_bf)
                    row.band_movement += std::abs(row.pairs[p].band - previous[p].band);
            }
        }
        cum_band += row.band_movement;
        row.cum_band_movement = cum_band;
        previous = row.pairs;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::vector<MetricsRow> run_scenario(const ScenarioSpec& spec, PolicyKind policy,
                                     const ExperimentConfig& config, const RunOptions& options) {
    spec.validate();
    config.validate();
    if (options.runs < 1) throw ContractViolation("runs must be >= 1");
    if (spec.n_arms != config.n_arms) throw ContractViolation("scenario and config arm counts differ");

    std::vector<std::vector<MetricsRow>> per_run(options.runs);
    std::size_t threads = options.threads ? options.threads : std::thread::hardware_concurrency();
    threads = std::clamp<std::size_t>(threads, 1, options.runs);

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t r = next.fetch_add(1);
            if (r >= options.runs || failed.load()) return;
            try {
                per_run[r] = simulate_run(spec, policy, config, r, run_seed(options.base_seed, r));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);

    std::vector<MetricsRow> rows;
    rows.reserve(options.runs * spec.updates);
    for (auto& run : per_run)
        for (auto& row : run) rows.push_back(std::move(row));
    return rows;
}

MetricTable metric_table(std::span<const MetricsRow> rows) {
    if (rows.empty()) throw ContractViolation("metric_table: no rows");
    std::size_t runs = 0, updates = 0;
    for (const auto& r : rows) {
        runs = std::max(runs, r.run + 1);
        updates = std::max(updates, r.update + 1);
    }
    if (runs * updates != rows.size()) throw ContractViolation("metric_table: rows do not form a full grid");
    const std::size_t arms = rows.front().share_planned.size();

    MetricTable table;
    auto slot = [&](const std::string& name) -> std::vector<std::vector<double>>& {
        auto& t = table[name];
        if (t.empty()) t.assign(runs, std::vector<double>(updates, 0.0));
        return t;
    };
    for (const auto& r : rows) {
        slot("memory_len")[r.run][r.update] = static_cast<double>(r.memory_len);
        slot("regret")[r.run][r.update] = r.regret;
        slot("regret_realised")[r.run][r.update] = r.regret_realised;
        slot("cum_regret")[r.run][r.update] = r.cum_regret;
        slot("cum_regret_realised")[r.run][r.update] = r.cum_regret_realised;
        slot("band_movement")[r.run][r.update] = static_cast<double>(r.band_movement);
        slot("cum_band_movement")[r.run][r.update] = static_cast<double>(r.cum_band_movement);
        slot("best_arm_share")[r.run][r.update] = r.best_arm_share;
        for (std::size_t a = 0; a < arms; ++a) {
            slot("share_planned[" + std::to_string(a) + "]")[r.run][r.update] = r.share_planned[a];
            slot("share_realised[" + std::to_string(a) + "]")[r.run][r.update] = r.share_realised[a];
        }
    }
    return table;
}

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw ContractViolation("quantile of empty data");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

AggregateSeries bootstrap_table(const MetricTable& table, std::size_t resamples, std::uint64_t seed) {
    if (table.empty()) throw ContractViolation("bootstrap: empty metric table");
    const std::size_t runs = table.begin()->second.size();
    if (runs < 2) throw ContractViolation("bootstrap needs at least 2 runs");
    if (resamples < 100) throw ContractViolation("bootstrap needs at least 100 resamples");
    const std::size_t updates = table.begin()->second.front().size();

    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, runs - 1);
    std::vector<std::size_t> draws(resamples * runs);
    for (auto& d : draws) d = pick(rng);

    AggregateSeries out{runs, updates, resamples, seed, {}};
    std::vector<double> replicate(resamples);
    for (const auto& [name, values] : table) {
        SeriesBand band;
        band.mean.resize(updates);
        band.lower.resize(updates);
        band.upper.resize(updates);
        for (std::size_t u = 0; u < updates; ++u) {
            double sum = 0.0;
            for (std::size_t r = 0; r < runs; ++r) sum += values[r][u];
            const double mean = sum / static_cast<double>(runs);
            for (std::size_t b = 0; b < resamples; ++b) {
                double s = 0.0;
                for (std::size_t r = 0; r < runs; ++r) s += values[draws[b * runs + r]][u];
                replicate[b] = s / static_cast<double>(runs);
            }
            std::sort(replicate.begin(), replicate.end());
            band.mean[u] = mean;
            band.lower[u] = std::min(mean, quantile_sorted(replicate, 0.025));
            band.upper[u] = std::max(mean, quantile_sorted(replicate, 0.975));
        }
        out.metrics.emplace(name, std::move(band));
    }
    return out;
}

AggregateSeries bootstrap_series(std::span<const MetricsRow> rows, std::size_t resamples,
                                 std::uint64_t seed) {
    return bootstrap_table(metric_table(rows), resamples, seed);
}

std::vector<SweepRow> threshold_sweep(const ScenarioSpec& spec, std::span<const double> thresholds,
                                      std::span<const PolicyKind> policies,
                                      const ExperimentConfig& config, const RunOptions& options,
                                      std::size_t resamples) {
    if (thresholds.empty()) throw ContractViolation("sweep needs at least one threshold");
    for (double t : thresholds)
        if (!(t > 0.0 && t < 1.0)) throw ContractViolation("sweep thresholds must lie in (0,1)");

    std::vector<SweepRow> out;
    for (double threshold : thresholds) {
        for (PolicyKind policy : policies) {
            ExperimentConfig cfg = config;
            cfg.detection_threshold = threshold;
            const auto rows = run_scenario(spec, policy, cfg, options);
            const std::size_t last = spec.updates - 1;

            MetricTable table;
            auto& regret = table["cum_regret"];
            auto& band = table["cum_band_movement"];
            regret.assign(options.runs, std::vector<double>(1));
            band.assign(options.runs, std::vector<double>(1));
            for (const auto& r : rows) {
                if (r.update != last) continue;
                regret[r.run][0] = r.cum_regret;
                band[r.run][0] = static_cast<double>(r.cum_band_movement);
            }
            SweepRow row{spec.kind, policy, threshold, options.runs};
            if (options.runs >= 2) {
                const auto agg = bootstrap_table(table, resamples, bootstrap_seed(options.base_seed));
                const auto& rg = agg.metrics.at("cum_regret");
                const auto& bd = agg.metrics.at("cum_band_movement");
                row.cum_regret_mean = rg.mean[0];
                row.cum_regret_lower = rg.lower[0];
                row.cum_regret_upper = rg.upper[0];
                row.cum_band_mean = bd.mean[0];
                row.cum_band_lower = bd.lower[0];
                row.cum_band_upper = bd.upper[0];
            } else {
                row.cum_regret_mean = row.cum_regret_lower = row.cum_regret_upper = regret[0][0];
                row.cum_band_mean = row.cum_band_lower = row.cum_band_upper = band[0][0];
            }
            out.push_back(row);
        }
    }
    return out;
}

}  // namespace bayeswin
