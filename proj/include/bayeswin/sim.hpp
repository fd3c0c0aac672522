// sim.hpp
//
// Simulation harness: reward scenarios, the batched experiment loop, per
// update metrics and percentile-bootstrap aggregation over runs.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bayeswin/agent.hpp"
#include "bayeswin/core.hpp"
#include "bayeswin/memory.hpp"

namespace bayeswin {

enum class ScenarioKind { stationary, abrupt, gradual };

std::string_view to_string(ScenarioKind kind);
ScenarioKind parse_scenario(std::string_view name);

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::abrupt;
    std::size_t n_arms = 5;
    double reward_prior_alpha = 3.0;
    double reward_prior_beta = 80.0;
    std::size_t updates = 200;
    // First update that sees the shuffled rates (abrupt only).
    std::size_t change_update = 100;
    // When non-empty, used as the starting rates instead of prior draws.
    std::vector<double> initial_rates;

    void validate() const;
};

// Starting rates and their shuffled targets for one run.
class RateTrajectory {
public:
    RateTrajectory(const ScenarioSpec& spec, std::uint64_t run_seed);

    std::vector<double> at(std::size_t update) const;
    const std::vector<double>& initial() const noexcept { return initial_; }
    const std::vector<double>& target() const noexcept { return target_; }
    const std::vector<std::size_t>& permutation() const noexcept { return permutation_; }

private:
    ScenarioSpec spec_;
    std::vector<double> initial_;
    std::vector<double> target_;
    std::vector<std::size_t> permutation_;
};

// Stationary: starting rates throughout. Abrupt: a non-identity shuffle of
// them from change_update on. Gradual: linear drift from the starting rates
// to the shuffled ones, t = update / (updates - 1).
std::vector<double> true_rates(const ScenarioSpec& spec, std::size_t update, std::uint64_t run_seed);

// Multinomial assignment over the plan, then binomial successes per arm.
BatchStats step_environment(std::span<const double> rates, const AllocationPlan& plan,
                            std::size_t batch_size, std::uint64_t update_index, std::uint64_t seed);

// batch_size * (max rate - sum share * rate).
double regret_for_update(std::span<const double> rates, const AllocationPlan& plan,
                         std::size_t batch_size);

// Sum over arms of assignments * (max rate - rate).
double realised_regret(std::span<const double> rates, const BatchStats& batch);

struct PairRecord {
    ArmId arm_i = 0;
    ArmId arm_j = 0;
    std::optional<double> log_bf;
    int band = 0;
    Decision decision = Decision::inconclusive;
};

struct MetricsRow {
    std::size_t run = 0;
    std::size_t update = 0;
    std::vector<double> true_rates;
    std::vector<double> share_planned;
    std::vector<double> share_realised;
    std::vector<ArmCounts> counts;
    // Planned share on the arm(s) with the highest true rate this update.
    double best_arm_share = 0.0;
    std::size_t memory_len = 0;
    double regret = 0.0;
    double regret_realised = 0.0;
    double cum_regret = 0.0;
    double cum_regret_realised = 0.0;
    // Sum over pairs of |band_t - band_{t-1}|; no-data pairs contribute 0.
    long band_movement = 0;
    long cum_band_movement = 0;
    std::vector<PairRecord> pairs;
};

struct RunOptions {
    std::size_t runs = 1;
    std::uint64_t base_seed = 0;
    // 0 picks std::thread::hardware_concurrency().
    std::size_t threads = 0;
};

std::uint64_t run_seed(std::uint64_t base_seed, std::size_t run);

// Seed for bootstrap resampling of results produced from `base_seed`.
std::uint64_t bootstrap_seed(std::uint64_t base_seed);

// Rows ordered by (run, update). Any failing run aborts the call.
std::vector<MetricsRow> run_scenario(const ScenarioSpec& spec, PolicyKind policy,
                                     const ExperimentConfig& config, const RunOptions& options);

// metric name -> values[run][update].
using MetricTable = std::map<std::string, std::vector<std::vector<double>>>;

// Scalar metrics plus share_planned[a] / share_realised[a] per arm.
MetricTable metric_table(std::span<const MetricsRow> rows);

struct SeriesBand {
    std::vector<double> mean;
    std::vector<double> lower;
    std::vector<double> upper;
};

struct AggregateSeries {
    std::size_t runs = 0;
    std::size_t updates = 0;
    std::size_t resamples = 0;
    std::uint64_t seed = 0;
    std::map<std::string, SeriesBand> metrics;
};

// Percentile bootstrap over whole runs. Replicate b draws R run indices with
// std::uniform_int_distribution<std::size_t>(0, R-1) from one mt19937_64
// seeded with `seed`, all B x R draws taken in (b, r) order and shared by
// every metric and update. Bounds are the 2.5% / 97.5% type-7 quantiles of
// the replicate means, widened if needed to contain the mean.
AggregateSeries bootstrap_table(const MetricTable& table, std::size_t resamples, std::uint64_t seed);
AggregateSeries bootstrap_series(std::span<const MetricsRow> rows, std::size_t resamples,
                                 std::uint64_t seed);

// Linear-interpolation quantile of sorted data (type 7).
double quantile_sorted(std::span<const double> sorted, double q);

struct SweepRow {
    ScenarioKind scenario = ScenarioKind::abrupt;
    PolicyKind policy = PolicyKind::bayeswin;
    double threshold = 0.05;
    std::size_t runs = 0;
    double cum_regret_mean = 0.0, cum_regret_lower = 0.0, cum_regret_upper = 0.0;
    double cum_band_mean = 0.0, cum_band_lower = 0.0, cum_band_upper = 0.0;
};

// One row per (threshold, policy), thresholds outermost.
std::vector<SweepRow> threshold_sweep(const ScenarioSpec& spec, std::span<const double> thresholds,
                                      std::span<const PolicyKind> policies,
                                      const ExperimentConfig& config, const RunOptions& options,
                                      std::size_t resamples);

}  // namespace bayeswin
