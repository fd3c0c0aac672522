#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bayeswin/sim.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace bayeswin;

namespace {

ScenarioSpec spec_of(ScenarioKind kind, std::size_t updates, std::size_t change) {
    ScenarioSpec s;
    s.kind = kind;
    s.updates = updates;
    s.change_update = change;
    return s;
}

std::vector<double> final_values(const std::vector<MetricsRow>& rows, std::size_t updates,
                                 double (*get)(const MetricsRow&)) {
    std::vector<double> out;
    for (const auto& r : rows)
        if (r.update + 1 == updates) out.push_back(get(r));
    return out;
}

}  // namespace

TEST_CASE("scenario names and validation") {
    for (auto k : {ScenarioKind::stationary, ScenarioKind::abrupt, ScenarioKind::gradual})
        CHECK(parse_scenario(to_string(k)) == k);
    CHECK_THROWS_AS(parse_scenario("cyclic"), ContractViolation);
    auto s = spec_of(ScenarioKind::abrupt, 10, 10);
    CHECK_THROWS_AS(s.validate(), ContractViolation);
    s.kind = ScenarioKind::gradual;
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("true_rates") {
    SUBCASE("abrupt switches to a non-identity permutation") {
        const auto spec = spec_of(ScenarioKind::abrupt, 200, 100);
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            auto a = true_rates(spec, 99, seed), b = true_rates(spec, 100, seed);
            CHECK(a != b);
            CHECK(true_rates(spec, 0, seed) == a);
            CHECK(true_rates(spec, 199, seed) == b);
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            CHECK(a == b);
        }
    }
    SUBCASE("gradual endpoints and midpoint") {
        const auto spec = spec_of(ScenarioKind::gradual, 201, 0);
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const RateTrajectory t(spec, seed);
            CHECK(t.at(0) == t.initial());
            CHECK(t.at(200) == t.target());
            const auto mid = t.at(100);
            for (std::size_t a = 0; a < mid.size(); ++a)
                CHECK(mid[a] == doctest::Approx(0.5 * (t.initial()[a] + t.target()[a])).epsilon(1e-14));
            for (std::size_t a = 0; a < mid.size(); ++a)
                CHECK(t.target()[a] == t.initial()[t.permutation()[a]]);
        }
    }
    SUBCASE("stationary and explicit rates") {
        auto spec = spec_of(ScenarioKind::stationary, 50, 25);
        spec.n_arms = 2;
        spec.initial_rates = {0.03, 0.1};
        CHECK(true_rates(spec, 0, 1) == spec.initial_rates);
        CHECK(true_rates(spec, 49, 1) == spec.initial_rates);
    }
}

TEST_CASE("step_environment") {
    const AllocationPlan one{{1.0}};
    CHECK(step_environment(std::vector<double>{0.0}, one, 1000, 0, 1).per_arm[0].successes == 0);
    CHECK(step_environment(std::vector<double>{1.0}, one, 1000, 0, 1).per_arm[0].successes == 1000);

    const AllocationPlan half{{0.5, 0.5}};
    const std::vector<double> rates{0.03, 0.06};
    double sum[2] = {0, 0}, sq[2] = {0, 0};
    const int reps = 10000;
    for (int i = 0; i < reps; ++i) {
        const auto b = step_environment(rates, half, 1000, i, 1000 + i);
        CHECK(b.total_assignments() == 1000);
        CHECK(b.update_index == std::uint64_t(i));
        for (int a = 0; a < 2; ++a) {
            const double s = static_cast<double>(b.per_arm[a].successes);
            sum[a] += s;
            sq[a] += s * s;
        }
    }
    const double want[2] = {15.0, 30.0};
    for (int a = 0; a < 2; ++a) {
        const double mean = sum[a] / reps;
        const double se = std::sqrt((sq[a] / reps - mean * mean) / reps);
        CHECK(std::abs(mean - want[a]) <= 3 * se);
    }
}

TEST_CASE("regret_for_update") {
    const std::vector<double> r{0.03, 0.06};
    CHECK(regret_for_update(r, AllocationPlan{{0.0, 1.0}}, 1000) == 0.0);
    CHECK(regret_for_update(r, AllocationPlan{{0.5, 0.5}}, 1000) == doctest::Approx(15.0).epsilon(1e-12));
    CHECK(regret_for_update(std::vector<double>{0.04, 0.04, 0.04}, AllocationPlan::uniform(3), 1000) ==
          doctest::Approx(0.0));
}

TEST_CASE("run_scenario shape and determinism") {
    ExperimentConfig config;
    config.allocation_samples = 1000;
    const auto spec = spec_of(ScenarioKind::abrupt, 3, 1);
    for (auto policy : {PolicyKind::bayeswin, PolicyKind::adwin, PolicyKind::fixed, PolicyKind::unbounded}) {
        const auto rows = run_scenario(spec, policy, config, RunOptions{1, 5, 1});
        REQUIRE(rows.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) CHECK(rows[i].update == i);
    }
    const auto spec2 = spec_of(ScenarioKind::abrupt, 30, 15);
    const auto a = run_scenario(spec2, PolicyKind::bayeswin, config, RunOptions{4, 99, 1});
    const auto b = run_scenario(spec2, PolicyKind::bayeswin, config, RunOptions{4, 99, 3});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].run == b[i].run);
        CHECK(a[i].share_planned == b[i].share_planned);
        CHECK(a[i].counts == b[i].counts);
        CHECK(a[i].cum_regret == b[i].cum_regret);
        CHECK(a[i].cum_band_movement == b[i].cum_band_movement);
    }
}

TEST_CASE("metric row invariants") {
    ExperimentConfig config;
    config.allocation_samples = 1000;
    const auto rows = run_scenario(spec_of(ScenarioKind::gradual, 40, 0), PolicyKind::bayeswin, config,
                                   RunOptions{3, 8, 1});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        CHECK(r.regret >= 0.0);
        std::uint64_t total = 0;
        for (const auto& c : r.counts) total += c.assignments;
        CHECK(total == config.batch_size);
        if (r.update == 0) {
            CHECK(r.band_movement == 0);
        } else {
            CHECK(r.cum_regret >= rows[i - 1].cum_regret);
            CHECK(r.cum_band_movement == rows[i - 1].cum_band_movement + r.band_movement);
        }
        CHECK(r.pairs.size() == 10);
    }
}

TEST_CASE("bootstrap degenerate cases") {
    SUBCASE("identical runs have zero width") {
        MetricTable t{{"x", {{1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}}}};
        const auto agg = bootstrap_table(t, 500, 3);
        for (std::size_t u = 0; u < 3; ++u) {
            CHECK(agg.metrics.at("x").lower[u] == agg.metrics.at("x").upper[u]);
            CHECK(agg.metrics.at("x").mean[u] == double(u + 1));
        }
    }
    SUBCASE("two runs stay inside the data range") {
        MetricTable t{{"x", {{0.0}, {10.0}}}};
        const auto agg = bootstrap_table(t, 1000, 5);
        const auto& band = agg.metrics.at("x");
        CHECK(band.mean[0] == 5.0);
        CHECK(band.lower[0] >= 0.0);
        CHECK(band.upper[0] <= 10.0);
        CHECK(band.lower[0] <= band.mean[0]);
        CHECK(band.mean[0] <= band.upper[0]);
    }
    SUBCASE("preconditions") {
        CHECK_THROWS_AS(bootstrap_table(MetricTable{{"x", {{1.0}}}}, 1000, 1), ContractViolation);
        CHECK_THROWS_AS(bootstrap_table(MetricTable{{"x", {{1.0}, {2.0}}}}, 10, 1), ContractViolation);
    }
}

TEST_CASE("bootstrap matches an independent percentile bootstrap") {
    ExperimentConfig config;
    const auto rows = run_scenario(spec_of(ScenarioKind::abrupt, 60, 30), PolicyKind::bayeswin, config,
                                   RunOptions{20, 2022, 0});
    const auto agg = bootstrap_series(rows, 1000, bootstrap_seed(2022));
    const auto idx = oracle::bootstrap_indices(20, 1000, bootstrap_seed(2022));
    for (std::size_t u = 0; u < 60; ++u) {
        std::vector<double> regret;
        for (const auto& r : rows)
            if (r.update == u) regret.push_back(r.regret);
        const auto want = oracle::percentile_band(regret, idx);
        const auto& got = agg.metrics.at("regret");
        CHECK(got.mean[u] == doctest::Approx(want.mean).epsilon(1e-12));
        CHECK(got.lower[u] == doctest::Approx(want.lower).epsilon(1e-12));
        CHECK(got.upper[u] == doctest::Approx(want.upper).epsilon(1e-12));
    }
}

TEST_CASE("quantile_sorted") {
    const std::vector<double> v{1, 2, 3, 4};
    CHECK(quantile_sorted(v, 0.0) == 1.0);
    CHECK(quantile_sorted(v, 1.0) == 4.0);
    CHECK(quantile_sorted(v, 0.5) == 2.5);
    CHECK(quantile_sorted(v, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("threshold_sweep shape") {
    ExperimentConfig config;
    config.allocation_samples = 500;
    const auto spec = spec_of(ScenarioKind::abrupt, 8, 4);
    const std::vector<PolicyKind> both{PolicyKind::bayeswin, PolicyKind::adwin};
    const std::vector<double> one{0.05}, three{0.01, 0.05, 0.1};
    CHECK(threshold_sweep(spec, one, both, config, RunOptions{3, 1, 0}, 200).size() == 2);
    const auto rows = threshold_sweep(spec, three, both, config, RunOptions{3, 1, 0}, 200);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].threshold == 0.01);
    CHECK(rows[0].policy == PolicyKind::bayeswin);
    CHECK(rows[1].policy == PolicyKind::adwin);
    CHECK(rows[5].threshold == 0.1);
    for (const auto& r : rows) {
        CHECK(r.cum_regret_lower <= r.cum_regret_mean);
        CHECK(r.cum_regret_mean <= r.cum_regret_upper);
    }
}

TEST_CASE("bayeswin moves to the post-change best arm") {
    ExperimentConfig config;
    const auto rows = run_scenario(spec_of(ScenarioKind::abrupt, 200, 100), PolicyKind::bayeswin, config,
                                   RunOptions{20, 2022, 0});
    double share = 0;
    std::size_t count = 0;
    for (const auto& r : rows)
        if (r.update >= 180) {
            share += r.best_arm_share;
            ++count;
        }
    CHECK(share / count > 0.5);
}

TEST_CASE("identical arms: bayeswin bands move no more than adwin's") {
    ExperimentConfig config;
    auto spec = spec_of(ScenarioKind::stationary, 200, 100);
    spec.initial_rates.assign(5, 0.04);
    const RunOptions opts{20, 31337, 0};
    auto total = [](const MetricsRow& r) { return static_cast<double>(r.cum_band_movement); };
    const auto bw = final_values(run_scenario(spec, PolicyKind::bayeswin, config, opts), 200, total);
    const auto ad = final_values(run_scenario(spec, PolicyKind::adwin, config, opts), 200, total);
    int wins = 0;
    for (std::size_t r = 0; r < bw.size(); ++r) wins += bw[r] <= ad[r];
    MESSAGE("bayeswin <= adwin in " << wins << " of 20 runs");
    CHECK(wins >= 14);
}
