#include <doctest.h>

#include <cmath>
#include <random>

#include "bayeswin/memory.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace bayeswin;
using testutil::batch;
using testutil::window_of;

namespace {

std::vector<PairwiseTest> tests_with_bfs(std::initializer_list<double> bfs) {
    std::vector<PairwiseTest> out;
    for (double bf : bfs) {
        PairwiseTest t;
        t.log_bf = std::log(bf);
        out.push_back(t);
    }
    return out;
}

std::vector<BatchStats> random_window(std::mt19937_64& rng, std::size_t m, std::size_t arms) {
    // Some windows carry a rate change part-way through.
    const std::size_t change = rng() % (m + 1);
    std::vector<double> before(arms), after(arms);
    std::uniform_real_distribution<double> rate(0.01, 0.12);
    for (std::size_t a = 0; a < arms; ++a) {
        before[a] = rate(rng);
        after[a] = rng() % 2 ? rate(rng) : before[a];
    }
    std::vector<BatchStats> out;
    for (std::size_t b = 0; b < m; ++b) {
        BatchStats s;
        s.update_index = 100 + b;
        std::uint64_t left = 1000;
        for (std::size_t a = 0; a < arms; ++a) {
            const std::uint64_t n = a + 1 == arms ? left : rng() % (left + 1);
            left -= n;
            const double r = b < change ? before[a] : after[a];
            s.per_arm.push_back({n, std::binomial_distribution<std::uint64_t>(n, r)(rng)});
        }
        out.push_back(s);
    }
    return out;
}

}  // namespace

TEST_CASE("policy names round-trip") {
    for (auto k : {PolicyKind::bayeswin, PolicyKind::adwin, PolicyKind::fixed, PolicyKind::unbounded})
        CHECK(parse_policy(to_string(k)) == k);
    for (auto a : {Action::grow, Action::shrink, Action::hold}) CHECK(parse_action(to_string(a)) == a);
    CHECK_THROWS_AS(parse_policy("lru"), ContractViolation);
}

TEST_CASE("bayeswin_adjust branch table") {
    const auto h1 = bayeswin_adjust(tests_with_bfs({25, 0.5, 2}), 19.0, 10);
    CHECK(h1 == PolicyDecision::shrink(1, "H1_accepted"));
    const auto h0 = bayeswin_adjust(tests_with_bfs({0.02, 0.01}), 19.0, 10);
    CHECK(h0 == PolicyDecision::shrink(1, "all_H0"));
    const auto grow = bayeswin_adjust(tests_with_bfs({2, 0.5}), 19.0, 10);
    CHECK(grow == PolicyDecision::grow("inconclusive"));
}

TEST_CASE("bayeswin_adjust edge cases") {
    CHECK(bayeswin_adjust(tests_with_bfs({25}), 19.0, 2).action == Action::hold);
    CHECK(bayeswin_adjust(tests_with_bfs({19}), 19.0, 5).action == Action::grow);
    auto with_gap = tests_with_bfs({0.01, 0.01});
    with_gap.push_back(PairwiseTest{});
    CHECK(bayeswin_adjust(with_gap, 19.0, 5).action == Action::grow);
    CHECK_THROWS_AS(bayeswin_adjust({}, 19.0, 5), ContractViolation);
}

TEST_CASE("property: bayeswin changes memory by at most one") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> lbf(-8.0, 8.0);
    for (int trial = 0; trial < 10000; ++trial) {
        std::vector<PairwiseTest> tests(1 + rng() % 10);
        for (auto& t : tests)
            if (rng() % 10) t.log_bf = lbf(rng);
        const std::size_t m = rng() % 60;
        const auto d = bayeswin_adjust(tests, 1.0 + rng() % 200, m);
        const long next = d.action == Action::grow ? long(m) + 1 : d.action == Action::shrink ? long(m) - 1 : long(m);
        CHECK(std::abs(next - long(m)) <= 1);
        CHECK((d.action != Action::shrink || d.k == 1));
    }
}

TEST_CASE("adwin_epsilon") {
    const double got = adwin_epsilon(1000, 1000, 0.05, 0.05, 10);
    const double want = oracle::adwin_epsilon(1000, 1000, 0.05, 0.05, 10);
    CHECK(std::abs(got - want) <= 1e-12 * want);
    CHECK(adwin_epsilon(2000, 2000, 0.05, 0.05, 10) < got);
    const double peak = adwin_epsilon(700, 1300, 0.5, 0.05, 8);
    for (double r = 0.0; r <= 1.0; r += 0.01) CHECK(adwin_epsilon(700, 1300, r, 0.05, 8) <= peak);
    CHECK(adwin_epsilon(100, 100, 0.0, 0.05, 4) > 0.0);
    CHECK_THROWS_AS(adwin_epsilon(0, 100, 0.1, 0.05, 4), ContractViolation);
}

TEST_CASE("adwin_adjust") {
    SUBCASE("constant rates never shrink") {
        std::vector<BatchStats> w;
        for (std::uint64_t i = 0; i < 15; ++i) w.push_back(batch(i, {{500, 15}, {300, 30}, {200, 2}}));
        CHECK(adwin_adjust(window_of(w), 0.05).action == Action::hold);
        CHECK_FALSE(find_adwin_split(window_of(w), 0.05).has_value());
    }
    SUBCASE("step change is cut at the change point") {
        std::vector<BatchStats> w;
        for (std::uint64_t i = 0; i < 20; ++i)
            w.push_back(batch(i, {{1000, i < 10 ? 30u : 100u}, {1000, 50}}));
        const auto d = adwin_adjust(window_of(w), 0.05);
        CHECK(d == PolicyDecision::shrink(10, "split_detected"));
        CHECK(d.k == oracle::adwin_drops(w, 0.05, 2));
        const auto split = find_adwin_split(window_of(w), 0.05);
        REQUIRE(split);
        CHECK(split->split_point >= 1);
        CHECK(split->split_point <= 19);
    }
    SUBCASE("window at the floor holds") {
        const auto w = window_of({batch(0, {{1000, 10}, {1000, 10}}), batch(1, {{1000, 900}, {1000, 10}})});
        CHECK(adwin_adjust(w, 0.05).action == Action::hold);
    }
}

TEST_CASE("property: adwin_adjust agrees with split enumeration") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 100; ++trial) {
        const auto w = random_window(rng, 2 + rng() % 11, 3);
        const auto d = adwin_adjust(window_of(w), 0.05);
        const std::size_t k = d.action == Action::shrink ? d.k : 0;
        CHECK(k == oracle::adwin_drops(w, 0.05, 2));
    }
}

TEST_CASE("fixed_window_adjust") {
    CHECK(fixed_window_adjust(12, 10) == PolicyDecision::shrink(2, "fixed"));
    CHECK(fixed_window_adjust(10, 10).action == Action::hold);
    CHECK(fixed_window_adjust(3, 10).action == Action::hold);
}
