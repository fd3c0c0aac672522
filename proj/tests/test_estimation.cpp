#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bayeswin/estimation.hpp"
#include "helpers.hpp"

using namespace bayeswin;
using testutil::summary;

namespace {

// Positive-part James-Stein written out directly in long double.
std::vector<long double> js_oracle(const std::vector<std::pair<long double, long double>>& sn) {
    const long double k = sn.size();
    std::vector<long double> r;
    for (auto [s, n] : sn) r.push_back(s / n);
    const long double mean = std::accumulate(r.begin(), r.end(), 0.0L) / k;
    long double ss = 0, v = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        ss += (r[i] - mean) * (r[i] - mean);
        v += r[i] * (1 - r[i]) / sn[i].second;
    }
    v /= k;
    long double c = 1;
    if (k >= 4 && ss > 0) c = std::max(0.0L, 1 - (k - 3) * v / ss);
    std::vector<long double> out;
    for (auto x : r) out.push_back(mean + c * (x - mean));
    return out;
}

}  // namespace

TEST_CASE("james_stein fixed points") {
    SUBCASE("identical rates are unchanged") {
        std::vector<ArmWindowSummary> s{summary(0, 30, 1000), summary(1, 60, 2000), summary(2, 3, 100),
                                        summary(3, 90, 3000)};
        const auto e = james_stein(s);
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(e.r_js[i] == doctest::Approx(*s[i].r_mle).epsilon(1e-15));
    }
    SUBCASE("three arms are not shrunk") {
        std::vector<ArmWindowSummary> s{summary(0, 10, 1000), summary(1, 50, 1000), summary(2, 90, 1000)};
        const auto e = james_stein(s);
        CHECK(e.shrink_factor == 1.0);
        for (std::size_t i = 0; i < 3; ++i) CHECK(e.r_js[i] == *s[i].r_mle);
    }
}

TEST_CASE("james_stein matches the direct formula") {
    SUBCASE("five evenly spaced arms") {
        std::vector<ArmWindowSummary> s;
        std::vector<std::pair<long double, long double>> sn;
        const int succ[] = {100, 150, 200, 250, 300};
        for (int i = 0; i < 5; ++i) {
            s.push_back(summary(i, succ[i], 5000));
            sn.push_back({succ[i], 5000});
        }
        const auto e = james_stein(s);
        const auto want = js_oracle(sn);
        for (int i = 0; i < 5; ++i) CHECK(std::abs(e.r_js[i] - static_cast<double>(want[i])) <= 1e-12);
        CHECK(e.at(3) == e.r_js[3]);
        CHECK_THROWS_AS(e.at(9), ContractViolation);
    }
    SUBCASE("random inputs") {
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 300; ++trial) {
            const std::size_t k = 2 + rng() % 8;
            std::vector<ArmWindowSummary> s;
            std::vector<std::pair<long double, long double>> sn;
            for (std::size_t i = 0; i < k; ++i) {
                const std::uint64_t n = 20 + rng() % 5000;
                const std::uint64_t x = rng() % (n / 5 + 1);
                s.push_back(summary(i, x, n));
                sn.push_back({static_cast<long double>(x), static_cast<long double>(n)});
            }
            const auto e = james_stein(s);
            const auto want = js_oracle(sn);
            for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(e.r_js[i] - static_cast<double>(want[i])) <= 1e-12);

            // Order preservation, contraction and range.
            const double lo = *std::min_element(e.r_js.begin(), e.r_js.end());
            const double hi = *std::max_element(e.r_js.begin(), e.r_js.end());
            double mle_lo = 1, mle_hi = 0, ss_js = 0, ss_mle = 0;
            for (std::size_t i = 0; i < k; ++i) {
                mle_lo = std::min(mle_lo, *s[i].r_mle);
                mle_hi = std::max(mle_hi, *s[i].r_mle);
                ss_js += std::pow(e.r_js[i] - e.grand_mean, 2);
                ss_mle += std::pow(*s[i].r_mle - e.grand_mean, 2);
                for (std::size_t j = 0; j < k; ++j)
                    if (*s[i].r_mle < *s[j].r_mle) CHECK(e.r_js[i] <= e.r_js[j]);
            }
            CHECK(lo >= mle_lo - 1e-15);
            CHECK(hi <= mle_hi + 1e-15);
            CHECK(ss_js <= ss_mle + 1e-18);
            CHECK(e.shrink_factor >= 0.0);
            CHECK(e.shrink_factor <= 1.0);
        }
    }
}

TEST_CASE("pooled_rate") {
    CHECK(pooled_rate(summary(0, 30, 1000), summary(1, 50, 1000)) == doctest::Approx(0.04).epsilon(1e-15));
    CHECK(pooled_rate(summary(0, 7, 100), summary(1, 7, 100)) == doctest::Approx(0.07).epsilon(1e-15));
    CHECK(pooled_rate(summary(0, 0, 100), summary(1, 0, 100)) == 0.0);
}

TEST_CASE("diff_standard_error") {
    CHECK(diff_standard_error(summary(0, 1, 2), summary(1, 1, 2), 0.5) == doctest::Approx(0.5).epsilon(1e-15));
    const double want = std::sqrt(0.04 * 0.96 * (1.0 / 1000 + 1.0 / 1000));
    CHECK(std::abs(diff_standard_error(summary(0, 30, 1000), summary(1, 50, 1000), 0.04) - want) <= 1e-15);
    const double degenerate = diff_standard_error(summary(0, 0, 100), summary(1, 0, 100), 0.0);
    CHECK(degenerate > 0.0);
    CHECK(std::isfinite(degenerate));
    CHECK(diff_standard_error(summary(0, 100, 100), summary(1, 100, 100), 1.0) > 0.0);
}

TEST_CASE("property: standard error is symmetric and decreasing in n") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 500; ++trial) {
        const std::uint64_t na = 10 + rng() % 2000, nb = 10 + rng() % 2000;
        const auto a = summary(0, rng() % na, na);
        const auto b = summary(1, rng() % nb, nb);
        const double p = 0.01 + 0.5 * (rng() % 1000) / 1000.0;
        CHECK(diff_standard_error(a, b, p) == diff_standard_error(b, a, p));
        const auto bigger = summary(0, a.s, na + 1 + rng() % 100);
        CHECK(diff_standard_error(bigger, b, p) < diff_standard_error(a, b, p));
    }
}
