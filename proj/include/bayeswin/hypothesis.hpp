// hypothesis.hpp
//
// Sequential Bayesian testing between arm pairs. H0 is a point null at zero
// effect. H1 places a normal prior on the absolute effect, truncated at zero,
// whose mean is the minimum detectable effect of a fixed-horizon test run on
// the same data. Both hypotheses are scored on |r_i - r_j|, so the sampling
// density under each is folded at zero.
#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bayeswin/core.hpp"
#include "bayeswin/estimation.hpp"

namespace bayeswin {

struct HypothesisPriors {
    double mde = 0.0;
    double h1_sd = 0.0;
};

HypothesisPriors make_priors(double mde, double h1_prior_sd_ratio);

enum class Decision { h1_accepted, h0_accepted, inconclusive };

std::string_view to_string(Decision d);

struct PairwiseTest {
    ArmId arm_i = 0;
    ArmId arm_j = 0;
    double observed_effect = 0.0;
    double standard_error = 0.0;
    double mde = 0.0;
    // Natural log of the Bayes factor; empty when either arm lacks data.
    std::optional<double> log_bf;
    int band = 0;
    Decision decision = Decision::inconclusive;

    bool no_data() const noexcept { return !log_bf.has_value(); }
    // exp(log_bf); may be +inf for overwhelming evidence. NaN when no data.
    double bayes_factor() const;
};

// K = 1/p_d - 1.
double threshold_from_fdr(double p_d);

// (z_{1-alpha/2} + z_{power}) * sqrt(p(1-p)(1/n_i + 1/n_j)).
double fixed_horizon_mde(const ArmWindowSummary& a, const ArmWindowSummary& b, double pooled,
                         double alpha, double power);

// Standard normal quantile.
double normal_quantile(double q);

// ln BF = ln p(d | H1) - ln p(d | H0). The H1 marginal is integrated with
// adaptive Gauss-Kronrod quadrature in log-rescaled form, so the result stays
// finite for evidence far beyond double range.
double log_bayes_factor(double observed_effect, double se, const HypothesisPriors& priors);

double bayes_factor(double observed_effect, double se, const HypothesisPriors& priors);

// Kass-Raftery grade in {-3..3}; boundaries at 3, 20, 150 and reciprocals,
// band 0 covering [1/3, 3].
int classify_band(double bf);
int classify_band_log(double log_bf);

Decision decide(double log_bf, double k_threshold);

// One test per unordered pair (i < j), in lexicographic order. Pairs with an
// arm that has no window data are returned inconclusive with no Bayes factor.
std::vector<PairwiseTest> test_all_pairs(const ShrunkEstimates& estimates,
                                         std::span<const ArmWindowSummary> summaries,
                                         const ExperimentConfig& config);

// james_stein over the arms that have data, followed by test_all_pairs.
std::vector<PairwiseTest> test_window(std::span<const ArmWindowSummary> summaries,
                                      const ExperimentConfig& config);

}  // namespace bayeswin
