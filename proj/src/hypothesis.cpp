#include "bayeswin/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace bayeswin {

namespace {

constexpr double kQuadRelTol = 1e-8;
constexpr int kTrapezoidPoints = 4096;

// Band edges on the log scale: ln 3, ln 20, ln 150.
const double kLog3 = std::log(3.0);
const double kLog20 = std::log(20.0);
const double kLog150 = std::log(150.0);

double log_cosh(double x) {
    const double ax = std::abs(x);
    return ax + std::log1p(std::exp(-2.0 * ax)) - std::numbers::ln2;
}

double log_normal_pdf(double x, double mean, double sd) {
    const double u = (x - mean) / sd;
    return -0.5 * u * u - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double log_normal_cdf(double x) {
    // ln Phi(x) via erfc keeps precision in the lower tail.
    return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
}

double trapezoid(const auto& f, double lo, double hi, int points) {
    const double h = (hi - lo) / (points - 1);
    double sum = 0.5 * (f(lo) + f(hi));
    for (int i = 1; i < points - 1; ++i) sum += f(lo + i * h);
    return sum * h;
}

}  // namespace

HypothesisPriors make_priors(double mde, double h1_prior_sd_ratio) {
    if (!(mde > 0.0) || !std::isfinite(mde)) throw ContractViolation("mde must be positive");
    if (!(h1_prior_sd_ratio > 0.0)) throw ContractViolation("h1_prior_sd_ratio must be positive");
    return {mde, h1_prior_sd_ratio * mde};
}

std::string_view to_string(Decision d) {
    switch (d) {
        case Decision::h1_accepted: return "H1_accepted";
        case Decision::h0_accepted: return "H0_accepted";
        case Decision::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

double PairwiseTest::bayes_factor() const {
    return log_bf ? std::exp(*log_bf) : std::numeric_limits<double>::quiet_NaN();
}

double threshold_from_fdr(double p_d) {
    if (!(p_d > 0.0 && p_d < 1.0)) throw ContractViolation("p_d must lie in (0,1)");
    return 1.0 / p_d - 1.0;
}

double normal_quantile(double q) {
    if (!(q > 0.0 && q < 1.0)) throw ContractViolation("normal quantile needs q in (0,1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), q);
}

double fixed_horizon_mde(const ArmWindowSummary& a, const ArmWindowSummary& b, double pooled,
                         double alpha, double power) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ContractViolation("alpha must lie in (0,1)");
    if (!(power > 0.0 && power < 1.0)) throw ContractViolation("power must lie in (0,1)");
    const double se = diff_standard_error(a, b, pooled);
    return (normal_quantile(1.0 - alpha / 2.0) + normal_quantile(power)) * se;
}

double log_bayes_factor(double observed_effect, double se, const HypothesisPriors& priors) {
    if (!std::isfinite(observed_effect) || !std::isfinite(se) || !std::isfinite(priors.mde) ||
        !std::isfinite(priors.h1_sd))
        throw ContractViolation("bayes_factor: non-finite input");
    if (!(se > 0.0)) throw ContractViolation("bayes_factor: se must be positive");
    if (observed_effect < 0.0) throw ContractViolation("bayes_factor: observed effect must be >= 0");
    if (!(priors.mde > 0.0) || !(priors.h1_sd > 0.0))
        throw ContractViolation("bayes_factor: priors must be positive");

    // Work in units of se. With t the standardised effect,
    //   p(z|H1) / p(z|H0) = E_t[ (phi(z-t) + phi(z+t)) / (2 phi(z)) ]
    //                     = E_t[ exp(-t^2/2) cosh(z t) ],
    // t ~ N(mu, tau^2) truncated to t >= 0.
    const double z = observed_effect / se;
    const double mu = priors.mde / se;
    const double tau = priors.h1_sd / se;

    auto log_integrand = [&](double t) {
        return -0.5 * t * t + log_cosh(z * t) + log_normal_pdf(t, mu, tau);
    };

    // Peaks of the exp(+zt) and exp(-zt) components, and their common width.
    const double precision = 1.0 + 1.0 / (tau * tau);
    const double peak_hi = (z + mu / (tau * tau)) / precision;
    const double peak_lo = (-z + mu / (tau * tau)) / precision;
    const double width = 1.0 / std::sqrt(precision);
    const double shift = log_integrand(std::max(peak_hi, 0.0));

    auto integrand = [&](double t) { return std::exp(log_integrand(t) - shift); };

    const double lo = std::max(0.0, peak_lo - 12.0 * width);
    const double hi = std::max(peak_hi, 0.0) + 12.0 * width;
    double integral = 0.0;
    double error_total = 0.0;
    // Split at the dominant peak so each panel sees a monotone-ish shape.
    const double mid = std::clamp(peak_hi, lo, hi);
    for (auto [a, b] : {std::pair{lo, mid}, std::pair{mid, hi}}) {
        if (b <= a) continue;
        double err = 0.0;
        integral += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            integrand, a, b, 15, 1e-10, &err);
        error_total += err;
    }
    if (!(integral > 0.0) || !std::isfinite(integral) || error_total > kQuadRelTol * integral) {
        const double upper = std::max(z, mu) + 8.0 * std::max(1.0, tau);
        integral = trapezoid(integrand, 0.0, upper, kTrapezoidPoints);
    }
    return shift + std::log(integral) - log_normal_cdf(mu / tau);
}

double bayes_factor(double observed_effect, double se, const HypothesisPriors& priors) {
    return std::exp(log_bayes_factor(observed_effect, se, priors));
}

int classify_band_log(double log_bf) {
    if (log_bf > kLog150) return 3;
    if (log_bf > kLog20) return 2;
    if (log_bf > kLog3) return 1;
    if (log_bf >= -kLog3) return 0;
    if (log_bf >= -kLog20) return -1;
    if (log_bf >= -kLog150) return -2;
    return -3;
}

int classify_band(double bf) {
    if (!(bf > 0.0)) throw ContractViolation("classify_band: bf must be positive");
    return classify_band_log(std::log(bf));
}

Decision decide(double log_bf, double k_threshold) {
    const double log_k = std::log(k_threshold);
    if (log_bf > log_k) return Decision::h1_accepted;
    if (log_bf < -log_k) return Decision::h0_accepted;
    return Decision::inconclusive;
}

std::vector<PairwiseTest> test_all_pairs(const ShrunkEstimates& estimates,
                                         std::span<const ArmWindowSummary> summaries,
                                         const ExperimentConfig& config) {
    if (summaries.size() < 2) throw ContractViolation("test_all_pairs needs at least 2 arms");
    const double k_threshold = threshold_from_fdr(config.detection_threshold);
    auto has_estimate = [&](ArmId arm) {
        return std::find(estimates.arms.begin(), estimates.arms.end(), arm) != estimates.arms.end();
    };

    std::vector<PairwiseTest> tests;
    tests.reserve(summaries.size() * (summaries.size() - 1) / 2);
    for (std::size_t i = 0; i < summaries.size(); ++i) {
        for (std::size_t j = i + 1; j < summaries.size(); ++j) {
            const auto& a = summaries[i];
            const auto& b = summaries[j];
            PairwiseTest test;
            test.arm_i = a.arm;
            test.arm_j = b.arm;
            if (!a.has_data() || !b.has_data() || !has_estimate(a.arm) || !has_estimate(b.arm)) {
                tests.push_back(test);
                continue;
            }
            const double pooled = pooled_rate(a, b);
            test.standard_error = diff_standard_error(a, b, pooled);
            test.mde = fixed_horizon_mde(a, b, pooled, config.detection_threshold, config.mde_power);
            test.observed_effect = std::abs(estimates.at(a.arm) - estimates.at(b.arm));
            const auto priors = make_priors(test.mde, config.h1_prior_sd_ratio);
            const double log_bf = log_bayes_factor(test.observed_effect, test.standard_error, priors);
            test.log_bf = log_bf;
            test.band = classify_band_log(log_bf);
            test.decision = decide(log_bf, k_threshold);
            tests.push_back(test);
        }
    }
    return tests;
}

std::vector<PairwiseTest> test_window(std::span<const ArmWindowSummary> summaries,
                                      const ExperimentConfig& config) {
    std::vector<ArmWindowSummary> with_data;
    for (const auto& s : summaries)
        if (s.has_data()) with_data.push_back(s);
    ShrunkEstimates estimates;
    if (with_data.size() >= 2) estimates = james_stein(with_data);
    return test_all_pairs(estimates, summaries, config);
}

}  // namespace bayeswin
