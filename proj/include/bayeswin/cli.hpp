// cli.hpp
//
// Command-line front end: simulate, sweep and report. Kept as a library so
// the test suites can drive it in-process.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bayeswin/core.hpp"
#include "bayeswin/memory.hpp"
#include "bayeswin/sim.hpp"

namespace bayeswin::cli {

enum ExitCode : int { ok = 0, config_error = 2, runtime_error = 3 };

// Invalid configuration or input; `flag` names the offending flag, config
// key or file column.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string flag, const std::string& what)
        : std::runtime_error(what), flag_(std::move(flag)) {}
    const std::string& flag() const noexcept { return flag_; }

private:
    std::string flag_;
};

struct RunConfig {
    ScenarioKind scenario = ScenarioKind::abrupt;
    std::vector<PolicyKind> policies{PolicyKind::bayeswin};
    bool policies_explicit = false;
    std::vector<double> thresholds{0.05};
    std::size_t runs = 100;
    // Unset: 300 for gradual, 200 otherwise.
    std::optional<std::size_t> updates;
    // Unset: updates / 2.
    std::optional<std::size_t> change_update;
    std::uint64_t seed = 0;
    std::filesystem::path out = ".";
    double reward_prior_alpha = 3.0;
    double reward_prior_beta = 80.0;
    std::vector<double> rates;
    // n_arms, batch_size and detection_threshold live here too.
    ExperimentConfig experiment;
    std::size_t bootstrap_resamples = 1000;
    std::size_t threads = 0;

    std::size_t resolved_updates() const;
    std::size_t resolved_change_update() const;
    ScenarioSpec scenario_spec() const;
    // Throws ConfigError naming the flag.
    void validate() const;
};

// Documented column layouts.
const std::vector<std::string>& metrics_columns();
const std::vector<std::string>& pairs_columns();
const std::vector<std::string>& sweep_columns();

// Resolved config as JSON text (also the "config" block of manifest.json).
std::string config_to_json(const RunConfig& config);
// Accepts a plain config object or a manifest.json document.
RunConfig config_from_json(const std::string& text);

void cmd_simulate(const RunConfig& config);
void cmd_sweep(const RunConfig& config);
// Writes report.json next to `metrics_csv` (or into `out_dir`). Returns the
// number of aggregate mismatches found against aggregate.json; warnings go
// to `warn`.
std::size_t cmd_report(const std::filesystem::path& metrics_csv,
                       const std::optional<std::filesystem::path>& out_dir, std::ostream& warn);

// Full command-line entry point. Errors are one line on `err`:
//   error: kind=<config|runtime> flag=<flag> message="<text>"
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bayeswin::cli
