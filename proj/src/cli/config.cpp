#include <cmath>
#include <string>

#include <json.hpp>

#include "bayeswin/cli.hpp"

namespace bayeswin::cli {

using nlohmann::json;

std::size_t RunConfig::resolved_updates() const {
    if (updates) return *updates;
    return scenario == ScenarioKind::gradual ? 300 : 200;
}

std::size_t RunConfig::resolved_change_update() const {
    return change_update ? *change_update : resolved_updates() / 2;
}

ScenarioSpec RunConfig::scenario_spec() const {
    ScenarioSpec spec;
    spec.kind = scenario;
    spec.n_arms = experiment.n_arms;
    spec.reward_prior_alpha = reward_prior_alpha;
    spec.reward_prior_beta = reward_prior_beta;
    spec.updates = resolved_updates();
    spec.change_update = resolved_change_update();
    spec.initial_rates = rates;
    return spec;
}

namespace {

void check(bool ok, const char* flag, const std::string& what) {
    if (!ok) throw ConfigError(flag, what);
}

bool open_unit(double p) { return std::isfinite(p) && p > 0.0 && p < 1.0; }

}  // namespace

void RunConfig::validate() const {
    check(!policies.empty(), "--policy", "at least one policy is required");
    check(!thresholds.empty(), "--threshold", "at least one threshold is required");
    for (double t : thresholds) check(open_unit(t), "--threshold", "threshold must lie in (0,1)");
    check(runs >= 1, "--runs", "runs must be >= 1");
    check(resolved_updates() >= 1, "--updates", "updates must be >= 1");
    if (scenario == ScenarioKind::abrupt)
        check(resolved_change_update() < resolved_updates(), "change_update",
              "change_update must be < updates");
    check(experiment.batch_size >= 1, "--batch-size", "batch size must be >= 1");
    check(experiment.n_arms >= 2, "--arms", "arms must be >= 2");
    check(reward_prior_alpha > 0.0 && reward_prior_beta > 0.0, "reward_prior",
          "reward prior shapes must be positive");
    if (!rates.empty()) {
        check(rates.size() == experiment.n_arms, "rates", "rates must list one value per arm");
        for (double r : rates) check(r >= 0.0 && r <= 1.0, "rates", "rates must lie in [0,1]");
    }
    check(bootstrap_resamples >= 100, "bootstrap_resamples", "bootstrap_resamples must be >= 100");
    check(experiment.prior_alpha > 0.0 && experiment.prior_beta > 0.0, "prior_alpha",
          "Beta prior pseudo-counts must be positive");
    check(experiment.min_memory >= 2, "min_memory", "min_memory must be >= 2");
    check(open_unit(experiment.mde_power), "mde_power", "mde_power must lie in (0,1)");
    check(experiment.h1_prior_sd_ratio > 0.0, "h1_prior_sd_ratio", "h1_prior_sd_ratio must be positive");
    check(experiment.allocation_samples >= 1, "allocation_samples", "allocation_samples must be >= 1");
    check(experiment.fixed_window >= experiment.min_memory, "fixed_window",
          "fixed_window must be >= min_memory");
}

std::string config_to_json(const RunConfig& c) {
    json policies = json::array();
    for (auto p : c.policies) policies.push_back(std::string(to_string(p)));
    json j = {
        {"scenario", std::string(to_string(c.scenario))},
        {"policies", policies},
        {"thresholds", c.thresholds},
        {"runs", c.runs},
        {"updates", c.resolved_updates()},
        {"change_update", c.resolved_change_update()},
        {"batch_size", c.experiment.batch_size},
        {"arms", c.experiment.n_arms},
        {"seed", c.seed},
        {"out", c.out.string()},
        {"reward_prior", {c.reward_prior_alpha, c.reward_prior_beta}},
        {"rates", c.rates},
        {"prior_alpha", c.experiment.prior_alpha},
        {"prior_beta", c.experiment.prior_beta},
        {"min_memory", c.experiment.min_memory},
        {"mde_power", c.experiment.mde_power},
        {"h1_prior_sd_ratio", c.experiment.h1_prior_sd_ratio},
        {"allocation_samples", c.experiment.allocation_samples},
        {"fixed_window", c.experiment.fixed_window},
        {"bootstrap_resamples", c.bootstrap_resamples},
    };
    return j.dump(2);
}

RunConfig config_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
    }
    const json& j = doc.contains("config") ? doc.at("config") : doc;
    if (!j.is_object()) throw ConfigError("--config", "config must be a JSON object");

    RunConfig c;
    std::string key;
    try {
        for (const auto& [k, v] : j.items()) {
            key = k;
            if (k == "scenario") c.scenario = parse_scenario(v.get<std::string>());
            else if (k == "policies") {
                c.policies.clear();
                for (const auto& p : v) c.policies.push_back(parse_policy(p.get<std::string>()));
                c.policies_explicit = true;
            } else if (k == "thresholds") c.thresholds = v.get<std::vector<double>>();
            else if (k == "runs") c.runs = v.get<std::size_t>();
            else if (k == "updates") c.updates = v.get<std::size_t>();
            else if (k == "change_update") c.change_update = v.get<std::size_t>();
            else if (k == "batch_size") c.experiment.batch_size = v.get<std::size_t>();
            else if (k == "arms") c.experiment.n_arms = v.get<std::size_t>();
            else if (k == "seed") c.seed = v.get<std::uint64_t>();
            else if (k == "out") c.out = v.get<std::string>();
            else if (k == "reward_prior") {
                const auto shape = v.get<std::vector<double>>();
                if (shape.size() != 2) throw ConfigError(k, "reward_prior must be [alpha, beta]");
                c.reward_prior_alpha = shape[0];
                c.reward_prior_beta = shape[1];
            } else if (k == "rates") c.rates = v.get<std::vector<double>>();
            else if (k == "prior_alpha") c.experiment.prior_alpha = v.get<double>();
            else if (k == "prior_beta") c.experiment.prior_beta = v.get<double>();
            else if (k == "min_memory") c.experiment.min_memory = v.get<std::size_t>();
            else if (k == "mde_power") c.experiment.mde_power = v.get<double>();
            else if (k == "h1_prior_sd_ratio") c.experiment.h1_prior_sd_ratio = v.get<double>();
            else if (k == "allocation_samples") c.experiment.allocation_samples = v.get<std::size_t>();
            else if (k == "fixed_window") c.experiment.fixed_window = v.get<std::size_t>();
            else if (k == "bootstrap_resamples") c.bootstrap_resamples = v.get<std::size_t>();
            else if (k == "threads") c.threads = v.get<std::size_t>();
            else throw ConfigError(k, "unknown config key '" + k + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(key, "bad value for '" + key + "': " + e.what());
    } catch (const ContractViolation& e) {
        throw ConfigError(key, e.what());
    }
    if (!c.thresholds.empty()) c.experiment.detection_threshold = c.thresholds.front();
    return c;
}

}  // namespace bayeswin::cli
