#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bayeswin/cli.hpp"
#include "io.hpp"

namespace bayeswin::cli {

using nlohmann::json;
using detail::format_number;

const std::vector<std::string>& metrics_columns() {
    static const std::vector<std::string> cols{
        "scenario", "policy", "run", "update", "arm", "true_rate", "share_planned",
        "share_realised", "assignments", "successes", "memory_len", "regret", "cum_regret",
        "regret_realised", "cum_regret_realised", "band_movement", "cum_band_movement"};
    return cols;
}

const std::vector<std::string>& pairs_columns() {
    static const std::vector<std::string> cols{
        "scenario", "policy", "run", "update", "arm_i", "arm_j", "bayes_factor",
        "log_bayes_factor", "band", "decision", "no_data"};
    return cols;
}

const std::vector<std::string>& sweep_columns() {
    static const std::vector<std::string> cols{
        "scenario", "policy", "threshold", "runs", "cum_regret_mean", "cum_regret_lower",
        "cum_regret_upper", "cum_band_movement_mean", "cum_band_movement_lower",
        "cum_band_movement_upper"};
    return cols;
}

namespace {

std::string header_line(const std::vector<std::string>& cols) {
    std::string s;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) s += ',';
        s += cols[i];
    }
    return s + '\n';
}

RunOptions run_options(const RunConfig& c) {
    return RunOptions{c.runs, c.seed, c.threads};
}

ExperimentConfig experiment_for(const RunConfig& c, double threshold) {
    ExperimentConfig e = c.experiment;
    e.detection_threshold = threshold;
    return e;
}

void append_metrics(std::string& out, std::string_view scenario, std::string_view policy,
                    const std::vector<MetricsRow>& rows) {
    for (const auto& r : rows) {
        for (std::size_t a = 0; a < r.true_rates.size(); ++a) {
            out += scenario;
            out += ',';
            out += policy;
            out += ',' + std::to_string(r.run) + ',' + std::to_string(r.update) + ',' +
                   std::to_string(a) + ',' + format_number(r.true_rates[a]) + ',' +
                   format_number(r.share_planned[a]) + ',' + format_number(r.share_realised[a]) +
                   ',' + std::to_string(r.counts[a].assignments) + ',' +
                   std::to_string(r.counts[a].successes) + ',' + std::to_string(r.memory_len) +
                   ',' + format_number(r.regret) + ',' + format_number(r.cum_regret) + ',' +
                   format_number(r.regret_realised) + ',' + format_number(r.cum_regret_realised) +
                   ',' + std::to_string(r.band_movement) + ',' +
                   std::to_string(r.cum_band_movement) + '\n';
        }
    }
}

void append_pairs(std::string& out, std::string_view scenario, std::string_view policy,
                  const std::vector<MetricsRow>& rows) {
    for (const auto& r : rows) {
        for (const auto& p : r.pairs) {
            out += scenario;
            out += ',';
            out += policy;
            out += ',' + std::to_string(r.run) + ',' + std::to_string(r.update) + ',' +
                   std::to_string(p.arm_i) + ',' + std::to_string(p.arm_j) + ',';
            if (p.log_bf) out += format_number(std::exp(*p.log_bf)) + ',' + format_number(*p.log_bf);
            else out += ',';
            out += ',' + std::to_string(p.band) + ',';
            out += to_string(p.decision);
            out += p.log_bf ? ",0\n" : ",1\n";
        }
    }
}

json series_json(const AggregateSeries& agg) {
    json metrics = json::object();
    for (const auto& [name, band] : agg.metrics)
        metrics[name] = {{"mean", band.mean}, {"lower", band.lower}, {"upper", band.upper}};
    return {{"runs", agg.runs},         {"updates", agg.updates}, {"resamples", agg.resamples},
            {"seed", agg.seed},         {"metrics", metrics}};
}

json manifest_json(const RunConfig& c, std::string_view command) {
    json seeds = json::array();
    for (std::size_t r = 0; r < c.runs; ++r) seeds.push_back(run_seed(c.seed, r));
    return {{"version", 1},
            {"command", std::string(command)},
            {"config", json::parse(config_to_json(c))},
            {"run_seeds", seeds},
            {"bootstrap_seed", bootstrap_seed(c.seed)},
            {"bootstrap_resamples", c.bootstrap_resamples}};
}

}  // namespace

void cmd_simulate(const RunConfig& config) {
    config.validate();
    if (config.thresholds.size() != 1)
        throw ConfigError("--threshold", "simulate takes exactly one threshold");
    const double threshold = config.thresholds.front();
    const auto spec = config.scenario_spec();
    const auto exp = experiment_for(config, threshold);
    const auto scenario = to_string(config.scenario);

    std::string metrics = header_line(metrics_columns());
    std::string pairs = header_line(pairs_columns());
    json series = json::array();
    for (auto policy : config.policies) {
        const auto rows = run_scenario(spec, policy, exp, run_options(config));
        append_metrics(metrics, scenario, to_string(policy), rows);
        append_pairs(pairs, scenario, to_string(policy), rows);
        if (config.runs >= 2) {
            json s = series_json(bootstrap_series(rows, config.bootstrap_resamples,
                                                  bootstrap_seed(config.seed)));
            s["scenario"] = std::string(scenario);
            s["policy"] = std::string(to_string(policy));
            s["threshold"] = threshold;
            series.push_back(std::move(s));
        }
    }
    const json aggregate = {{"version", 1}, {"series", series}};

    detail::StagedFiles files(config.out);
    files.write("metrics.csv", metrics);
    files.write("pairs.csv", pairs);
    files.write("aggregate.json", aggregate.dump(2) + '\n');
    files.write("manifest.json", manifest_json(config, "simulate").dump(2) + '\n');
    files.commit();
}

void cmd_sweep(const RunConfig& config) {
    config.validate();
    if (config.runs < 2) throw ConfigError("--runs", "sweep needs at least 2 runs for intervals");
    auto policies = config.policies;
    if (!config.policies_explicit) policies = {PolicyKind::bayeswin, PolicyKind::adwin};

    const auto rows = threshold_sweep(config.scenario_spec(), config.thresholds, policies,
                                      config.experiment, run_options(config),
                                      config.bootstrap_resamples);
    std::string out = header_line(sweep_columns());
    for (const auto& r : rows) {
        out += std::string(to_string(r.scenario)) + ',' + std::string(to_string(r.policy)) + ',' +
               format_number(r.threshold) + ',' + std::to_string(r.runs) + ',' +
               format_number(r.cum_regret_mean) + ',' + format_number(r.cum_regret_lower) + ',' +
               format_number(r.cum_regret_upper) + ',' + format_number(r.cum_band_mean) + ',' +
               format_number(r.cum_band_lower) + ',' + format_number(r.cum_band_upper) + '\n';
    }
    auto manifested = config;
    manifested.policies = policies;
    manifested.policies_explicit = true;
    detail::StagedFiles files(config.out);
    files.write("sweep.csv", out);
    files.write("manifest.json", manifest_json(manifested, "sweep").dump(2) + '\n');
    files.commit();
}

namespace {

struct GroupKey {
    std::string scenario;
    std::string policy;
    auto operator<=>(const GroupKey&) const = default;
};

struct Group {
    // (run, update) -> row under construction.
    std::map<std::pair<std::size_t, std::size_t>, MetricsRow> rows;
};

template <class T>
T parse_field(const std::string& s, std::size_t row, const std::string& column) {
    T value{};
    std::istringstream in(s);
    in >> value;
    if (s.empty() || in.fail() || !in.eof())
        throw ConfigError(column, "row " + std::to_string(row) + ": bad value '" + s +
                                      "' in column " + column);
    return value;
}

// Grid shape declared by a manifest, when one sits next to the input.
struct ExpectedShape {
    std::size_t runs = 0, updates = 0, arms = 0;
};

std::map<GroupKey, std::vector<MetricsRow>> read_metrics(const std::filesystem::path& path,
                                                         const std::optional<ExpectedShape>& expected) {
    std::ifstream in(path);
    if (!in) throw ConfigError("input", "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("header", "empty file, expected header");
    const auto header = detail::split_csv_line(line);
    const auto& cols = metrics_columns();
    for (std::size_t i = 0; i < std::max(header.size(), cols.size()); ++i) {
        if (i >= header.size() || i >= cols.size() || header[i] != cols[i]) {
            const std::string col = i < cols.size() ? cols[i] : header[i];
            throw ConfigError(col, "header mismatch at column " + std::to_string(i + 1) + " (" + col + ")");
        }
    }

    std::map<GroupKey, Group> groups;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty() || line == "\r") continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != cols.size())
            throw ConfigError("row", "row " + std::to_string(row_no) + ": expected " +
                                         std::to_string(cols.size()) + " fields, got " +
                                         std::to_string(f.size()));
        auto get_u = [&](std::size_t i) { return parse_field<std::size_t>(f[i], row_no, cols[i]); };
        auto get_d = [&](std::size_t i) { return parse_field<double>(f[i], row_no, cols[i]); };
        auto get_l = [&](std::size_t i) { return parse_field<long>(f[i], row_no, cols[i]); };

        const std::size_t run = get_u(2), update = get_u(3), arm = get_u(4);
        auto& r = groups[{f[0], f[1]}].rows[{run, update}];
        r.run = run;
        r.update = update;
        if (arm != r.true_rates.size())
            throw ConfigError("arm", "row " + std::to_string(row_no) + ": arms out of order");
        r.true_rates.push_back(get_d(5));
        r.share_planned.push_back(get_d(6));
        r.share_realised.push_back(get_d(7));
        r.counts.push_back({get_u(8), get_u(9)});
        r.memory_len = get_u(10);
        r.regret = get_d(11);
        r.cum_regret = get_d(12);
        r.regret_realised = get_d(13);
        r.cum_regret_realised = get_d(14);
        r.band_movement = get_l(15);
        r.cum_band_movement = get_l(16);
    }
    if (groups.empty()) throw ConfigError("input", "no data rows");

    std::map<GroupKey, std::vector<MetricsRow>> out;
    for (auto& [key, g] : groups) {
        auto& rows = out[key];
        const std::size_t arms = expected ? expected->arms : g.rows.begin()->second.true_rates.size();
        std::size_t runs = 0, updates = 0;
        for (const auto& [idx, r] : g.rows) {
            runs = std::max(runs, idx.first + 1);
            updates = std::max(updates, idx.second + 1);
            if (r.true_rates.size() != arms)
                throw ConfigError("arm", "row " + std::to_string(row_no) + ": truncated input, run " +
                                             std::to_string(idx.first) + " update " +
                                             std::to_string(idx.second) + " has " +
                                             std::to_string(r.true_rates.size()) + " of " +
                                             std::to_string(arms) + " arms");
        }
        if (runs * updates != g.rows.size() ||
            (expected && (runs != expected->runs || updates != expected->updates)))
            throw ConfigError("update", "row " + std::to_string(row_no) +
                                            ": truncated input, (run, update) grid is incomplete");
        for (auto& [idx, r] : g.rows) {
            const double best = *std::max_element(r.true_rates.begin(), r.true_rates.end());
            for (std::size_t a = 0; a < r.true_rates.size(); ++a)
                if (r.true_rates[a] == best) r.best_arm_share += r.share_planned[a];
            rows.push_back(std::move(r));
        }
    }
    return out;
}

bool close(double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

std::size_t cmd_report(const std::filesystem::path& metrics_csv,
                       const std::optional<std::filesystem::path>& out_dir, std::ostream& warn) {
    const auto input_dir = metrics_csv.has_parent_path() ? metrics_csv.parent_path()
                                                         : std::filesystem::path(".");
    const auto dir = out_dir ? *out_dir : input_dir;

    std::uint64_t seed = 0;
    std::size_t resamples = 1000;
    json existing;
    bool have_existing = false;
    bool have_seed = false;
    std::optional<ExpectedShape> expected;
    if (std::ifstream m(input_dir / "manifest.json"); m) {
        const auto j = json::parse(m, nullptr, false);
        if (!j.is_discarded() && j.contains("bootstrap_seed")) {
            seed = j["bootstrap_seed"].get<std::uint64_t>();
            resamples = j.value("bootstrap_resamples", resamples);
            have_seed = true;
        }
        if (!j.is_discarded() && j.value("command", "") == "simulate" && j.contains("config")) {
            try {
                const auto c = config_from_json(j.dump());
                expected = ExpectedShape{c.runs, c.resolved_updates(), c.experiment.n_arms};
            } catch (const ConfigError&) {
            }
        }
    }
    const auto groups = read_metrics(metrics_csv, expected);
    if (std::ifstream a(input_dir / "aggregate.json"); a) {
        existing = json::parse(a, nullptr, false);
        have_existing = !existing.is_discarded() && existing.contains("series");
    }
    if (!have_seed && have_existing && !existing["series"].empty()) {
        seed = existing["series"][0].value("seed", seed);
        resamples = existing["series"][0].value("resamples", resamples);
    }

    json series = json::array();
    std::size_t mismatches = 0;
    for (const auto& [key, rows] : groups) {
        const auto table = metric_table(rows);
        json s = {{"scenario", key.scenario}, {"policy", key.policy}};
        json finals = json::object();
        for (const auto& [name, values] : table) {
            double sum = 0.0, lo = values.front().back(), hi = lo;
            for (const auto& run : values) {
                sum += run.back();
                lo = std::min(lo, run.back());
                hi = std::max(hi, run.back());
            }
            finals[name] = {{"mean", sum / static_cast<double>(values.size())}, {"min", lo}, {"max", hi}};
        }
        s["final"] = finals;
        s["runs"] = table.begin()->second.size();
        s["updates"] = table.begin()->second.front().size();

        if (table.begin()->second.size() >= 2) {
            const auto agg = bootstrap_table(table, resamples, seed);
            s["aggregate"] = series_json(agg);
            if (have_existing) {
                const json* match = nullptr;
                for (const auto& e : existing["series"])
                    if (e.value("scenario", "") == key.scenario && e.value("policy", "") == key.policy)
                        match = &e;
                if (!match) {
                    warn << "warning: aggregate.json has no series for " << key.scenario << '/'
                         << key.policy << '\n';
                    ++mismatches;
                } else {
                    for (const auto& [name, band] : agg.metrics) {
                        const auto& m = (*match)["metrics"];
                        if (!m.contains(name)) {
                            warn << "warning: aggregate.json lacks metric " << name << '\n';
                            ++mismatches;
                            continue;
                        }
                        const std::pair<const char*, const std::vector<double>*> parts[] = {
                            {"mean", &band.mean}, {"lower", &band.lower}, {"upper", &band.upper}};
                        for (const auto& [field, mine] : parts) {
                            const auto theirs = m[name][field].get<std::vector<double>>();
                            for (std::size_t u = 0; u < mine->size(); ++u) {
                                if (u >= theirs.size() || !close((*mine)[u], theirs[u])) {
                                    warn << "warning: mismatch " << key.scenario << '/' << key.policy
                                         << ' ' << name << '.' << field << " at update " << u << '\n';
                                    ++mismatches;
                                    break;
                                }
                            }
                        }
                    }
                }
            }
        }
        series.push_back(std::move(s));
    }

    detail::StagedFiles files(dir);
    files.write("report.json", json{{"version", 1}, {"series", series}}.dump(2) + '\n');
    files.commit();
    return mismatches;
}

namespace {

void emit_error(std::ostream& err, std::string_view kind, std::string_view flag, std::string msg) {
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::string escaped;
    for (char ch : msg) {
        if (ch == '"' || ch == '\\') escaped += '\\';
        escaped += ch;
    }
    err << "error: kind=" << kind << " flag=" << (flag.empty() ? "-" : flag) << " message=\""
        << escaped << "\"\n";
}

// CLI11 reports the option name inside its message; pull out the first --flag.
std::string flag_from_message(const std::string& msg) {
    const auto pos = msg.find("--");
    if (pos == std::string::npos) return "-";
    auto end = pos + 2;
    while (end < msg.size() && (std::isalnum(static_cast<unsigned char>(msg[end])) || msg[end] == '-'))
        ++end;
    return msg.substr(pos, end - pos);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Batched Thompson-sampling simulator with dynamic memory"};
    app.require_subcommand(1);

    std::string scenario, config_path;
    std::vector<std::string> policies;
    std::vector<double> thresholds;
    std::size_t runs = 0, updates = 0, batch_size = 0, arms = 0, threads = 0;
    std::uint64_t seed = 0;
    std::string out_dir;

    auto add_run_flags = [&](CLI::App* sub) {
        sub->add_option("--scenario", scenario, "stationary|abrupt|gradual");
        sub->add_option("--policy", policies, "bayeswin|adwin|fixed|unbounded (repeatable)");
        sub->add_option("--threshold", thresholds, "false discovery rate (repeatable)");
        sub->add_option("--runs", runs);
        sub->add_option("--updates", updates);
        sub->add_option("--batch-size", batch_size);
        sub->add_option("--arms", arms);
        sub->add_option("--seed", seed);
        sub->add_option("--out", out_dir);
        sub->add_option("--config", config_path, "JSON config or manifest; flags override it");
        sub->add_option("--threads", threads);
    };
    auto* simulate = app.add_subcommand("simulate", "run a scenario and write metrics");
    add_run_flags(simulate);
    auto* sweep = app.add_subcommand("sweep", "final regret and band movement across thresholds");
    add_run_flags(sweep);
    auto* report = app.add_subcommand("report", "recompute aggregates from metrics.csv");
    std::string report_input, report_out;
    report->add_option("input", report_input, "metrics.csv")->required();
    report->add_option("--out", report_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ExitCode::ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help();
        return ExitCode::ok;
    } catch (const CLI::ParseError& e) {
        emit_error(err, "config", flag_from_message(e.what()), e.what());
        return ExitCode::config_error;
    }

    const char* current_flag = "-";
    try {
        if (report->parsed()) {
            const auto n = cmd_report(report_input,
                                      report_out.empty() ? std::nullopt
                                                         : std::optional<std::filesystem::path>(report_out),
                                      err);
            out << "report: " << n << " aggregate mismatch(es)\n";
            return ExitCode::ok;
        }
        auto* sub = simulate->parsed() ? simulate : sweep;
        RunConfig c;
        if (!config_path.empty()) {
            current_flag = "--config";
            std::ifstream f(config_path);
            if (!f) throw ConfigError("--config", "cannot open " + config_path);
            std::stringstream buf;
            buf << f.rdbuf();
            c = config_from_json(buf.str());
        }
        if (sub->count("--scenario")) {
            current_flag = "--scenario";
            c.scenario = parse_scenario(scenario);
        }
        if (sub->count("--policy")) {
            current_flag = "--policy";
            c.policies.clear();
            for (const auto& p : policies) c.policies.push_back(parse_policy(p));
            c.policies_explicit = true;
        }
        current_flag = "-";
        if (sub->count("--threshold")) c.thresholds = thresholds;
        if (sub->count("--runs")) c.runs = runs;
        if (sub->count("--updates")) {
            c.updates = updates;
            c.change_update.reset();
        }
        if (sub->count("--batch-size")) c.experiment.batch_size = batch_size;
        if (sub->count("--arms")) {
            c.experiment.n_arms = arms;
            if (c.rates.size() != arms) c.rates.clear();
        }
        if (sub->count("--seed")) c.seed = seed;
        if (sub->count("--out")) c.out = out_dir;
        if (sub->count("--threads")) c.threads = threads;
        if (!c.thresholds.empty()) c.experiment.detection_threshold = c.thresholds.front();

        if (simulate->parsed()) cmd_simulate(c);
        else cmd_sweep(c);
        return ExitCode::ok;
    } catch (const ConfigError& e) {
        emit_error(err, "config", e.flag(), e.what());
        return ExitCode::config_error;
    } catch (const ContractViolation& e) {
        emit_error(err, "config", current_flag, e.what());
        return ExitCode::config_error;
    } catch (const std::exception& e) {
        emit_error(err, "runtime", "-", e.what());
        return ExitCode::runtime_error;
    }
}

}  // namespace bayeswin::cli
