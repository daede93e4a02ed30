#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <map>

#include "causalkit/pipeline.hpp"

namespace {

using causalkit::RunConfig;

std::string config_path;  // value of --config for the chosen subcommand

/// Flat key=value config file. Values apply only where no flag was passed,
/// so flags override the file.
void apply_config_file(const CLI::App *cmd, RunConfig &config) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw causalkit::IngestError("cannot read config file '" + config_path + "'");

    const std::map<std::string, std::function<void(const std::string &)>> setters = {
            {"input", [&](const std::string &v) { config.input = v; }},
            {"schema", [&](const std::string &v) { config.schema = v; }},
            {"out", [&](const std::string &v) { config.out = v; }},
            {"graph", [&](const std::string &v) { config.graph_path = v; }},
            {"seed", [&](const std::string &v) { config.seed = std::stoull(v); }},
            {"high", [&](const std::string &v) { config.high = std::stod(v); }},
            {"low", [&](const std::string &v) { config.low = std::stod(v); }},
            {"resamples", [&](const std::string &v) { config.resamples = std::stoi(v); }},
            {"subsample", [&](const std::string &v) { config.subsample = std::stoi(v); }},
            {"corr-method", [&](const std::string &v) { config.corr_method = v; }},
            {"corr-threshold",
             [&](const std::string &v) { config.corr_threshold = std::stod(v); }},
            {"penalty", [&](const std::string &v) { config.penalty = std::stod(v); }},
            {"max-missing", [&](const std::string &v) { config.max_missing = std::stod(v); }},
            {"max-iterations",
             [&](const std::string &v) { config.max_iterations = std::stol(v); }},
            {"bonferroni", [&](const std::string &v) { config.bonferroni = v == "true"; }},
            {"p", [&](const std::string &v) { config.sim_p = std::stoi(v); }},
            {"degree", [&](const std::string &v) { config.sim_degree = std::stod(v); }},
            {"n", [&](const std::string &v) { config.sim_n = std::stoi(v); }},
            {"likertize", [&](const std::string &v) { config.sim_likert = v == "true"; }},
    };

    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const std::string stripped = causalkit::trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw causalkit::IngestError("config file line " + std::to_string(line_number) +
                                         " has no '=' separator");
        const std::string key = causalkit::trim(stripped.substr(0, eq));
        const std::string value = causalkit::trim(stripped.substr(eq + 1));
        auto it = setters.find(key);
        if (it == setters.end())
            throw causalkit::IngestError("config file line " + std::to_string(line_number) +
                                         ": unknown key '" + key + "'");
        const std::string flag = "--" + key;
        if (cmd->get_option_no_throw(flag) != nullptr && cmd->count(flag) > 0)
            continue;  // explicit flag wins
        it->second(value);
    }
}

void add_shared_options(CLI::App *cmd, RunConfig &config) {
    cmd->add_option("--config", config_path, "Config file (key=value lines); flags override it");
    cmd->add_option("--input", config.input, "Delimited input table (comma or tab)");
    cmd->add_option("--schema", config.schema, "Schema file: column = kind, category");
    cmd->add_option("--out", config.out, "Output directory for artifacts");
    cmd->add_option("--seed", config.seed, "Random seed for resampling and simulation");
    cmd->add_option("--high", config.high, "High-group threshold (response >= high)");
    cmd->add_option("--low", config.low, "Low-group threshold (response <= low)");
    cmd->add_option("--resamples", config.resamples, "Resampling iterations per target");
    cmd->add_option("--subsample", config.subsample,
                    "Per-group draw size per resample (0 = group minimum)");
    cmd->add_option("--corr-method", config.corr_method, "pearson or spearman");
    cmd->add_option("--corr-threshold", config.corr_threshold, "Strong-pair cutoff on |r|");
    cmd->add_option("--penalty", config.penalty, "BIC penalty multiplier");
    cmd->add_option("--max-missing", config.max_missing,
                    "Per-variable missing fraction above which a column is dropped");
    cmd->add_option("--max-iterations", config.max_iterations,
                    "Search move cap (0 = 10 * p^2)");
    cmd->add_flag("--bonferroni", config.bonferroni,
                  "Bonferroni-correct the neutral-point tests");
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Causal discovery and intervention prioritization for survey tables"};
    app.require_subcommand(1);

    RunConfig config;
    std::function<int()> action;

    auto *ingest = app.add_subcommand("ingest", "Validate and materialize the clean dataset");
    add_shared_options(ingest, config);
    ingest->callback([&] { action = [&] { return causalkit::cmd_ingest(config); }; });

    auto *discover = app.add_subcommand("discover", "Learn the causal graph from the table");
    add_shared_options(discover, config);
    discover->callback([&] { action = [&] { return causalkit::cmd_discover(config); }; });

    auto *effects = app.add_subcommand("effects", "Rank intervention targets on a learned graph");
    add_shared_options(effects, config);
    effects->add_option("--graph", config.graph_path,
                        "Graph dump to analyse (default <out>/graph.json)");
    effects->callback([&] { action = [&] { return causalkit::cmd_effects(config); }; });

    auto *baselines = app.add_subcommand("baselines",
                                         "Correlation screen and neutral-point tests");
    add_shared_options(baselines, config);
    baselines->callback([&] { action = [&] { return causalkit::cmd_baselines(config); }; });

    auto *simulate = app.add_subcommand("simulate",
                                        "Synthetic benchmark: sample a model, rediscover it");
    add_shared_options(simulate, config);
    simulate->add_option("--p", config.sim_p, "Number of variables");
    simulate->add_option("--degree", config.sim_degree, "Expected node degree");
    simulate->add_option("--n", config.sim_n, "Sample size");
    simulate->add_flag("--likertize", config.sim_likert, "Discretize samples to a 1..7 scale");
    simulate->callback([&] { action = [&] { return causalkit::cmd_simulate(config); }; });

    auto *report = app.add_subcommand("report", "Assemble the Markdown report from artifacts");
    add_shared_options(report, config);
    report->callback([&] { action = [&] { return causalkit::cmd_report(config); }; });

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty()) apply_config_file(app.get_subcommands().front(), config);
        return action();
    } catch (const std::exception &err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    }
}
