#pragma once

#include <chrono>
#include <cstdio>
#include <fcntl.h>
#include <filesystem>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "causalkit/artifacts.hpp"
#include "causalkit/baselines.hpp"
#include "causalkit/dataset.hpp"
#include "causalkit/effects.hpp"
#include "causalkit/ges.hpp"
#include "causalkit/synth.hpp"
#include "causalkit/util.hpp"

namespace causalkit {

namespace fs = std::filesystem;

struct RunConfig {
    std::string input;
    std::string schema;
    std::string out = "out";
    std::string graph_path;  // effects: graph dump to read; default <out>/graph.json
    std::uint64_t seed = 0;
    double high = 5.0;
    double low = 3.0;
    int resamples = 1000;
    int subsample = 0;
    std::string corr_method = "pearson";
    double corr_threshold = 0.5;
    double penalty = 1.0;
    double max_missing = 0.5;
    bool bonferroni = false;
    long max_iterations = 0;  // GES move cap; 0 means 10 * p^2
    // simulate parameters
    int sim_p = 10;
    double sim_degree = 2.0;
    int sim_n = 10000;
    bool sim_likert = false;

    void validate() const {
        if (!(low < high))
            throw std::invalid_argument("config: low threshold must be below high threshold");
        if (low < 1.0 || high > 7.0)
            throw std::invalid_argument("config: thresholds must lie within [1,7]");
        if (resamples < 1) throw std::invalid_argument("config: resamples must be >= 1");
        if (max_missing < 0.0 || max_missing > 1.0)
            throw std::invalid_argument("config: max-missing must be in [0,1]");
        parse_correlation_method(corr_method);
    }

    /// Canonical echo of the analytic configuration. Output locations are
    /// excluded so identical analyses hash identically wherever they land.
    std::string echo() const {
        std::ostringstream os;
        os << "bonferroni=" << (bonferroni ? "true" : "false") << "\n"
           << "corr-method=" << corr_method << "\n"
           << "corr-threshold=" << format_double(corr_threshold) << "\n"
           << "high=" << format_double(high) << "\n"
           << "input=" << fs::path(input).filename().string() << "\n"
           << "low=" << format_double(low) << "\n"
           << "max-iterations=" << max_iterations << "\n"
           << "max-missing=" << format_double(max_missing) << "\n"
           << "penalty=" << format_double(penalty) << "\n"
           << "resamples=" << resamples << "\n"
           << "schema=" << fs::path(schema).filename().string() << "\n"
           << "seed=" << seed << "\n"
           << "sim-degree=" << format_double(sim_degree) << "\n"
           << "sim-likert=" << (sim_likert ? "true" : "false") << "\n"
           << "sim-n=" << sim_n << "\n"
           << "sim-p=" << sim_p << "\n"
           << "subsample=" << subsample << "\n";
        return os.str();
    }

    std::string hash() const { return fnv1a_hex(echo()); }
};

/// Exclusive lock on the output directory; concurrent commands must not
/// share mutable files.
class OutputLock {
public:
    explicit OutputLock(const fs::path &out_dir) : path_(out_dir / ".lock") {
        fs::create_directories(out_dir);
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0)
            throw ArtifactError("output directory '" + out_dir.string() +
                                "' is locked by another command (remove " + path_.string() +
                                " if stale)");
    }
    ~OutputLock() {
        if (fd_ >= 0) {
            ::close(fd_);
            ::unlink(path_.c_str());
        }
    }
    OutputLock(const OutputLock &) = delete;
    OutputLock &operator=(const OutputLock &) = delete;

private:
    fs::path path_;
    int fd_ = -1;
};

namespace detail {

class StageTimer {
public:
    explicit StageTimer(std::string label)
        : label_(std::move(label)), start_(std::chrono::steady_clock::now()) {}
    ~StageTimer() {
        const auto elapsed = std::chrono::steady_clock::now() - start_;
        const double ms =
                std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(elapsed)
                        .count();
        std::fprintf(stderr, "[timing] %s: %.1f ms\n", label_.c_str(), ms);
    }

private:
    std::string label_;
    std::chrono::steady_clock::time_point start_;
};

inline std::string fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

}  // namespace detail

struct PipelineData {
    Dataset complete;      // post schema + complete-cases, original units
    Dataset standardized;  // z-scored, zero-variance columns dropped
};

inline PipelineData load_pipeline_data(const RunConfig &config) {
    if (config.input.empty()) throw IngestError("config: no input file given");
    if (config.schema.empty()) throw IngestError("config: no schema file given");
    PipelineData out;
    const RawTable table = load_table(config.input);
    const std::vector<VariableSpec> specs = load_schema(config.schema);
    out.complete = complete_cases(apply_schema(table, specs), config.max_missing);
    out.standardized = standardize(out.complete);
    return out;
}

inline void write_config_artifact(const RunConfig &config) {
    write_text_artifact((fs::path(config.out) / "config.txt").string(), config.hash(),
                        config.echo());
}

inline void write_provenance_artifact(const RunConfig &config, const Dataset &data) {
    std::string body;
    for (const std::string &line : data.provenance) body += line + "\n";
    write_text_artifact((fs::path(config.out) / "provenance.txt").string(), config.hash(), body);
}

inline int cmd_ingest(const RunConfig &config) {
    config.validate();
    const OutputLock lock(config.out);
    const detail::StageTimer timer("ingest");
    const PipelineData data = load_pipeline_data(config);
    write_config_artifact(config);
    write_provenance_artifact(config, data.standardized);
    write_table(data.complete, (fs::path(config.out) / "dataset.tsv").string(), '\t',
                artifact_header(config.hash()));
    std::fprintf(stderr, "ingest: %d rows x %d columns (%zu provenance entries)\n",
                 data.complete.n, data.complete.p, data.standardized.provenance.size());
    return 0;
}

inline int cmd_discover(const RunConfig &config) {
    config.validate();
    const OutputLock lock(config.out);
    const detail::StageTimer timer("discover");
    const PipelineData data = load_pipeline_data(config);

    GesOptions options;
    options.penalty_multiplier = config.penalty;
    options.max_iterations = config.max_iterations;
    const GesResult result = run_ges(data.standardized, options);

    const std::vector<std::string> names = data.standardized.names();
    const std::string hash = config.hash();

    write_config_artifact(config);
    write_provenance_artifact(config, data.standardized);
    write_json_artifact((fs::path(config.out) / "graph.json").string(),
                        graph_to_json(result.graph, names, hash));
    write_text_artifact((fs::path(config.out) / "graph.dot").string(), hash,
                        to_dot(result.graph, names), "//");

    std::string trace_body;
    for (const std::string &line : serialize_trace(result.trace, names)) trace_body += line + "\n";
    trace_body += "# initial_score=" + format_double(result.trace.initial_score) + "\n";
    trace_body += "# final_score=" + format_double(result.trace.final_score) + "\n";
    trace_body += "# moves=" + std::to_string(result.trace.entries.size()) + "\n";
    write_text_artifact((fs::path(config.out) / "search_trace.txt").string(), hash, trace_body);

    const Partition part = partition_variables(result.graph);
    write_json_artifact((fs::path(config.out) / "partition.json").string(),
                        partition_to_json(part, names, hash));

    std::fprintf(stderr,
                 "discover: %zu moves, score %s -> %s, %zu/%zu variables associated\n",
                 result.trace.entries.size(), format_double(result.trace.initial_score).c_str(),
                 format_double(result.trace.final_score).c_str(), part.associated.size(),
                 names.size());
    if (result.trace.subset_cap_hits > 0)
        std::fprintf(stderr, "discover: subset cap hit %d times (greedy subset growth used)\n",
                     result.trace.subset_cap_hits);
    if (result.trace.truncated) {
        std::fprintf(stderr, "discover: iteration cap exceeded, result truncated\n");
        return 2;
    }
    return 0;
}

inline int cmd_effects(const RunConfig &config) {
    config.validate();
    const OutputLock lock(config.out);
    const detail::StageTimer timer("effects");
    const std::string graph_path = config.graph_path.empty()
                                           ? (fs::path(config.out) / "graph.json").string()
                                           : config.graph_path;
    const NamedGraph named = load_graph_artifact(graph_path);

    if (config.input.empty()) throw IngestError("config: no input file given");
    const RawTable table = load_table(config.input);
    const std::vector<VariableSpec> specs = load_schema(config.schema);
    const Dataset complete = complete_cases(apply_schema(table, specs), config.max_missing);

    std::vector<int> columns;
    std::vector<std::string> missing_names;
    for (const std::string &name : named.names) {
        const int c = complete.column_index(name);
        if (c < 0) missing_names.push_back(name);
        else columns.push_back(c);
    }
    if (!missing_names.empty())
        throw ArtifactError("graph does not match dataset; missing variables: " +
                            join(missing_names, ", "));
    const Dataset effects_data = complete.select_columns(columns);

    InterventionConfig icfg;
    icfg.high_threshold = config.high;
    icfg.low_threshold = config.low;
    icfg.resamples = config.resamples;
    icfg.subsample = config.subsample;
    icfg.seed = config.seed;

    const RankedEffects ranked = rank_interventions(effects_data, named.graph, icfg);
    const Hierarchy hier = hierarchy(named.graph);

    const std::string hash = config.hash();
    write_config_artifact(config);
    write_json_artifact((fs::path(config.out) / "effects.json").string(),
                        ranked_effects_to_json(ranked, named.names, hash));
    write_json_artifact((fs::path(config.out) / "hierarchy.json").string(),
                        hierarchy_to_json(hier, named.names, hash));

    for (const std::string &warning : ranked.warnings)
        std::fprintf(stderr, "effects: warning: %s\n", warning.c_str());
    std::fprintf(stderr, "effects: %zu targets ranked\n", ranked.reports.size());
    return 0;
}

inline int cmd_baselines(const RunConfig &config) {
    config.validate();
    const OutputLock lock(config.out);
    const detail::StageTimer timer("baselines");
    const RawTable table = load_table(config.input);
    const std::vector<VariableSpec> specs = load_schema(config.schema);
    const Dataset complete = complete_cases(apply_schema(table, specs), config.max_missing);

    std::vector<int> numeric_cols;
    for (int v = 0; v < complete.p; ++v)
        if (complete.specs[v].kind == VariableKind::likert7 ||
            complete.specs[v].kind == VariableKind::numeric)
            numeric_cols.push_back(v);
    const Dataset numeric_data = complete.select_columns(numeric_cols);

    const CorrelationScreen screen = correlation_screen(
            numeric_data, parse_correlation_method(config.corr_method), config.corr_threshold);
    const std::vector<NeutralTest> tests = neutral_test_all(numeric_data, 4.0, config.bonferroni);

    const std::string hash = config.hash();
    const std::vector<std::string> names = numeric_data.names();
    write_config_artifact(config);
    write_text_artifact((fs::path(config.out) / "strong_pairs.tsv").string(), hash,
                        strong_pairs_table(screen, names));
    write_text_artifact((fs::path(config.out) / "neutral_tests.tsv").string(), hash,
                        neutral_tests_table(tests, names));

    std::fprintf(stderr, "baselines: %zu strong pairs, %zu neutral tests\n",
                 screen.strong_pairs.size(), tests.size());
    return 0;
}

inline int cmd_simulate(const RunConfig &config) {
    const OutputLock lock(config.out);
    const detail::StageTimer timer("simulate");
    const Dag truth = random_dag(config.sim_p, config.sim_degree, config.seed);
    const Scm scm = random_scm(truth, config.seed + 1);
    Dataset data = sample(scm, config.sim_n, config.seed + 2);
    if (config.sim_likert) data = likertize(data, default_likert_cutpoints());

    const std::string hash = config.hash();
    const std::vector<std::string> names = data.names();
    write_config_artifact(config);
    write_json_artifact((fs::path(config.out) / "truth.json").string(),
                        graph_to_json(Pdag::from_dag(truth), names, hash));
    write_table(data, (fs::path(config.out) / "sample.tsv").string(), '\t',
                artifact_header(hash));

    GesOptions options;
    options.penalty_multiplier = config.penalty;
    options.max_iterations = config.max_iterations;
    const GesResult result = run_ges(standardize(data), options);
    const RecoveryMetrics metrics = recovery_metrics(truth, result.graph);

    write_json_artifact((fs::path(config.out) / "estimate.json").string(),
                        graph_to_json(result.graph, names, hash));
    std::string body = "metric\tvalue\n";
    body += "shd\t" + std::to_string(metrics.shd) + "\n";
    body += "skeleton_precision\t" + format_double(metrics.skeleton_precision) + "\n";
    body += "skeleton_recall\t" + format_double(metrics.skeleton_recall) + "\n";
    body += "orientation_accuracy\t" + format_double(metrics.orientation_accuracy) + "\n";
    write_text_artifact((fs::path(config.out) / "metrics.tsv").string(), hash, body);

    std::fprintf(stderr, "simulate: shd=%d recall=%s\n", metrics.shd,
                 format_double(metrics.skeleton_recall).c_str());
    return result.trace.truncated ? 2 : 0;
}

namespace detail {

inline std::string read_artifact_body(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    std::string line, body;
    bool first = true;
    while (std::getline(in, line)) {
        if (first) {  // skip the artifact header line
            first = false;
            continue;
        }
        body += line + "\n";
    }
    return body;
}

inline Json read_json_artifact(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    Json doc;
    in >> doc;
    return doc;
}

}  // namespace detail

/// Assembles the single Markdown report from previously written artifacts.
/// Pure function of the artifact directory: regeneration is byte-identical.
inline int cmd_report(const RunConfig &config) {
    const fs::path out_dir(config.out);
    const OutputLock lock(out_dir);
    const std::vector<std::string> required = {
            "config.txt",    "provenance.txt", "graph.json",       "graph.dot",
            "search_trace.txt", "partition.json", "effects.json",  "hierarchy.json",
            "strong_pairs.tsv", "neutral_tests.tsv"};
    std::vector<std::string> missing;
    for (const std::string &name : required)
        if (!fs::exists(out_dir / name)) missing.push_back(name);
    if (!missing.empty())
        throw ArtifactError("report: missing artifacts: " + join(missing, ", "));

    std::string shared_hash;
    for (const std::string &name : required) {
        const std::string hash = artifact_config_hash((out_dir / name).string());
        if (shared_hash.empty()) shared_hash = hash;
        else if (hash != shared_hash)
            throw ArtifactError("report: artifact '" + name +
                                "' comes from a different run (config hash " + hash +
                                " != " + shared_hash + ")");
    }

    const Json partition = detail::read_json_artifact(out_dir / "partition.json");
    const Json hierarchy_doc = detail::read_json_artifact(out_dir / "hierarchy.json");
    const Json effects = detail::read_json_artifact(out_dir / "effects.json");
    const std::string config_echo = detail::read_artifact_body(out_dir / "config.txt");
    const std::string strong_pairs = detail::read_artifact_body(out_dir / "strong_pairs.tsv");
    const std::string neutral_tests = detail::read_artifact_body(out_dir / "neutral_tests.tsv");
    const std::string trace = detail::read_artifact_body(out_dir / "search_trace.txt");
    const std::string dot_body = detail::read_artifact_body(out_dir / "graph.dot");
    const std::string provenance = detail::read_artifact_body(out_dir / "provenance.txt");

    std::ostringstream md;
    md << "# Causal analysis report\n\n";
    md << "## Configuration\n\n```\n" << config_echo << "```\n\n";

    {
        std::istringstream prov(provenance);
        std::string line;
        int count = 0;
        while (std::getline(prov, line))
            if (!line.empty()) ++count;
        md << "## Data provenance\n\n" << count
           << " items dropped during ingestion (see provenance.txt).\n\n";
    }

    {
        int moves = 0;
        std::string initial, final_score;
        std::istringstream ts(trace);
        std::string line;
        while (std::getline(ts, line)) {
            if (line.rfind("# initial_score=", 0) == 0) initial = line.substr(16);
            else if (line.rfind("# final_score=", 0) == 0) final_score = line.substr(14);
            else if (!line.empty() && line[0] != '#') ++moves;
        }
        md << "## Discovery summary\n\n";
        md << "- applied moves: " << moves << "\n";
        md << "- score: " << initial << " -> " << final_score << "\n";
        md << "- associated variables: " << partition["associated_count"].get<std::size_t>()
           << " of "
           << partition["associated_count"].get<std::size_t>() +
                      partition["independent_count"].get<std::size_t>()
           << "\n\n";
    }

    md << "## Causal hierarchy\n\n";
    md << "- most ancestor: "
       << (hierarchy_doc["most_ancestor"].is_null()
                   ? std::string("(none)")
                   : hierarchy_doc["most_ancestor"].get<std::string>())
       << "\n";
    md << "- most descendant: "
       << (hierarchy_doc["most_descendant"].is_null()
                   ? std::string("(none)")
                   : hierarchy_doc["most_descendant"].get<std::string>())
       << "\n";
    if (hierarchy_doc["orientation_ambiguous"].get<bool>())
        md << "- note: the learned class leaves some edges unoriented; positions use the "
              "deterministic extension\n";
    md << "\n";

    md << "## What-if: ranked intervention targets\n\n";
    md << "| rank | target | mean |effect| | n_high | n_low |\n";
    md << "|------|--------|-------------|--------|-------|\n";
    {
        int rank = 1;
        for (const auto &report : effects["ranking"]) {
            md << "| " << rank++ << " | " << report["target"].get<std::string>() << " | "
               << detail::fixed3(report["mean_abs_effect"].get<double>()) << " | "
               << report["n_high"].get<int>() << " | " << report["n_low"].get<int>() << " |\n";
        }
    }
    md << "\n";

    md << "## What-is: strongest correlations\n\n```\n" << strong_pairs << "```\n\n";
    md << "## What-is: deviation from the neutral point\n\n```\n" << neutral_tests << "```\n\n";

    md << "## Reading the two views together\n\n";
    md << "The what-is tables rank problems by observed association and severity; the what-if "
          "ranking orders targets by how widely a change is expected to propagate. When the two "
          "disagree, the what-if ranking points at upstream drivers rather than downstream "
          "symptoms.\n\n";

    md << "## Graph\n\nRendered from graph.dot:\n\n```dot\n" << dot_body << "```\n";

    write_text_artifact((out_dir / "report.md").string(), shared_hash, md.str(), "<!--", " -->");
    std::fprintf(stderr, "report: wrote %s\n", (out_dir / "report.md").string().c_str());
    return 0;
}

}  // namespace causalkit
