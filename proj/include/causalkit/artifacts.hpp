#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "causalkit/baselines.hpp"
#include "causalkit/dataset.hpp"
#include "causalkit/effects.hpp"
#include "causalkit/ges.hpp"
#include "causalkit/graph.hpp"
#include "causalkit/util.hpp"

namespace causalkit {

using Json = nlohmann::ordered_json;

struct ArtifactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// "causalkit <version> config=<hash>"; the first line of every artifact.
inline std::string artifact_header(const std::string &config_hash) {
    return std::string(kToolName) + " " + kToolVersion + " config=" + config_hash;
}

inline void write_text_artifact(const std::string &path, const std::string &config_hash,
                                const std::string &body, const std::string &comment_prefix = "#",
                                const std::string &comment_suffix = "") {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArtifactError("cannot write artifact '" + path + "'");
    out << comment_prefix << " " << artifact_header(config_hash) << comment_suffix << "\n" << body;
}

/// JSON artifacts are single-line documents whose first field is the header,
/// so the first line carries the tool version and config hash.
inline void write_json_artifact(const std::string &path, Json doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArtifactError("cannot write artifact '" + path + "'");
    out << doc.dump() << "\n";
}

inline std::string read_first_line(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("cannot read artifact '" + path + "'");
    std::string line;
    std::getline(in, line);
    return line;
}

/// Extracts the config hash from an artifact's first line, whatever the
/// comment convention of the format.
inline std::string artifact_config_hash(const std::string &path) {
    const std::string line = read_first_line(path);
    const std::string marker = "config=";
    const std::size_t pos = line.find(marker);
    if (pos == std::string::npos)
        throw ArtifactError("artifact '" + path + "' has no config hash header");
    std::string hash;
    for (std::size_t i = pos + marker.size();
         i < line.size() && std::isxdigit(static_cast<unsigned char>(line[i])); ++i)
        hash.push_back(line[i]);
    if (hash.empty())
        throw ArtifactError("artifact '" + path + "' has a malformed config hash header");
    return hash;
}

inline Json graph_to_json(const Pdag &g, const std::vector<std::string> &names,
                          const std::string &config_hash) {
    if (static_cast<int>(names.size()) != g.node_count())
        throw std::invalid_argument("graph_to_json: name count mismatch");
    Json doc;
    doc["_header"] = artifact_header(config_hash);
    doc["nodes"] = names;
    Json directed = Json::array();
    for (auto [a, b] : g.directed_edges()) directed.push_back({a, b});
    Json undirected = Json::array();
    for (auto [a, b] : g.undirected_edges()) undirected.push_back({a, b});
    doc["directed"] = directed;
    doc["undirected"] = undirected;
    return doc;
}

struct NamedGraph {
    Pdag graph;
    std::vector<std::string> names;
    NamedGraph() : graph(0) {}
};

inline NamedGraph graph_from_json(const Json &doc) {
    NamedGraph out;
    if (!doc.contains("nodes") || !doc.contains("directed") || !doc.contains("undirected"))
        throw ArtifactError("graph dump is missing nodes/directed/undirected fields");
    out.names = doc["nodes"].get<std::vector<std::string>>();
    out.graph = Pdag(static_cast<int>(out.names.size()));
    for (const auto &e : doc["directed"])
        out.graph.add_directed_edge(e.at(0).get<int>(), e.at(1).get<int>());
    for (const auto &e : doc["undirected"])
        out.graph.add_undirected_edge(e.at(0).get<int>(), e.at(1).get<int>());
    return out;
}

inline NamedGraph load_graph_artifact(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("cannot read graph dump '" + path + "'");
    Json doc;
    try {
        in >> doc;
    } catch (const std::exception &err) {
        throw ArtifactError("graph dump '" + path + "' is not valid JSON: " + err.what());
    }
    return graph_from_json(doc);
}

inline Json partition_to_json(const Partition &part, const std::vector<std::string> &names,
                              const std::string &config_hash) {
    Json doc;
    doc["_header"] = artifact_header(config_hash);
    Json associated = Json::array();
    for (int v : part.associated) associated.push_back(names.at(v));
    Json independent = Json::array();
    for (int v : part.independent) independent.push_back(names.at(v));
    doc["associated_count"] = part.associated.size();
    doc["independent_count"] = part.independent.size();
    doc["associated"] = associated;
    doc["independent"] = independent;
    return doc;
}

inline Json hierarchy_to_json(const Hierarchy &h, const std::vector<std::string> &names,
                              const std::string &config_hash) {
    Json doc;
    doc["_header"] = artifact_header(config_hash);
    doc["most_ancestor"] = h.most_ancestor >= 0 ? Json(names.at(h.most_ancestor)) : Json(nullptr);
    doc["most_descendant"] =
            h.most_descendant >= 0 ? Json(names.at(h.most_descendant)) : Json(nullptr);
    doc["orientation_ambiguous"] = h.orientation_ambiguous;
    Json rows = Json::array();
    for (std::size_t v = 0; v < names.size(); ++v) {
        Json row;
        row["name"] = names[v];
        row["depth"] = h.depth.at(v);
        row["ancestry_score"] = h.ancestry_score.at(v);
        rows.push_back(row);
    }
    doc["nodes"] = rows;
    return doc;
}

inline Json effect_report_to_json(const EffectReport &r, const std::vector<std::string> &names) {
    Json doc;
    doc["target"] = names.at(r.target);
    doc["mean_abs_effect"] = r.mean_abs_effect;
    doc["n_high"] = r.n_high;
    doc["n_low"] = r.n_low;
    doc["resamples"] = r.resamples;
    Json rows = Json::array();
    for (std::size_t v = 0; v < names.size(); ++v) {
        if (static_cast<int>(v) == r.target) continue;
        Json row;
        row["name"] = names[v];
        row["effect"] = r.per_variable_effect[v];
        row["ci_low"] = r.ci_low[v];
        row["ci_high"] = r.ci_high[v];
        rows.push_back(row);
    }
    doc["effects"] = rows;
    return doc;
}

inline Json ranked_effects_to_json(const RankedEffects &ranked,
                                   const std::vector<std::string> &names,
                                   const std::string &config_hash) {
    Json doc;
    doc["_header"] = artifact_header(config_hash);
    Json reports = Json::array();
    for (const EffectReport &r : ranked.reports) reports.push_back(effect_report_to_json(r, names));
    doc["ranking"] = reports;
    doc["warnings"] = ranked.warnings;
    return doc;
}

/// Strong-pairs table as delimited text: variable_a, variable_b, r.
inline std::string strong_pairs_table(const CorrelationScreen &screen,
                                      const std::vector<std::string> &names) {
    std::string body = "variable_a\tvariable_b\tr\n";
    for (const StrongPair &pair : screen.strong_pairs)
        body += names.at(pair.i) + "\t" + names.at(pair.j) + "\t" + format_double(pair.r) + "\n";
    return body;
}

inline std::string neutral_tests_table(const std::vector<NeutralTest> &tests,
                                       const std::vector<std::string> &names) {
    std::string body = "variable\teffect_size\tt\tp\tstars\n";
    for (const NeutralTest &t : tests) {
        body += names.at(t.variable) + "\t" + format_double(t.effect_size) + "\t" +
                format_double(t.t_statistic) + "\t" + format_double(t.p_value) + "\t" +
                stars_text(t.stars) + "\n";
    }
    return body;
}

}  // namespace causalkit
