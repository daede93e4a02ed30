#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "causalkit/dataset.hpp"
#include "causalkit/graph.hpp"
#include "causalkit/util.hpp"

namespace causalkit {

struct EffectError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Causally associated (degree >= 1) vs. independent (isolated) variables.
struct Partition {
    NodeSet associated;
    NodeSet independent;
};

inline Partition partition_variables(const Pdag &g) {
    Partition out;
    for (int v = 0; v < g.node_count(); ++v) {
        if (g.degree(v) > 0) out.associated.insert(v);
        else out.independent.insert(v);
    }
    return out;
}

/// Position of each variable in the causal ordering of the deterministic
/// consistent extension. ancestry_score = |descendants| - |ancestors|; the
/// most-ancestor node maximizes it, the most-descendant node minimizes it
/// (isolated nodes are not considered; ties break to the lowest index).
struct Hierarchy {
    std::vector<int> depth;           // longest directed path from any root
    std::vector<int> ancestry_score;  // descendants minus ancestors
    int most_ancestor = -1;
    int most_descendant = -1;
    bool orientation_ambiguous = false;  // input had undirected edges
};

inline Hierarchy hierarchy(const Pdag &g) {
    const Dag dag = consistent_extension(g);
    const int p = dag.node_count();

    Hierarchy h;
    h.orientation_ambiguous = g.undirected_edge_count() > 0;
    h.depth.assign(p, 0);
    h.ancestry_score.assign(p, 0);

    for (int v : topological_order(dag))
        for (int parent : dag.parents(v))
            h.depth[v] = std::max(h.depth[v], h.depth[parent] + 1);

    for (int v = 0; v < p; ++v)
        h.ancestry_score[v] = static_cast<int>(descendants(dag, v).size()) -
                              static_cast<int>(ancestors(dag, v).size());

    for (int v = 0; v < p; ++v) {
        if (g.degree(v) == 0) continue;
        if (h.most_ancestor < 0 || h.ancestry_score[v] > h.ancestry_score[h.most_ancestor])
            h.most_ancestor = v;
        if (h.most_descendant < 0 || h.ancestry_score[v] < h.ancestry_score[h.most_descendant])
            h.most_descendant = v;
    }
    return h;
}

struct InterventionConfig {
    double high_threshold = 5.0;  // high-satisfaction group: response >= 5
    double low_threshold = 3.0;   // low-satisfaction group: response <= 3
    int resamples = 1000;
    int subsample = 0;  // per-group draw size; 0 means min(n_high, n_low)
    std::uint64_t seed = 0;
    double ci_low_percentile = 2.5;
    double ci_high_percentile = 97.5;
};

/// Resampled high/low contrast for one intervention target. Effects are in
/// the data's original response units.
struct EffectReport {
    int target = -1;
    std::vector<double> per_variable_effect;  // full-split group mean difference
    std::vector<double> ci_low;
    std::vector<double> ci_high;
    double mean_abs_effect = 0.0;  // |effect| averaged over all non-target variables
    int n_high = 0;
    int n_low = 0;
    int resamples = 0;
};

namespace detail {

inline double percentile(std::vector<double> sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = (q / 100.0) * (static_cast<double>(sorted.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

inline std::vector<double> group_means(const Dataset &data, const std::vector<int> &rows) {
    std::vector<double> means(data.p, 0.0);
    for (int v = 0; v < data.p; ++v) {
        double total = 0.0;
        for (int r : rows) total += data.values[v][r];
        means[v] = total / static_cast<double>(rows.size());
    }
    return means;
}

}  // namespace detail

/// Splits respondents into high/low groups on the target, then estimates the
/// intervention contrast: per-variable mean(high) - mean(low), with
/// percentile intervals over balanced resamples. When the thresholds are
/// given swapped (high < low) the group roles flip, so swapping negates
/// every effect exactly.
inline EffectReport estimate_intervention(const Dataset &data, int target,
                                          const InterventionConfig &cfg = {}) {
    if (target < 0 || target >= data.p)
        throw std::out_of_range("estimate_intervention: target out of range");
    if (data.specs[target].kind != VariableKind::likert7)
        throw std::invalid_argument("estimate_intervention: target '" + data.name(target) +
                                    "' is not a likert7 variable");
    if (data.has_missing())
        throw std::invalid_argument("estimate_intervention: dataset has missing values");
    if (cfg.resamples < 1)
        throw std::invalid_argument("estimate_intervention: resamples must be >= 1");

    const bool swapped = cfg.high_threshold < cfg.low_threshold;
    std::vector<int> high_rows, low_rows;
    for (int r = 0; r < data.n; ++r) {
        const double v = data.values[target][r];
        const bool in_high = swapped ? v <= cfg.high_threshold : v >= cfg.high_threshold;
        const bool in_low = swapped ? v >= cfg.low_threshold : v <= cfg.low_threshold;
        if (in_high) high_rows.push_back(r);
        else if (in_low) low_rows.push_back(r);
    }
    if (high_rows.empty())
        throw EffectError("estimate_intervention: degenerate split, high group is empty for '" +
                          data.name(target) + "'");
    if (low_rows.empty())
        throw EffectError("estimate_intervention: degenerate split, low group is empty for '" +
                          data.name(target) + "'");
    {
        double mn = data.values[target][0], mx = data.values[target][0];
        for (double v : data.values[target]) {
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        if (mn == mx)
            throw EffectError("estimate_intervention: target '" + data.name(target) +
                              "' has zero variance");
    }

    EffectReport report;
    report.target = target;
    report.n_high = static_cast<int>(high_rows.size());
    report.n_low = static_cast<int>(low_rows.size());
    report.resamples = cfg.resamples;

    const std::vector<double> high_means = detail::group_means(data, high_rows);
    const std::vector<double> low_means = detail::group_means(data, low_rows);
    report.per_variable_effect.resize(data.p);
    for (int v = 0; v < data.p; ++v)
        report.per_variable_effect[v] = high_means[v] - low_means[v];

    int draw = std::min(report.n_high, report.n_low);
    if (cfg.subsample > 0) draw = std::min(draw, cfg.subsample);

    // Generator derived from seed + target so per-target runs are
    // independent of scheduling order.
    std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(target));
    std::vector<std::vector<double>> resampled(data.p);
    for (auto &column : resampled) column.reserve(cfg.resamples);
    for (int rep = 0; rep < cfg.resamples; ++rep) {
        const std::vector<int> hs = sample_without_replacement(high_rows, draw, rng);
        const std::vector<int> ls = sample_without_replacement(low_rows, draw, rng);
        const std::vector<double> hm = detail::group_means(data, hs);
        const std::vector<double> lm = detail::group_means(data, ls);
        for (int v = 0; v < data.p; ++v) resampled[v].push_back(hm[v] - lm[v]);
    }

    report.ci_low.resize(data.p);
    report.ci_high.resize(data.p);
    for (int v = 0; v < data.p; ++v) {
        std::sort(resampled[v].begin(), resampled[v].end());
        // widen to the full-split estimate so the interval always covers it
        report.ci_low[v] = std::min(detail::percentile(resampled[v], cfg.ci_low_percentile),
                                    report.per_variable_effect[v]);
        report.ci_high[v] = std::max(detail::percentile(resampled[v], cfg.ci_high_percentile),
                                     report.per_variable_effect[v]);
    }

    double total = 0.0;
    for (int v = 0; v < data.p; ++v)
        if (v != target) total += std::abs(report.per_variable_effect[v]);
    report.mean_abs_effect = data.p > 1 ? total / static_cast<double>(data.p - 1) : 0.0;
    return report;
}

struct RankedEffects {
    std::vector<EffectReport> reports;  // sorted by mean_abs_effect descending
    std::vector<std::string> warnings;  // per-target failures, non-fatal
};

/// Estimates effects for every causally associated likert7 variable and
/// ranks targets by mean absolute effect (ties by node index).
inline RankedEffects rank_interventions(const Dataset &data, const Pdag &g,
                                        const InterventionConfig &cfg = {}) {
    if (g.node_count() != data.p)
        throw std::invalid_argument("rank_interventions: graph size does not match dataset");
    RankedEffects out;
    const Partition part = partition_variables(g);
    if (part.associated.empty())
        out.warnings.push_back("no causally associated variables; ranking is empty");
    for (int target : part.associated) {
        if (data.specs[target].kind != VariableKind::likert7) continue;
        try {
            out.reports.push_back(estimate_intervention(data, target, cfg));
        } catch (const EffectError &err) {
            out.warnings.push_back("target '" + data.name(target) + "' skipped: " + err.what());
        }
    }
    std::stable_sort(out.reports.begin(), out.reports.end(),
                     [](const EffectReport &a, const EffectReport &b) {
                         if (a.mean_abs_effect != b.mean_abs_effect)
                             return a.mean_abs_effect > b.mean_abs_effect;
                         return a.target < b.target;
                     });
    return out;
}

}  // namespace causalkit
