#pragma once

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "causalkit/dataset.hpp"
#include "causalkit/graph.hpp"
#include "causalkit/util.hpp"

namespace causalkit {

/// Linear-Gaussian structural causal model: node = sum(weight * parent) + noise.
struct Scm {
    Dag graph;
    std::map<std::pair<int, int>, double> weights;  // (parent, child) -> coefficient
    std::vector<double> noise_std;

    explicit Scm(Dag g) : graph(std::move(g)), noise_std(graph.node_count(), 1.0) {}

    void set_weight(int parent, int child, double w) {
        if (!graph.has_edge(parent, child))
            throw std::invalid_argument("Scm: weight on a non-existent edge");
        weights[{parent, child}] = w;
    }

    double weight(int parent, int child) const {
        auto it = weights.find({parent, child});
        return it == weights.end() ? 0.0 : it->second;
    }
};

struct RecoveryMetrics {
    int shd = 0;
    double skeleton_precision = 1.0;
    double skeleton_recall = 1.0;
    double orientation_accuracy = 1.0;
};

/// Random DAG: uniform topological order, each forward pair edged
/// independently with probability expected_degree / (p - 1).
inline Dag random_dag(int p, double expected_degree, std::uint64_t seed) {
    if (p < 1) throw std::invalid_argument("random_dag: p must be >= 1");
    if (expected_degree < 0.0) throw std::invalid_argument("random_dag: negative degree");
    std::mt19937_64 rng(seed);

    std::vector<int> order(p);
    for (int i = 0; i < p; ++i) order[i] = i;
    for (int i = p - 1; i > 0; --i) {
        const int j = static_cast<int>(uniform_index(rng, i + 1));
        std::swap(order[i], order[j]);
    }

    Dag g(p);
    if (p == 1 || expected_degree == 0.0) return g;
    const double prob = std::min(1.0, expected_degree / (p - 1));
    const double scale = 1.0 / (static_cast<double>(std::mt19937_64::max()) + 1.0);
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j)
            if (rng() * scale < prob) g.add_edge(order[i], order[j]);
    return g;
}

/// Edge weights drawn uniformly from +/-[low, high], bounded away from zero
/// so random test models stay faithful.
inline Scm random_scm(const Dag &g, std::uint64_t seed, double low = 0.5, double high = 1.0,
                      double noise_std = 1.0) {
    Scm scm(g);
    std::mt19937_64 rng(seed);
    const double scale = 1.0 / (static_cast<double>(std::mt19937_64::max()) + 1.0);
    for (auto [a, b] : g.edges()) {
        const double magnitude = low + (high - low) * (rng() * scale);
        const bool negative = (rng() & 1) != 0;
        scm.set_weight(a, b, negative ? -magnitude : magnitude);
    }
    for (double &s : scm.noise_std) s = noise_std;
    return scm;
}

/// Ancestral sampling in topological order; deterministic per seed.
inline Dataset sample(const Scm &scm, int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    const int p = scm.graph.node_count();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Dataset data;
    data.n = n;
    data.p = p;
    data.values.assign(p, std::vector<double>(n, 0.0));
    data.missing.assign(p, std::vector<uint8_t>(n, 0));
    for (int v = 0; v < p; ++v)
        data.specs.push_back({"X" + std::to_string(v + 1), VariableKind::numeric, "synthetic"});

    const std::vector<int> order = topological_order(scm.graph);
    for (int r = 0; r < n; ++r) {
        for (int v : order) {
            double value = scm.noise_std[v] * gauss(rng);
            for (int parent : scm.graph.parents(v))
                value += scm.weight(parent, v) * data.values[parent][r];
            data.values[v][r] = value;
        }
    }
    return data;
}

inline const std::vector<double> &default_likert_cutpoints() {
    static const std::vector<double> cuts = {-1.5, -0.9, -0.3, 0.3, 0.9, 1.5};
    return cuts;
}

/// Maps each value to its bin index + 1 over six ascending cutpoints,
/// producing responses in 1..7. Column specs become likert7.
inline Dataset likertize(const Dataset &data, const std::vector<double> &cutpoints) {
    if (cutpoints.size() != 6)
        throw std::invalid_argument("likertize: exactly six cutpoints required");
    for (std::size_t i = 1; i < cutpoints.size(); ++i)
        if (!(cutpoints[i - 1] < cutpoints[i]))
            throw std::invalid_argument("likertize: cutpoints must be strictly ascending");

    Dataset out = data;
    out.standardized = false;
    for (int v = 0; v < out.p; ++v) {
        out.specs[v].kind = VariableKind::likert7;
        for (int r = 0; r < out.n; ++r) {
            if (out.missing[v][r]) continue;
            const double x = data.values[v][r];
            int bin = 1;
            for (double cut : cutpoints)
                if (x > cut) ++bin;
            out.values[v][r] = static_cast<double>(bin);
        }
    }
    return out;
}

/// Compares the estimate against the truth's equivalence class. SHD counts
/// pairs whose edge state (absent / undirected / either direction) differs.
inline RecoveryMetrics recovery_metrics(const Dag &truth, const Pdag &estimate) {
    if (truth.node_count() != estimate.node_count())
        throw std::invalid_argument("recovery_metrics: node count mismatch");
    const Pdag target = cpdag_from_dag(truth);
    const int p = target.node_count();

    auto edge_state = [](const Pdag &g, int a, int b) -> int {
        // 0 none, 1 undirected, 2 a->b, 3 b->a
        if (g.has_undirected_edge(a, b)) return 1;
        if (g.has_directed_edge(a, b)) return 2;
        if (g.has_directed_edge(b, a)) return 3;
        return 0;
    };

    RecoveryMetrics m;
    int true_adj = 0, est_adj = 0, shared_adj = 0;
    int both_directed = 0, same_direction = 0;
    for (int a = 0; a < p; ++a) {
        for (int b = a + 1; b < p; ++b) {
            const int st = edge_state(target, a, b);
            const int se = edge_state(estimate, a, b);
            if (st != se) ++m.shd;
            if (st != 0) ++true_adj;
            if (se != 0) ++est_adj;
            if (st != 0 && se != 0) {
                ++shared_adj;
                if (st >= 2 && se >= 2) {
                    ++both_directed;
                    if (st == se) ++same_direction;
                }
            }
        }
    }
    m.skeleton_precision = est_adj > 0 ? static_cast<double>(shared_adj) / est_adj : 1.0;
    m.skeleton_recall = true_adj > 0 ? static_cast<double>(shared_adj) / true_adj : 1.0;
    m.orientation_accuracy =
            both_directed > 0 ? static_cast<double>(same_direction) / both_directed : 1.0;
    return m;
}

}  // namespace causalkit
