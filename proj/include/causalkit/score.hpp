#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <mutex>
#include <ostream>
#include <shared_mutex>
#include <stdexcept>
#include <unordered_map>

#include "causalkit/dataset.hpp"
#include "causalkit/graph.hpp"
#include "causalkit/util.hpp"

namespace causalkit {

/// Maximum-likelihood sufficient statistics (covariance normalized by n).
struct SufficientStats {
    long n = 0;
    int p = 0;
    Eigen::MatrixXd covariance;
    Eigen::VectorXd means;
    bool low_sample_warning = false;  // n < p + 1: scores may be degenerate
};

inline SufficientStats compute_stats(const Dataset &data) {
    if (data.has_missing())
        throw std::invalid_argument("compute_stats: dataset has missing values");
    SufficientStats stats;
    stats.n = data.n;
    stats.p = data.p;
    stats.low_sample_warning = data.n < data.p + 1;

    Eigen::MatrixXd x(data.n, data.p);
    for (int v = 0; v < data.p; ++v)
        for (int r = 0; r < data.n; ++r) x(r, v) = data.values[v][r];

    stats.means = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - stats.means.transpose();
    stats.covariance = (centered.transpose() * centered) / static_cast<double>(data.n);
    // force exact symmetry; downstream solvers index both triangles
    stats.covariance = ((stats.covariance + stats.covariance.transpose()) / 2.0).eval();
    return stats;
}

/// Memoizing context for local BIC scores. Lookups take a shared lock;
/// insertion is serialized. Recomputing a key concurrently is harmless
/// because scoring is a pure function of (stats, node, parents).
class ScoreContext {
public:
    explicit ScoreContext(SufficientStats stats, double penalty_multiplier = 1.0)
        : stats_(std::move(stats)), penalty_multiplier_(penalty_multiplier) {
        if (penalty_multiplier <= 0.0)
            throw std::invalid_argument("ScoreContext: penalty multiplier must be positive");
    }

    const SufficientStats &stats() const { return stats_; }
    double penalty_multiplier() const { return penalty_multiplier_; }
    bool degeneracy_flag() const { return degenerate_.load(); }
    void set_trace(std::ostream *sink) { trace_ = sink; }

    /// BIC of regressing `node` on `parents`, lower is better:
    ///   n * ln(RSS/n) + penalty * (|parents| + 2) * ln(n)
    /// Parameter count is |parents| coefficients + intercept + noise variance.
    double local_bic(int node, const NodeSet &parents) const {
        if (node < 0 || node >= stats_.p)
            throw std::out_of_range("local_bic: node out of range");
        if (contains(parents, node))
            throw std::invalid_argument("local_bic: node cannot be its own parent");
        for (int q : parents)
            if (q < 0 || q >= stats_.p)
                throw std::out_of_range("local_bic: parent out of range");

        const std::string key = memo_key(node, parents);
        {
            std::shared_lock lock(mutex_);
            auto it = memo_.find(key);
            if (it != memo_.end()) return it->second;
        }
        const double value = compute(node, parents);
        {
            std::unique_lock lock(mutex_);
            memo_.emplace(key, value);
        }
        if (trace_) {
            std::string parents_str;
            for (int q : parents) {
                if (!parents_str.empty()) parents_str += ",";
                parents_str += std::to_string(q);
            }
            (*trace_) << node << "|" << parents_str << "|" << format_double(value) << "\n";
        }
        return value;
    }

    double global_bic(const Dag &g) const {
        if (g.node_count() != stats_.p)
            throw std::invalid_argument("global_bic: graph size does not match statistics");
        if (!is_acyclic(g)) throw std::invalid_argument("global_bic: graph is cyclic");
        double total = 0.0;
        for (int v = 0; v < stats_.p; ++v) total += local_bic(v, g.parents(v));
        return total;
    }

    /// local_bic(new) - local_bic(old); negative means improvement.
    double delta_score(int node, const NodeSet &old_parents, const NodeSet &new_parents) const {
        return local_bic(node, new_parents) - local_bic(node, old_parents);
    }

private:
    static std::string memo_key(int node, const NodeSet &parents) {
        std::string key = std::to_string(node) + ":";
        for (int q : parents) {
            key += std::to_string(q);
            key.push_back(',');
        }
        return key;
    }

    double compute(int node, const NodeSet &parents) const {
        const double n = static_cast<double>(stats_.n);
        const auto &cov = stats_.covariance;
        double residual_variance;
        if (parents.empty()) {
            residual_variance = cov(node, node);
        } else {
            const int k = static_cast<int>(parents.size());
            Eigen::MatrixXd cpp(k, k);
            Eigen::VectorXd cpv(k);
            int i = 0;
            for (int a : parents) {
                cpv(i) = cov(a, node);
                int j = 0;
                for (int b : parents) cpp(i, j++) = cov(a, b);
                ++i;
            }
            Eigen::LDLT<Eigen::MatrixXd> solver(cpp);
            bool singular = solver.info() != Eigen::Success;
            if (!singular) {
                const auto d = solver.vectorD();
                const double dmax = d.cwiseAbs().maxCoeff();
                if (dmax <= 0.0 || d.minCoeff() < 1e-12 * dmax) singular = true;
            }
            if (singular) {
                // duplicated survey questions: regularize instead of aborting
                degenerate_.store(true);
                cpp.diagonal().array() += 1e-8;
                solver.compute(cpp);
            }
            residual_variance = cov(node, node) - cpv.dot(solver.solve(cpv));
        }
        if (!(residual_variance > 1e-12)) {
            degenerate_.store(true);
            residual_variance = 1e-12;
        }
        const double param_count = static_cast<double>(parents.size()) + 2.0;
        return n * std::log(residual_variance) +
               penalty_multiplier_ * param_count * std::log(n);
    }

    SufficientStats stats_;
    double penalty_multiplier_;
    mutable std::shared_mutex mutex_;
    mutable std::unordered_map<std::string, double> memo_;
    mutable std::atomic<bool> degenerate_{false};
    std::ostream *trace_ = nullptr;
};

}  // namespace causalkit
