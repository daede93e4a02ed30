#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "causalkit/score.hpp"
#include "causalkit/synth.hpp"
#include "oracles.hpp"

using namespace causalkit;

namespace {

Dataset standardized_sample(const Dag &g, int n, std::uint64_t seed) {
    return standardize(sample(random_scm(g, seed), n, seed + 1));
}

Dag chain3() {
    Dag g(3);
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    return g;
}

}  // namespace

TEST(Stats, StandardizedDiagonalIsUnit) {
    const Dataset data = standardized_sample(chain3(), 500, 10);
    const SufficientStats stats = compute_stats(data);
    for (int v = 0; v < stats.p; ++v) EXPECT_NEAR(stats.covariance(v, v), 1.0, 1e-6);
    EXPECT_FALSE(stats.low_sample_warning);
}

TEST(Stats, DuplicatedColumnGivesUnitCorrelation) {
    Dataset data = sample(random_scm(Dag(2), 3), 200, 4);
    data.values[1] = data.values[0];
    const SufficientStats stats = compute_stats(standardize(data));
    EXPECT_NEAR(stats.covariance(0, 1), 1.0, 1e-9);
}

TEST(Stats, MatchesAnalyticCovarianceOfKnownModel) {
    // chain with fixed weights: the stationary covariance has a closed form
    Dag g = chain3();
    Scm scm(g);
    scm.set_weight(0, 1, 0.7);
    scm.set_weight(1, 2, -0.6);
    const Dataset data = sample(scm, 1000, 42);
    const SufficientStats stats = compute_stats(data);

    const double var_a = 1.0;
    const double var_b = 0.7 * 0.7 + 1.0;
    const double var_c = 0.6 * 0.6 * var_b + 1.0;
    EXPECT_NEAR(stats.covariance(0, 0), var_a, 0.1);
    EXPECT_NEAR(stats.covariance(1, 1), var_b, 0.1);
    EXPECT_NEAR(stats.covariance(2, 2), var_c, 0.1);
    EXPECT_NEAR(stats.covariance(0, 1), 0.7, 0.1);
    EXPECT_NEAR(stats.covariance(1, 2), -0.6 * var_b, 0.1);
    EXPECT_NEAR(stats.covariance(0, 2), 0.7 * -0.6, 0.1);
}

TEST(Stats, LowSampleWarningFlag) {
    const Dataset data = sample(random_scm(random_dag(6, 1.0, 1), 2), 5, 3);
    EXPECT_TRUE(compute_stats(data).low_sample_warning);
}

TEST(LocalBic, EmptyParentClosedForm) {
    const Dataset data = standardized_sample(chain3(), 400, 20);
    const SufficientStats stats = compute_stats(data);
    const ScoreContext ctx(stats);
    const double n = static_cast<double>(stats.n);
    for (int v = 0; v < 3; ++v) {
        const double expected = n * std::log(stats.covariance(v, v)) + 2.0 * std::log(n);
        EXPECT_NEAR(ctx.local_bic(v, {}), expected, 1e-9);
    }
}

TEST(LocalBic, SelfParentRejected) {
    const ScoreContext ctx(compute_stats(standardized_sample(chain3(), 100, 21)));
    EXPECT_THROW(ctx.local_bic(1, {1}), std::invalid_argument);
}

TEST(LocalBic, TrueParentBeatsGrandparent) {
    // chain 0 -> 1 -> 2: regressing 2 on {1} explains more than on {0}
    Dag g = chain3();
    Scm scm(g);
    scm.set_weight(0, 1, 0.8);
    scm.set_weight(1, 2, 0.8);
    const Dataset data = standardize(sample(scm, 10000, 22));
    const ScoreContext ctx(compute_stats(data));
    EXPECT_LT(ctx.local_bic(2, {1}), ctx.local_bic(2, {0}));
}

TEST(LocalBic, AgreesWithRawDataRegression) {
    for (int seed = 0; seed < 10; ++seed) {
        const Dag g = random_dag(5, 2.0, 300 + seed);
        const Dataset data = standardized_sample(g, 500, 400 + seed);
        const ScoreContext ctx(compute_stats(data));
        std::mt19937_64 rng(500 + seed);
        for (int trial = 0; trial < 10; ++trial) {
            const int node = static_cast<int>(uniform_index(rng, 5));
            NodeSet parents;
            for (int v = 0; v < 5; ++v)
                if (v != node && (rng() & 1)) parents.insert(v);
            const double expected = oracles::ols_local_bic(data, node, parents);
            ASSERT_NEAR(ctx.local_bic(node, parents), expected, 1e-6 * std::abs(expected) + 1e-8);
        }
    }
}

TEST(LocalBic, SingularParentsRegularizedNotFatal) {
    Dataset data = sample(random_scm(Dag(3), 30), 200, 31);
    data.values[1] = data.values[0];  // exact duplicate
    const ScoreContext ctx(compute_stats(standardize(data)));
    const double value = ctx.local_bic(2, {0, 1});
    EXPECT_TRUE(std::isfinite(value));
    EXPECT_TRUE(ctx.degeneracy_flag());
}

TEST(GlobalBic, EmptyGraphIsSumOfDiagonals) {
    const Dataset data = standardized_sample(chain3(), 300, 40);
    const SufficientStats stats = compute_stats(data);
    const ScoreContext ctx(stats);
    const double n = static_cast<double>(stats.n);
    double expected = 0.0;
    for (int v = 0; v < 3; ++v)
        expected += n * std::log(stats.covariance(v, v)) + 2.0 * std::log(n);
    EXPECT_NEAR(ctx.global_bic(Dag(3)), expected, 1e-9);
}

TEST(GlobalBic, MarkovEquivalentChainsScoreEqually) {
    const Dataset data = standardized_sample(chain3(), 2000, 41);
    const ScoreContext ctx(compute_stats(data));

    Dag forward(3);
    forward.add_edge(0, 1);
    forward.add_edge(1, 2);
    Dag backward(3);
    backward.add_edge(2, 1);
    backward.add_edge(1, 0);
    EXPECT_NEAR(ctx.global_bic(forward), ctx.global_bic(backward), 1e-6);
}

TEST(GlobalBic, ScoreEquivalenceExhaustiveP3) {
    const Dag truth = chain3();
    const Dataset data = standardized_sample(truth, 2000, 43);
    const ScoreContext ctx(compute_stats(data));
    const std::vector<Dag> dags = oracles::enumerate_all_dags(3);
    for (std::size_t i = 0; i < dags.size(); ++i) {
        for (std::size_t j = i + 1; j < dags.size(); ++j) {
            if (cpdag_from_dag(dags[i]) == cpdag_from_dag(dags[j])) {
                ASSERT_NEAR(ctx.global_bic(dags[i]), ctx.global_bic(dags[j]), 1e-6)
                        << "i=" << i << " j=" << j;
            }
        }
    }
}

TEST(GlobalBic, TrueColliderBeatsReversedEdge) {
    // truth 0 -> 1 <- 2 vs the non-equivalent reversal 0 -> 1 -> 2
    Dag truth(3);
    truth.add_edge(0, 1);
    truth.add_edge(2, 1);
    Dag reversed(3);
    reversed.add_edge(0, 1);
    reversed.add_edge(1, 2);

    int wins = 0;
    const int trials = 40;
    for (int seed = 0; seed < trials; ++seed) {
        Scm scm(truth);
        scm.set_weight(0, 1, 0.8);
        scm.set_weight(2, 1, 0.8);
        const Dataset data = standardize(sample(scm, 10000, 600 + seed));
        const ScoreContext ctx(compute_stats(data));
        if (ctx.global_bic(truth) < ctx.global_bic(reversed)) ++wins;
    }
    EXPECT_GE(wins, static_cast<int>(trials * 0.95));
}

TEST(DeltaScore, IdenticalParentSetsGiveExactZero) {
    const ScoreContext ctx(compute_stats(standardized_sample(chain3(), 200, 50)));
    EXPECT_EQ(ctx.delta_score(2, {0, 1}, {0, 1}), 0.0);
}

TEST(DeltaScore, IndependentNoiseParentCostsAboutLogN) {
    // fit gain is O(1) for an unrelated regressor, so the penalty dominates
    const int n = 10000;
    const Dataset data = standardized_sample(Dag(2), n, 51);
    const ScoreContext ctx(compute_stats(data));
    const double delta = ctx.delta_score(0, {}, {1});
    EXPECT_NEAR(delta, std::log(static_cast<double>(n)), 3.0);
}

TEST(DeltaScore, TrueParentImproves) {
    Dag g(2);
    g.add_edge(0, 1);
    Scm scm(g);
    scm.set_weight(0, 1, 0.8);
    const Dataset data = standardize(sample(scm, 5000, 52));
    const ScoreContext ctx(compute_stats(data));
    EXPECT_LT(ctx.delta_score(1, {}, {0}), 0.0);

    const double oracle_delta = oracles::ols_local_bic(data, 1, {0}) -
                                oracles::ols_local_bic(data, 1, {});
    EXPECT_NEAR(ctx.delta_score(1, {}, {0}), oracle_delta, 1e-6 * std::abs(oracle_delta));
}

TEST(Decomposability, LocalDeltaEqualsGlobalDelta) {
    const Dag g = random_dag(5, 2.0, 60);
    const Dataset data = standardized_sample(g, 1000, 61);
    const ScoreContext ctx(compute_stats(data));

    Dag before = random_dag(5, 1.5, 62);
    Dag after = before;
    // change node 3's parent set only
    NodeSet old_parents = before.parents(3);
    Dag rebuilt(5);
    for (auto [a, b] : before.edges())
        if (b != 3) rebuilt.add_edge(a, b);
    NodeSet new_parents;
    for (int v = 0; v < 3; ++v)
        if (!contains(descendants(rebuilt, 3), v)) new_parents.insert(v);
    for (int q : new_parents) rebuilt.add_edge(q, 3);
    ASSERT_TRUE(is_acyclic(rebuilt));

    Dag base(5);
    for (auto [a, b] : before.edges())
        if (b != 3) base.add_edge(a, b);
    for (int q : old_parents) base.add_edge(q, 3);

    const double global_delta = ctx.global_bic(rebuilt) - ctx.global_bic(base);
    const double local_delta = ctx.delta_score(3, old_parents, new_parents);
    EXPECT_NEAR(global_delta, local_delta, 1e-9);
}

TEST(Memo, TransparentWithinTolerance) {
    const Dataset data = standardized_sample(random_dag(4, 2.0, 70), 800, 71);
    const SufficientStats stats = compute_stats(data);
    const ScoreContext memoized(stats);
    const NodeSet parents{1, 3};
    const double first = memoized.local_bic(0, parents);
    const double second = memoized.local_bic(0, parents);  // memo hit
    EXPECT_EQ(first, second);
    const ScoreContext fresh(stats);
    EXPECT_NEAR(fresh.local_bic(0, parents), first, 1e-9);
}

TEST(Penalty, EveryEdgeWorsensScoreOnNoise) {
    int checked = 0, worsened = 0;
    for (int seed = 0; seed < 60; ++seed) {
        const Dataset data = standardized_sample(Dag(4), 100, 800 + seed);
        const ScoreContext ctx(compute_stats(data));
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                if (a == b) continue;
                ++checked;
                if (ctx.delta_score(b, {}, {a}) > 0.0) ++worsened;
            }
    }
    EXPECT_GE(static_cast<double>(worsened) / checked, 0.95);
}

TEST(Memo, ConcurrentLookupsAreValueIdentical) {
    const SufficientStats stats = compute_stats(standardized_sample(random_dag(6, 2.0, 96), 400, 97));
    const ScoreContext shared(stats);
    const ScoreContext fresh(stats);

    std::vector<std::thread> workers;
    std::vector<double> sums(4, 0.0);
    for (int w = 0; w < 4; ++w) {
        workers.emplace_back([&, w] {
            std::mt19937_64 rng(w);  // overlapping key streams across threads
            for (int trial = 0; trial < 200; ++trial) {
                const int node = static_cast<int>(uniform_index(rng, 6));
                NodeSet parents;
                for (int v = 0; v < 6; ++v)
                    if (v != node && (rng() & 1)) parents.insert(v);
                sums[w] += shared.local_bic(node, parents);
            }
        });
    }
    for (auto &worker : workers) worker.join();

    for (int w = 0; w < 4; ++w) {
        std::mt19937_64 rng(w);
        double expected = 0.0;
        for (int trial = 0; trial < 200; ++trial) {
            const int node = static_cast<int>(uniform_index(rng, 6));
            NodeSet parents;
            for (int v = 0; v < 6; ++v)
                if (v != node && (rng() & 1)) parents.insert(v);
            expected += fresh.local_bic(node, parents);
        }
        EXPECT_NEAR(sums[w], expected, 1e-9) << "worker " << w;
    }
}

TEST(Trace, LogsComputedScores) {
    const SufficientStats stats = compute_stats(standardized_sample(chain3(), 100, 95));
    ScoreContext ctx(stats);
    std::ostringstream sink;
    ctx.set_trace(&sink);
    ctx.local_bic(2, {0, 1});
    ctx.local_bic(2, {0, 1});  // memo hit, not re-logged
    const std::string log = sink.str();
    EXPECT_EQ(log.rfind("2|0,1|", 0), 0u);
    EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 1);
}

TEST(Penalty, MultiplierScalesPenaltyTerm) {
    const Dataset data = standardized_sample(Dag(2), 500, 90);
    const SufficientStats stats = compute_stats(data);
    const ScoreContext plain(stats, 1.0);
    const ScoreContext doubled(stats, 2.0);
    const double n = static_cast<double>(stats.n);
    EXPECT_NEAR(doubled.local_bic(0, {}) - plain.local_bic(0, {}), 2.0 * std::log(n), 1e-9);
    EXPECT_THROW(ScoreContext(stats, 0.0), std::invalid_argument);
}
