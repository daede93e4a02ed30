#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "causalkit/dataset.hpp"
#include "causalkit/util.hpp"

namespace causalkit {

enum class CorrelationMethod { pearson, spearman };

inline std::string correlation_method_name(CorrelationMethod m) {
    return m == CorrelationMethod::pearson ? "pearson" : "spearman";
}

inline CorrelationMethod parse_correlation_method(const std::string &s) {
    if (s == "pearson") return CorrelationMethod::pearson;
    if (s == "spearman") return CorrelationMethod::spearman;
    throw std::invalid_argument("unknown correlation method '" + s + "'");
}

struct StrongPair {
    int i = 0;
    int j = 0;
    double r = 0.0;
};

struct CorrelationScreen {
    CorrelationMethod method = CorrelationMethod::pearson;
    double threshold = 0.5;
    std::vector<std::vector<double>> matrix;  // p x p, symmetric, unit diagonal
    std::vector<StrongPair> strong_pairs;     // |r| > threshold, sorted by |r| desc
    std::vector<int> zero_variance;           // columns with no variation, r forced to 0
};

namespace detail {

/// Midranks: ties get the average of the ranks they span.
inline std::vector<double> midranks(const std::vector<double> &column) {
    const std::size_t n = column.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return column[a] < column[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && column[order[j + 1]] == column[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(const std::vector<double> &a, const std::vector<double> &b) {
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        ma += a[r];
        mb += b[r];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const double da = a[r] - ma;
        const double db = b[r] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

/// Regularized incomplete beta I_x(a, b) via the Lentz continued fraction.
inline double incomplete_beta_cf(double a, double b, double x) {
    constexpr int kMaxIterations = 300;
    constexpr double kEps = 3.0e-14;
    constexpr double kTiny = 1.0e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * incomplete_beta_cf(a, b, x) / a;
    return 1.0 - front * incomplete_beta_cf(b, a, 1.0 - x) / b;
}

}  // namespace detail

/// Two-sided p-value of a t statistic with df degrees of freedom.
inline double student_t_pvalue(double t, double df) {
    if (df <= 0.0) throw std::invalid_argument("student_t_pvalue: df must be positive");
    if (!std::isfinite(t)) return 0.0;
    return detail::incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

/// Pairwise correlation matrix plus the pairs above the threshold.
/// Zero-variance columns get coefficient 0 against everything and are
/// listed in zero_variance; the diagonal is 1 by convention.
inline CorrelationScreen correlation_screen(const Dataset &data, CorrelationMethod method,
                                            double threshold) {
    if (data.has_missing())
        throw std::invalid_argument("correlation_screen: dataset has missing values");
    for (const auto &spec : data.specs)
        if (spec.kind != VariableKind::likert7 && spec.kind != VariableKind::numeric)
            throw std::invalid_argument("correlation_screen: column '" + spec.name +
                                        "' is not likert7 or numeric");

    CorrelationScreen screen;
    screen.method = method;
    screen.threshold = threshold;

    std::vector<std::vector<double>> columns(data.p);
    for (int v = 0; v < data.p; ++v)
        columns[v] = method == CorrelationMethod::spearman ? detail::midranks(data.values[v])
                                                           : data.values[v];

    for (int v = 0; v < data.p; ++v) {
        const double first = columns[v].empty() ? 0.0 : columns[v][0];
        const bool constant =
                std::all_of(columns[v].begin(), columns[v].end(),
                            [&](double x) { return x == first; });
        if (constant) screen.zero_variance.push_back(v);
    }

    screen.matrix.assign(data.p, std::vector<double>(data.p, 0.0));
    for (int i = 0; i < data.p; ++i) {
        screen.matrix[i][i] = 1.0;
        for (int j = i + 1; j < data.p; ++j) {
            const double r = detail::pearson(columns[i], columns[j]);
            screen.matrix[i][j] = r;
            screen.matrix[j][i] = r;
            if (std::abs(r) > threshold) screen.strong_pairs.push_back({i, j, r});
        }
    }
    std::stable_sort(screen.strong_pairs.begin(), screen.strong_pairs.end(),
                     [](const StrongPair &a, const StrongPair &b) {
                         if (std::abs(a.r) != std::abs(b.r)) return std::abs(a.r) > std::abs(b.r);
                         if (a.i != b.i) return a.i < b.i;
                         return a.j < b.j;
                     });
    return screen;
}

enum class Stars { none, one, two, three };

inline std::string stars_text(Stars s) {
    switch (s) {
        case Stars::none: return "";
        case Stars::one: return "*";
        case Stars::two: return "**";
        case Stars::three: return "***";
    }
    return "";
}

inline Stars stars_for_pvalue(double p) {
    if (p < 0.001) return Stars::three;
    if (p < 0.01) return Stars::two;
    if (p < 0.05) return Stars::one;
    return Stars::none;
}

struct NeutralTest {
    int variable = -1;
    double effect_size = 0.0;  // mean - neutral point, response units
    double t_statistic = 0.0;
    double p_value = 1.0;
    Stars stars = Stars::none;
    bool degenerate = false;  // zero variance away from the neutral point
};

/// One-sample two-sided t-test of the column mean against the neutral point.
inline NeutralTest neutral_test(const Dataset &data, int variable, double neutral = 4.0) {
    if (variable < 0 || variable >= data.p)
        throw std::out_of_range("neutral_test: variable out of range");
    if (data.specs[variable].kind != VariableKind::likert7)
        throw std::invalid_argument("neutral_test: column '" + data.name(variable) +
                                    "' is not a likert7 variable");
    if (data.n < 3) throw std::invalid_argument("neutral_test: need at least 3 rows");
    if (data.has_missing())
        throw std::invalid_argument("neutral_test: dataset has missing values");

    const std::vector<double> &column = data.values[variable];
    const double n = static_cast<double>(data.n);
    double mean = 0.0;
    for (double x : column) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : column) ss += (x - mean) * (x - mean);
    const double sample_var = ss / (n - 1.0);

    NeutralTest test;
    test.variable = variable;
    test.effect_size = mean - neutral;
    if (sample_var <= 0.0) {
        if (mean == neutral) {
            test.t_statistic = 0.0;
            test.p_value = 1.0;
        } else {
            test.t_statistic = test.effect_size > 0 ? std::numeric_limits<double>::infinity()
                                                    : -std::numeric_limits<double>::infinity();
            test.p_value = 0.0;
            test.degenerate = true;
        }
    } else {
        test.t_statistic = test.effect_size / std::sqrt(sample_var / n);
        test.p_value = student_t_pvalue(test.t_statistic, n - 1.0);
    }
    test.stars = stars_for_pvalue(test.p_value);
    return test;
}

/// Neutral tests for every likert7 column, optionally Bonferroni-corrected.
inline std::vector<NeutralTest> neutral_test_all(const Dataset &data, double neutral = 4.0,
                                                 bool bonferroni = false) {
    std::vector<int> targets;
    for (int v = 0; v < data.p; ++v)
        if (data.specs[v].kind == VariableKind::likert7) targets.push_back(v);
    std::vector<NeutralTest> tests;
    tests.reserve(targets.size());
    for (int v : targets) {
        NeutralTest t = neutral_test(data, v, neutral);
        if (bonferroni) {
            t.p_value = std::min(1.0, t.p_value * static_cast<double>(targets.size()));
            t.stars = stars_for_pvalue(t.p_value);
        }
        tests.push_back(t);
    }
    return tests;
}

}  // namespace causalkit
