#pragma once

#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "causalkit/dataset.hpp"
#include "causalkit/graph.hpp"
#include "causalkit/score.hpp"
#include "causalkit/util.hpp"

namespace causalkit {

enum class SearchPhase { forward, backward, done };

inline std::string phase_name(SearchPhase p) {
    switch (p) {
        case SearchPhase::forward: return "forward";
        case SearchPhase::backward: return "backward";
        case SearchPhase::done: return "done";
    }
    return "unknown";
}

enum class MoveKind { insert, remove };

/// One equivalence-class operator. For inserts `subset` is the T-set of
/// undirected neighbors of y to orient into y; for deletes it is the H-set
/// to sever from the retained clique.
struct Move {
    MoveKind kind = MoveKind::insert;
    int x = -1;
    int y = -1;
    NodeSet subset;
    double delta = 0.0;
};

struct SearchState {
    Pdag graph;
    double score = 0.0;
    int iteration = 0;
    SearchPhase phase = SearchPhase::forward;
};

struct TraceEntry {
    SearchPhase phase = SearchPhase::forward;
    MoveKind kind = MoveKind::insert;
    int x = -1;
    int y = -1;
    NodeSet subset;
    double delta = 0.0;
    double cumulative_score = 0.0;
};

struct SearchTrace {
    std::vector<TraceEntry> entries;
    double initial_score = 0.0;
    double final_score = 0.0;
    bool truncated = false;
    int subset_cap_hits = 0;
};

struct GesOptions {
    double epsilon = 1e-9;        // minimum absolute improvement per move
    long max_iterations = 0;      // 0 means 10 * p^2
    int subset_cap = 12;          // exhaustive T/H enumeration up to this size
    double penalty_multiplier = 1.0;
};

namespace detail {

/// True if every semi-directed path (directed edges forward, undirected
/// either way) from src to dst passes through `blocked`.
inline bool semi_directed_paths_blocked(const Pdag &g, int src, int dst,
                                        const NodeSet &blocked) {
    std::vector<bool> seen(g.node_count(), false);
    std::deque<int> queue{src};
    seen[src] = true;
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        auto push = [&](int w) {
            if (seen[w] || contains(blocked, w)) return false;
            if (w == dst) return true;
            seen[w] = true;
            queue.push_back(w);
            return false;
        };
        for (int w : g.children(v))
            if (push(w)) return false;
        for (int w : g.neighbors(v))
            if (push(w)) return false;
    }
    return true;
}

/*
 * Insert(x, y, T) on a completed PDAG is valid iff:
 *   1. x and y are nonadjacent, T is a subset of Ne(y) \ Ad(x)  [by construction]
 *   2. [Ne(y) ∩ Ad(x)] ∪ T is a clique
 *   3. [Ne(y) ∩ Ad(x)] ∪ T blocks every semi-directed path from y to x
 */
inline bool insert_valid(const Pdag &g, int x, int y, const NodeSet &na_union_t) {
    if (!g.is_clique(na_union_t)) return false;
    return semi_directed_paths_blocked(g, y, x, na_union_t);
}

/*
 * Delete(x, y, H) on a completed PDAG (x -> y or x - y) is valid iff
 * [Ne(y) ∩ Ad(x)] \ H is a clique.
 */
inline bool delete_valid(const Pdag &g, const NodeSet &retained) {
    return g.is_clique(retained);
}

inline double insert_delta(const ScoreContext &ctx, const Pdag &g, int x, int y,
                           const NodeSet &na_union_t) {
    NodeSet base = set_union(g.parents(y), na_union_t);
    const double without = ctx.local_bic(y, base);
    base.insert(x);
    return ctx.local_bic(y, base) - without;
}

inline double delete_delta(const ScoreContext &ctx, const Pdag &g, int x, int y,
                           const NodeSet &retained) {
    NodeSet base = set_union(g.parents(y), retained);
    base.erase(x);
    const double without = ctx.local_bic(y, base);
    base.insert(x);
    return without - ctx.local_bic(y, base);
}

inline bool subset_less(const NodeSet &a, const NodeSet &b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

/// Deterministic move ordering: better delta first, ties by
/// (x, y, subset size, lexicographic subset).
inline bool move_less(const Move &a, const Move &b) {
    if (a.delta != b.delta) return a.delta < b.delta;
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return subset_less(a.subset, b.subset);
}

}  // namespace detail

/// All valid Insert(x, y, T) operators for the current state. T-sets are
/// enumerated exhaustively up to the subset cap; above it, grown greedily
/// one element at a time (cap hits are counted in the trace).
inline std::vector<Move> enumerate_insertions(const SearchState &state, const ScoreContext &ctx,
                                              const GesOptions &options = {},
                                              int *cap_hits = nullptr) {
    if (state.phase != SearchPhase::forward)
        throw std::invalid_argument("enumerate_insertions: state is not in the forward phase");
    const Pdag &g = state.graph;
    const int p = g.node_count();
    std::vector<Move> moves;

    for (int y = 0; y < p; ++y) {
        const NodeSet &ne_y = g.neighbors(y);
        for (int x = 0; x < p; ++x) {
            if (x == y || g.is_adjacent(x, y)) continue;
            const NodeSet ad_x = g.adjacent(x);
            const NodeSet na = set_intersection(ne_y, ad_x);
            const NodeSet t_candidates = set_difference(ne_y, ad_x);
            const std::vector<int> pool(t_candidates.begin(), t_candidates.end());

            auto try_subset = [&](const NodeSet &t) -> std::optional<double> {
                const NodeSet na_union_t = set_union(na, t);
                if (!detail::insert_valid(g, x, y, na_union_t)) return std::nullopt;
                return detail::insert_delta(ctx, g, x, y, na_union_t);
            };

            if (static_cast<int>(pool.size()) <= options.subset_cap) {
                const std::uint64_t limit = 1ULL << pool.size();
                for (std::uint64_t mask = 0; mask < limit; ++mask) {
                    NodeSet t;
                    for (std::size_t i = 0; i < pool.size(); ++i)
                        if (mask & (1ULL << i)) t.insert(pool[i]);
                    if (auto delta = try_subset(t))
                        moves.push_back({MoveKind::insert, x, y, t, *delta});
                }
            } else {
                if (cap_hits) ++(*cap_hits);
                NodeSet t;
                auto current = try_subset(t);
                if (current) moves.push_back({MoveKind::insert, x, y, t, *current});
                bool grew = true;
                while (grew) {
                    grew = false;
                    int best_element = -1;
                    double best_delta = current ? *current : 0.0;
                    for (int candidate : pool) {
                        if (contains(t, candidate)) continue;
                        NodeSet grown = t;
                        grown.insert(candidate);
                        if (auto delta = try_subset(grown)) {
                            if (best_element < 0 || *delta < best_delta) {
                                best_element = candidate;
                                best_delta = *delta;
                            }
                        }
                    }
                    if (best_element >= 0 && (!current || best_delta < *current)) {
                        t.insert(best_element);
                        current = best_delta;
                        moves.push_back({MoveKind::insert, x, y, t, best_delta});
                        grew = true;
                    }
                }
            }
        }
    }
    return moves;
}

/// All valid Delete(x, y, H) operators for adjacent pairs (x -> y or x - y).
inline std::vector<Move> enumerate_deletions(const SearchState &state, const ScoreContext &ctx,
                                             const GesOptions &options = {},
                                             int *cap_hits = nullptr) {
    if (state.phase != SearchPhase::backward)
        throw std::invalid_argument("enumerate_deletions: state is not in the backward phase");
    const Pdag &g = state.graph;
    const int p = g.node_count();
    std::vector<Move> moves;

    for (int y = 0; y < p; ++y) {
        for (int x = 0; x < p; ++x) {
            if (x == y) continue;
            if (!g.has_directed_edge(x, y) && !g.has_undirected_edge(x, y)) continue;
            const NodeSet na = set_intersection(g.neighbors(y), g.adjacent(x));
            const std::vector<int> pool(na.begin(), na.end());

            auto push_if_valid = [&](const NodeSet &h) {
                const NodeSet retained = set_difference(na, h);
                if (!detail::delete_valid(g, retained)) return false;
                const double delta = detail::delete_delta(ctx, g, x, y, retained);
                moves.push_back({MoveKind::remove, x, y, h, delta});
                return true;
            };

            if (static_cast<int>(pool.size()) <= options.subset_cap) {
                const std::uint64_t limit = 1ULL << pool.size();
                for (std::uint64_t mask = 0; mask < limit; ++mask) {
                    NodeSet h;
                    for (std::size_t i = 0; i < pool.size(); ++i)
                        if (mask & (1ULL << i)) h.insert(pool[i]);
                    push_if_valid(h);
                }
            } else {
                // H = NA is always valid; shrink greedily while the retained
                // set stays a clique and the delta improves.
                if (cap_hits) ++(*cap_hits);
                NodeSet h = na;
                push_if_valid(h);
                double current = moves.back().delta;
                bool shrank = true;
                while (shrank && !h.empty()) {
                    shrank = false;
                    int best_element = -1;
                    double best_delta = current;
                    for (int candidate : h) {
                        NodeSet smaller = h;
                        smaller.erase(candidate);
                        const NodeSet retained = set_difference(na, smaller);
                        if (!detail::delete_valid(g, retained)) continue;
                        const double delta = detail::delete_delta(ctx, g, x, y, retained);
                        if (best_element < 0 || delta < best_delta) {
                            best_element = candidate;
                            best_delta = delta;
                        }
                    }
                    if (best_element >= 0 && best_delta < current) {
                        h.erase(best_element);
                        current = best_delta;
                        moves.push_back({MoveKind::remove, x, y, h, best_delta});
                        shrank = true;
                    }
                }
            }
        }
    }
    return moves;
}

/// Applies an operator's orientation edits, then restores the completed
/// PDAG of the new equivalence class (consistent extension + recompletion).
inline SearchState apply_move(const SearchState &state, const Move &m) {
    Pdag edited = state.graph;
    if (m.kind == MoveKind::insert) {
        edited.add_directed_edge(m.x, m.y);
        for (int t : m.subset) edited.orient(t, m.y);
    } else {
        if (edited.has_directed_edge(m.x, m.y)) edited.remove_directed_edge(m.x, m.y);
        else edited.remove_undirected_edge(m.x, m.y);
        for (int h : m.subset) {
            edited.orient(m.y, h);
            if (edited.has_undirected_edge(m.x, h)) edited.orient(m.x, h);
        }
    }

    SearchState next = state;
    try {
        next.graph = cpdag_from_dag(consistent_extension(edited));
    } catch (const NoExtensionError &) {
        throw std::logic_error("apply_move: internal invariant violation, "
                               "edited state admits no consistent extension");
    }
    next.score = state.score + m.delta;
    next.iteration = state.iteration + 1;
    return next;
}

inline std::optional<Move> best_improving_move(const std::vector<Move> &moves, double epsilon) {
    std::optional<Move> best;
    for (const Move &m : moves) {
        if (m.delta >= -epsilon) continue;
        if (!best || detail::move_less(m, *best)) best = m;
    }
    return best;
}

struct GesResult {
    Pdag graph;
    SearchTrace trace;
    GesResult() : graph(0) {}
};

/// Two-phase greedy equivalence search from the empty graph: forward
/// insertions to a fixed point, then backward deletions to a fixed point.
inline GesResult run_ges(const Dataset &data, const GesOptions &options = {}) {
    if (data.p < 2) throw std::invalid_argument("run_ges: need at least 2 variables");
    if (data.has_missing()) throw std::invalid_argument("run_ges: dataset has missing values");
    if (!data.standardized) throw std::invalid_argument("run_ges: dataset must be standardized");

    const ScoreContext ctx(compute_stats(data), options.penalty_multiplier);
    const long cap = options.max_iterations > 0
                             ? options.max_iterations
                             : 10L * static_cast<long>(data.p) * data.p;

    SearchState state{Pdag(data.p), 0.0, 0, SearchPhase::forward};
    for (int v = 0; v < data.p; ++v) state.score += ctx.local_bic(v, {});

    GesResult result;
    result.trace.initial_score = state.score;

    while (state.phase != SearchPhase::done) {
        if (state.iteration >= cap) {
            result.trace.truncated = true;
            break;
        }
        const std::vector<Move> moves =
                state.phase == SearchPhase::forward
                        ? enumerate_insertions(state, ctx, options, &result.trace.subset_cap_hits)
                        : enumerate_deletions(state, ctx, options, &result.trace.subset_cap_hits);
        const std::optional<Move> best = best_improving_move(moves, options.epsilon);
        if (!best) {
            state.phase = state.phase == SearchPhase::forward ? SearchPhase::backward
                                                              : SearchPhase::done;
            continue;
        }
        const SearchPhase move_phase = state.phase;
        state = apply_move(state, *best);
        state.phase = move_phase;
        result.trace.entries.push_back({move_phase, best->kind, best->x, best->y, best->subset,
                                        best->delta, state.score});
    }

    result.graph = state.graph;
    result.trace.final_score = state.score;
    return result;
}

/// Trace lines: "phase|move kind|x name|y name|subset names|delta|cumulative score".
inline std::vector<std::string> serialize_trace(const SearchTrace &trace,
                                                const std::vector<std::string> &names) {
    std::vector<std::string> lines;
    lines.reserve(trace.entries.size());
    for (const TraceEntry &e : trace.entries) {
        std::string subset;
        for (int v : e.subset) {
            if (!subset.empty()) subset += ",";
            subset += names.at(v);
        }
        lines.push_back(phase_name(e.phase) + "|" +
                        (e.kind == MoveKind::insert ? "insert" : "delete") + "|" + names.at(e.x) +
                        "|" + names.at(e.y) + "|" + subset + "|" + format_double(e.delta) + "|" +
                        format_double(e.cumulative_score));
    }
    return lines;
}

}  // namespace causalkit
