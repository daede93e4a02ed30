#pragma once

#include <deque>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "causalkit/util.hpp"

namespace causalkit {

/// Thrown by meek_close when a forced orientation would create a directed
/// cycle or a new v-structure.
struct InconsistentPdagError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown by consistent_extension when no acyclic, v-structure-preserving
/// orientation of the undirected edges exists.
struct NoExtensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Dag {
public:
    explicit Dag(int node_count) : parents_(node_count), children_(node_count) {
        if (node_count < 0) throw std::invalid_argument("Dag: negative node count");
    }

    int node_count() const { return static_cast<int>(parents_.size()); }

    void add_edge(int parent, int child) {
        check_node(parent);
        check_node(child);
        if (parent == child) throw std::invalid_argument("Dag: self-loop rejected");
        parents_[child].insert(parent);
        children_[parent].insert(child);
    }

    bool has_edge(int parent, int child) const {
        check_node(parent);
        check_node(child);
        return contains(children_[parent], child);
    }

    bool adjacent(int a, int b) const { return has_edge(a, b) || has_edge(b, a); }

    const NodeSet &parents(int v) const {
        check_node(v);
        return parents_[v];
    }

    const NodeSet &children(int v) const {
        check_node(v);
        return children_[v];
    }

    int edge_count() const {
        int total = 0;
        for (const auto &c : children_) total += static_cast<int>(c.size());
        return total;
    }

    /// Directed edges as (parent, child) pairs in ascending order.
    std::vector<std::pair<int, int>> edges() const {
        std::vector<std::pair<int, int>> out;
        for (int v = 0; v < node_count(); ++v)
            for (int c : children_[v]) out.emplace_back(v, c);
        return out;
    }

    bool operator==(const Dag &other) const = default;

private:
    void check_node(int v) const {
        if (v < 0 || v >= node_count()) throw std::out_of_range("Dag: node out of range");
    }

    std::vector<NodeSet> parents_;
    std::vector<NodeSet> children_;
};

/// Kahn's algorithm, always removing the smallest-index source first.
/// Throws if the graph has a directed cycle.
inline std::vector<int> topological_order(const Dag &g) {
    const int p = g.node_count();
    std::vector<int> indegree(p);
    for (int v = 0; v < p; ++v) indegree[v] = static_cast<int>(g.parents(v).size());
    std::vector<int> order;
    order.reserve(p);
    NodeSet ready;
    for (int v = 0; v < p; ++v)
        if (indegree[v] == 0) ready.insert(v);
    while (!ready.empty()) {
        const int v = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(v);
        for (int c : g.children(v))
            if (--indegree[c] == 0) ready.insert(c);
    }
    if (static_cast<int>(order.size()) != p)
        throw std::invalid_argument("topological_order: graph has a directed cycle");
    return order;
}

inline bool is_acyclic(const Dag &g) {
    try {
        topological_order(g);
        return true;
    } catch (const std::invalid_argument &) {
        return false;
    }
}

namespace detail {

template <typename NextSets>
NodeSet reach(int start, const NextSets &next) {
    NodeSet seen;
    std::deque<int> queue{start};
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        for (int w : next(v)) {
            if (seen.insert(w).second) queue.push_back(w);
        }
    }
    seen.erase(start);
    return seen;
}

}  // namespace detail

/// Strict ancestors of x (x itself excluded).
inline NodeSet ancestors(const Dag &g, int x) {
    if (x < 0 || x >= g.node_count()) throw std::out_of_range("ancestors: node out of range");
    return detail::reach(x, [&](int v) -> const NodeSet & { return g.parents(v); });
}

/// Strict descendants of x (x itself excluded).
inline NodeSet descendants(const Dag &g, int x) {
    if (x < 0 || x >= g.node_count()) throw std::out_of_range("descendants: node out of range");
    return detail::reach(x, [&](int v) -> const NodeSet & { return g.children(v); });
}

/// Reachability formulation of d-separation. A trail is traversed as
/// (node, arrival direction) states; colliders pass only when the collider
/// or one of its descendants is conditioned on.
inline bool d_separated(const Dag &g, const NodeSet &x, const NodeSet &y, const NodeSet &z) {
    if (sets_intersect(x, y) || sets_intersect(x, z) || sets_intersect(y, z))
        throw std::invalid_argument("d_separated: query sets must be pairwise disjoint");
    const int p = g.node_count();
    for (const NodeSet *s : {&x, &y, &z})
        for (int v : *s)
            if (v < 0 || v >= p) throw std::out_of_range("d_separated: node out of range");

    // Z together with its ancestors: the nodes that open colliders.
    NodeSet opens = z;
    for (int v : z) {
        NodeSet anc = ancestors(g, v);
        opens.insert(anc.begin(), anc.end());
    }

    // Direction encodes how the trail arrives: 0 = from a child (moving up),
    // 1 = from a parent (moving down).
    std::vector<std::array<bool, 2>> visited(p, {false, false});
    std::deque<std::pair<int, int>> queue;
    for (int s : x) queue.emplace_back(s, 0);

    while (!queue.empty()) {
        auto [v, dir] = queue.front();
        queue.pop_front();
        if (visited[v][dir]) continue;
        visited[v][dir] = true;
        if (!contains(z, v) && contains(y, v)) return false;

        if (dir == 0 && !contains(z, v)) {
            for (int parent : g.parents(v)) queue.emplace_back(parent, 0);
            for (int child : g.children(v)) queue.emplace_back(child, 1);
        } else if (dir == 1) {
            if (!contains(z, v))
                for (int child : g.children(v)) queue.emplace_back(child, 1);
            if (contains(opens, v))
                for (int parent : g.parents(v)) queue.emplace_back(parent, 0);
        }
    }
    return true;
}

/// Partially directed graph over dense node indices. An adjacency is either
/// directed or undirected, never both.
class Pdag {
public:
    explicit Pdag(int node_count)
        : parents_(node_count), children_(node_count), neighbors_(node_count) {
        if (node_count < 0) throw std::invalid_argument("Pdag: negative node count");
    }

    static Pdag from_dag(const Dag &g) {
        Pdag out(g.node_count());
        for (auto [a, b] : g.edges()) out.add_directed_edge(a, b);
        return out;
    }

    int node_count() const { return static_cast<int>(parents_.size()); }

    void add_directed_edge(int x, int y) {
        check_new_adjacency(x, y);
        children_[x].insert(y);
        parents_[y].insert(x);
    }

    void add_undirected_edge(int x, int y) {
        check_new_adjacency(x, y);
        neighbors_[x].insert(y);
        neighbors_[y].insert(x);
    }

    void remove_directed_edge(int x, int y) {
        if (!has_directed_edge(x, y))
            throw std::invalid_argument("Pdag: directed edge not present");
        children_[x].erase(y);
        parents_[y].erase(x);
    }

    void remove_undirected_edge(int x, int y) {
        if (!has_undirected_edge(x, y))
            throw std::invalid_argument("Pdag: undirected edge not present");
        neighbors_[x].erase(y);
        neighbors_[y].erase(x);
    }

    void orient(int x, int y) {
        remove_undirected_edge(x, y);
        add_directed_edge(x, y);
    }

    bool has_directed_edge(int x, int y) const {
        check_node(x);
        check_node(y);
        return contains(children_[x], y);
    }

    bool has_undirected_edge(int x, int y) const {
        check_node(x);
        check_node(y);
        return contains(neighbors_[x], y);
    }

    bool is_adjacent(int x, int y) const {
        return has_directed_edge(x, y) || has_directed_edge(y, x) || has_undirected_edge(x, y);
    }

    const NodeSet &parents(int v) const {
        check_node(v);
        return parents_[v];
    }

    const NodeSet &children(int v) const {
        check_node(v);
        return children_[v];
    }

    const NodeSet &neighbors(int v) const {
        check_node(v);
        return neighbors_[v];
    }

    NodeSet adjacent(int v) const {
        check_node(v);
        NodeSet out = neighbors_[v];
        out.insert(parents_[v].begin(), parents_[v].end());
        out.insert(children_[v].begin(), children_[v].end());
        return out;
    }

    int degree(int v) const {
        check_node(v);
        return static_cast<int>(parents_[v].size() + children_[v].size() + neighbors_[v].size());
    }

    bool is_clique(const NodeSet &nodes) const {
        for (int a : nodes)
            for (int b : nodes)
                if (a < b && !is_adjacent(a, b)) return false;
        return true;
    }

    std::vector<std::pair<int, int>> directed_edges() const {
        std::vector<std::pair<int, int>> out;
        for (int v = 0; v < node_count(); ++v)
            for (int c : children_[v]) out.emplace_back(v, c);
        return out;
    }

    /// Undirected edges as (min, max) pairs.
    std::vector<std::pair<int, int>> undirected_edges() const {
        std::vector<std::pair<int, int>> out;
        for (int v = 0; v < node_count(); ++v)
            for (int w : neighbors_[v])
                if (v < w) out.emplace_back(v, w);
        return out;
    }

    int directed_edge_count() const {
        int total = 0;
        for (const auto &c : children_) total += static_cast<int>(c.size());
        return total;
    }

    int undirected_edge_count() const {
        int total = 0;
        for (const auto &n : neighbors_) total += static_cast<int>(n.size());
        return total / 2;
    }

    int edge_count() const { return directed_edge_count() + undirected_edge_count(); }

    bool operator==(const Pdag &other) const = default;

private:
    void check_node(int v) const {
        if (v < 0 || v >= node_count()) throw std::out_of_range("Pdag: node out of range");
    }

    void check_new_adjacency(int x, int y) {
        check_node(x);
        check_node(y);
        if (x == y) throw std::invalid_argument("Pdag: self-loop rejected");
        if (is_adjacent(x, y)) throw std::invalid_argument("Pdag: pair already adjacent");
    }

    std::vector<NodeSet> parents_;
    std::vector<NodeSet> children_;
    std::vector<NodeSet> neighbors_;
};

namespace detail {

/// True if directed edges alone give a path src -> ... -> dst.
inline bool directed_path_exists(const Pdag &g, int src, int dst) {
    if (src == dst) return true;
    std::vector<bool> seen(g.node_count(), false);
    std::deque<int> queue{src};
    seen[src] = true;
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        for (int c : g.children(v)) {
            if (c == dst) return true;
            if (!seen[c]) {
                seen[c] = true;
                queue.push_back(c);
            }
        }
    }
    return false;
}

/*
 * The four orientation-propagation rules. Each decides whether the
 * undirected edge x - y is forced to x -> y.
 *
 * Rule 1: z -> x - y with z, y nonadjacent        => x -> y
 * Rule 2: x -> z -> y with x - y                  => x -> y
 * Rule 3: x - z -> y, x - w -> y, z, w nonadjacent => x -> y
 * Rule 4: x - w, w -> z -> y with w, y nonadjacent => x -> y
 */
inline bool meek_rule_1(const Pdag &g, int x, int y) {
    for (int z : g.parents(x))
        if (!g.is_adjacent(z, y)) return true;
    return false;
}

inline bool meek_rule_2(const Pdag &g, int x, int y) {
    for (int z : g.children(x))
        if (g.has_directed_edge(z, y)) return true;
    return false;
}

inline bool meek_rule_3(const Pdag &g, int x, int y) {
    const NodeSet candidates = set_intersection(g.neighbors(x), g.parents(y));
    for (int z : candidates)
        for (int w : candidates)
            if (z < w && !g.is_adjacent(z, w)) return true;
    return false;
}

inline bool meek_rule_4(const Pdag &g, int x, int y) {
    for (int w : g.neighbors(x)) {
        if (w == y || g.is_adjacent(w, y)) continue;
        for (int z : g.children(w))
            if (g.has_directed_edge(z, y)) return true;
    }
    return false;
}

inline bool meek_forces(const Pdag &g, int x, int y) {
    return meek_rule_1(g, x, y) || meek_rule_2(g, x, y) || meek_rule_3(g, x, y) ||
           meek_rule_4(g, x, y);
}

inline void orient_checked(Pdag &g, int x, int y) {
    if (directed_path_exists(g, y, x))
        throw InconsistentPdagError("meek_close: forced orientation would create a directed cycle");
    for (int z : g.parents(y))
        if (z != x && !g.is_adjacent(z, x))
            throw InconsistentPdagError("meek_close: forced orientation would create a new v-structure");
    g.orient(x, y);
}

}  // namespace detail

/// Propagates the four orientation rules to a fixed point. Existing
/// orientations are never removed; inconsistent inputs raise
/// InconsistentPdagError.
inline Pdag meek_close(const Pdag &g) {
    Pdag out = g;
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto [a, b] : out.undirected_edges()) {
            if (detail::meek_forces(out, a, b)) {
                detail::orient_checked(out, a, b);
                changed = true;
            } else if (detail::meek_forces(out, b, a)) {
                detail::orient_checked(out, b, a);
                changed = true;
            }
        }
    }
    return out;
}

/// Completed PDAG of g's Markov equivalence class: skeleton plus v-structure
/// orientations, closed under the orientation rules.
inline Pdag cpdag_from_dag(const Dag &g) {
    if (!is_acyclic(g)) throw std::invalid_argument("cpdag_from_dag: input graph is cyclic");
    const int p = g.node_count();

    // Collect edges compelled by v-structures: a -> m <- b with a, b nonadjacent.
    std::vector<std::pair<int, int>> compelled;
    for (int m = 0; m < p; ++m) {
        const NodeSet &ps = g.parents(m);
        for (int a : ps)
            for (int b : ps)
                if (a < b && !g.adjacent(a, b)) {
                    compelled.emplace_back(a, m);
                    compelled.emplace_back(b, m);
                }
    }

    Pdag pattern(p);
    for (auto [a, b] : compelled)
        if (!pattern.has_directed_edge(a, b)) pattern.add_directed_edge(a, b);
    for (auto [a, b] : g.edges())
        if (!pattern.is_adjacent(a, b)) pattern.add_undirected_edge(a, b);

    return meek_close(pattern);
}

/// One DAG from the PDAG's extension space (same skeleton, directed edges
/// kept, no new v-structures). Deterministic: the highest-index eligible
/// sink is peeled first, so free edges orient from lower to higher index.
inline Dag consistent_extension(const Pdag &g) {
    const int p = g.node_count();
    Pdag work = g;
    Dag result(p);
    for (auto [a, b] : g.directed_edges()) result.add_edge(a, b);

    std::vector<bool> alive(p, true);
    for (int peeled = 0; peeled < p; ++peeled) {
        int sink = -1;
        for (int v = p - 1; v >= 0; --v) {
            if (!alive[v] || !work.children(v).empty()) continue;
            const NodeSet adj = work.adjacent(v);
            bool ok = true;
            for (int nb : work.neighbors(v)) {
                for (int other : adj) {
                    if (other != nb && !work.is_adjacent(nb, other)) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) break;
            }
            if (ok) {
                sink = v;
                break;
            }
        }
        if (sink < 0)
            throw NoExtensionError("consistent_extension: no acyclic extension without new v-structures");

        const NodeSet nbs = work.neighbors(sink);
        for (int nb : nbs) {
            result.add_edge(nb, sink);
            work.remove_undirected_edge(nb, sink);
        }
        const NodeSet ps = work.parents(sink);
        for (int parent : ps) work.remove_directed_edge(parent, sink);
        alive[sink] = false;
    }
    return result;
}

/// DOT rendering. Undirected edges carry dir=none so renderers draw them
/// without arrowheads. Output is byte-deterministic.
inline std::string to_dot(const Pdag &g, const std::vector<std::string> &names) {
    if (static_cast<int>(names.size()) != g.node_count())
        throw std::invalid_argument("to_dot: name count does not match node count");
    auto escape = [](const std::string &s) {
        std::string out;
        for (char c : s) {
            if (c == '"' || c == '\\') out.push_back('\\');
            out.push_back(c);
        }
        return out;
    };
    std::string dot = "digraph causal_graph {\n";
    dot += "  node [shape=box];\n";
    for (int v = 0; v < g.node_count(); ++v)
        dot += "  n" + std::to_string(v) + " [label=\"" + escape(names[v]) + "\"];\n";
    for (auto [a, b] : g.directed_edges())
        dot += "  n" + std::to_string(a) + " -> n" + std::to_string(b) + ";\n";
    for (auto [a, b] : g.undirected_edges())
        dot += "  n" + std::to_string(a) + " -> n" + std::to_string(b) + " [dir=none];\n";
    dot += "}\n";
    return dot;
}

}  // namespace causalkit
