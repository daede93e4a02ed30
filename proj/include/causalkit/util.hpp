#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace causalkit {

inline constexpr const char *kToolName = "causalkit";
inline constexpr const char *kToolVersion = "0.1.0";

/// Dense set of node indices. std::set keeps iteration in ascending order,
/// which every deterministic tie-break in the toolkit relies on.
using NodeSet = std::set<int>;

inline bool contains(const NodeSet &s, int v) { return s.find(v) != s.end(); }

inline bool is_subset(const NodeSet &small, const NodeSet &big) {
    return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

inline bool sets_intersect(const NodeSet &a, const NodeSet &b) {
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) ++ia;
        else if (*ib < *ia) ++ib;
        else return true;
    }
    return false;
}

inline NodeSet set_union(const NodeSet &a, const NodeSet &b) {
    NodeSet out = a;
    out.insert(b.begin(), b.end());
    return out;
}

inline NodeSet set_intersection(const NodeSet &a, const NodeSet &b) {
    NodeSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                          std::inserter(out, out.begin()));
    return out;
}

inline NodeSet set_difference(const NodeSet &a, const NodeSet &b) {
    NodeSet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                        std::inserter(out, out.begin()));
    return out;
}

/// Shortest decimal representation that round-trips the exact double.
inline std::string format_double(double v) {
    std::array<char, 40> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline std::string join(const std::vector<std::string> &parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

/// FNV-1a, used for config hashes in artifact headers.
inline std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = fnv1a(data);
    std::ostringstream os;
    os << std::hex;
    for (int shift = 60; shift >= 0; shift -= 4) os << ((h >> shift) & 0xF);
    return os.str();
}

/// Unbiased uniform draw from [0, bound). Rejection sampling keeps results
/// identical for any conforming mt19937_64.
inline std::uint64_t uniform_index(std::mt19937_64 &rng, std::uint64_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw;
    do {
        draw = rng();
    } while (draw >= limit);
    return draw % bound;
}

/// First k elements of a partial Fisher-Yates pass over `indices`.
inline std::vector<int> sample_without_replacement(std::vector<int> pool, std::size_t k,
                                                   std::mt19937_64 &rng) {
    if (k > pool.size()) k = pool.size();
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + uniform_index(rng, pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

}  // namespace causalkit
