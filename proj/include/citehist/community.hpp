#pragma once

// Modularity and Louvain community detection on weighted undirected graphs.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "citehist/citegraph.hpp"
#include "citehist/error.hpp"

namespace citehist {

struct WeightedEdge {
    std::size_t a = 0;
    std::size_t b = 0;
    double weight = 1.0;
};

/// Undirected weighted graph; parallel edges merge by summing, self-loops allowed.
class UndirectedGraph {
public:
    UndirectedGraph() = default;

    UndirectedGraph(std::size_t n, std::span<const WeightedEdge> edges) : adj_(n), self_(n, 0.0) {
        std::map<std::pair<std::size_t, std::size_t>, double> merged;
        for (const auto& e : edges) {
            if (e.a >= n || e.b >= n) continue;
            if (e.a == e.b)
                self_[e.a] += e.weight;
            else
                merged[{std::min(e.a, e.b), std::max(e.a, e.b)}] += e.weight;
        }
        for (auto& [k, w] : merged) {
            adj_[k.first].emplace_back(k.second, w);
            adj_[k.second].emplace_back(k.first, w);
        }
        degree_.assign(n, 0.0);
        for (std::size_t v = 0; v < n; ++v) {
            for (auto& [u, w] : adj_[v]) degree_[v] += w;
            degree_[v] += 2.0 * self_[v];
            total_ += self_[v];
        }
        for (auto& [k, w] : merged) total_ += w;
    }

    std::size_t size() const noexcept { return adj_.size(); }
    const std::vector<std::pair<std::size_t, double>>& neighbors(std::size_t v) const { return adj_.at(v); }
    double self_loop(std::size_t v) const { return self_.at(v); }
    double degree(std::size_t v) const { return degree_.at(v); }
    /// Sum of edge weights, each edge once (m).
    double total_weight() const noexcept { return total_; }

private:
    std::vector<std::vector<std::pair<std::size_t, double>>> adj_;
    std::vector<double> self_;
    std::vector<double> degree_;
    double total_ = 0.0;
};

/// Symmetrized citation graph; mutual citations add up.
inline UndirectedGraph undirected_view(const CitationGraph& g) {
    std::vector<WeightedEdge> edges;
    for (const auto& a : g.arcs()) edges.push_back({a.from, a.to, a.weight});
    return UndirectedGraph(g.node_count(), edges);
}

struct Partition {
    std::vector<std::size_t> community;  // dense ids from 0, numbered by first appearance
    std::size_t count = 0;
    double q = 0.0;
};

/// Q = sum_c [ e_c/m - resolution * (d_c/2m)^2 ]; 0 for an edgeless graph.
inline double modularity(const UndirectedGraph& g, std::span<const std::size_t> community, double resolution = 1.0) {
    if (community.size() != g.size()) throw PartitionMismatch();
    const double m = g.total_weight();
    if (m <= 0.0) return 0.0;
    std::unordered_map<std::size_t, double> inner, deg;
    for (std::size_t v = 0; v < g.size(); ++v) {
        auto c = community[v];
        deg[c] += g.degree(v);
        inner[c] += g.self_loop(v);
        for (auto& [u, w] : g.neighbors(v))
            if (u > v && community[u] == c) inner[c] += w;
    }
    double q = 0.0;
    for (auto& [c, d] : deg) {
        double frac = d / (2.0 * m);
        q += inner[c] / m - resolution * frac * frac;
    }
    return q;
}

/// Relabels community ids densely in order of first appearance.
inline std::vector<std::size_t> dense_labels(std::span<const std::size_t> community, std::size_t* count = nullptr) {
    std::unordered_map<std::size_t, std::size_t> map;
    std::vector<std::size_t> out(community.size());
    for (std::size_t v = 0; v < community.size(); ++v) {
        auto [it, inserted] = map.try_emplace(community[v], map.size());
        out[v] = it->second;
    }
    if (count != nullptr) *count = map.size();
    return out;
}

inline constexpr std::uint64_t kDefaultSeed = 42;

/// Two-phase Louvain (local moving, then aggregation) repeated until no node moves.
/// The visiting order of each level is shuffled with a generator seeded by `seed`.
inline Partition louvain(const UndirectedGraph& g, std::uint64_t seed = kDefaultSeed, double resolution = 1.0) {
    Partition out;
    const auto n0 = g.size();
    std::vector<std::size_t> membership(n0);
    std::iota(membership.begin(), membership.end(), std::size_t{0});
    const double m = g.total_weight();
    if (m <= 0.0) {
        out.community = membership;
        out.count = n0;
        out.q = 0.0;
        return out;
    }

    std::mt19937_64 rng(seed);
    UndirectedGraph level = g;
    constexpr double eps = 1e-12;
    while (true) {
        const auto n = level.size();
        std::vector<std::size_t> comm(n);
        std::iota(comm.begin(), comm.end(), std::size_t{0});
        std::vector<double> tot(n);
        for (std::size_t v = 0; v < n; ++v) tot[v] = level.degree(v);

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);

        bool moved_any = false;
        std::vector<double> link(n, 0.0);
        std::vector<std::size_t> touched;
        bool improved = true;
        while (improved) {
            improved = false;
            for (auto v : order) {
                const auto home = comm[v];
                const double kv = level.degree(v);
                touched.clear();
                for (auto& [u, w] : level.neighbors(v)) {
                    auto c = comm[u];
                    if (link[c] == 0.0) touched.push_back(c);
                    link[c] += w;
                }
                tot[home] -= kv;
                auto gain = [&](std::size_t c) { return link[c] - resolution * tot[c] * kv / (2.0 * m); };
                std::size_t best = home;
                double best_gain = gain(home);
                for (auto c : touched) {
                    double gc = gain(c);
                    if (gc > best_gain + eps) {
                        best = c;
                        best_gain = gc;
                    }
                }
                tot[best] += kv;
                comm[v] = best;
                for (auto c : touched) link[c] = 0.0;
                link[home] = 0.0;
                if (best != home) {
                    improved = true;
                    moved_any = true;
                }
            }
        }
        if (!moved_any) break;

        std::size_t k = 0;
        auto dense = dense_labels(comm, &k);
        for (auto& c : membership) c = dense[c];
        std::vector<WeightedEdge> agg;
        for (std::size_t v = 0; v < n; ++v) {
            if (level.self_loop(v) != 0.0) agg.push_back({dense[v], dense[v], level.self_loop(v)});
            for (auto& [u, w] : level.neighbors(v))
                if (u > v) agg.push_back({dense[v], dense[u], w});
        }
        level = UndirectedGraph(k, agg);
    }

    out.community = dense_labels(membership, &out.count);
    out.q = modularity(g, out.community, resolution);
    return out;
}

}  // namespace citehist
