#pragma once

// Intra-set citation graph, chronology repair, search path counts and main path.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "citehist/corpus.hpp"
#include "citehist/error.hpp"

namespace citehist {

struct GraphNode {
    std::string id;
    std::optional<int> year;
    std::string label;

    bool operator==(const GraphNode&) const = default;
};

/// Citation arc: `from` cites `to`.
struct Arc {
    std::size_t from = 0;
    std::size_t to = 0;
    double weight = 1.0;

    bool operator==(const Arc&) const = default;
};

class CitationGraph {
public:
    CitationGraph() = default;

    /// Self-loops are dropped; parallel arcs collapse to the first occurrence.
    CitationGraph(std::vector<GraphNode> nodes, std::span<const Arc> arcs) : nodes_(std::move(nodes)) {
        std::map<std::pair<std::size_t, std::size_t>, Arc> uniq;
        for (const auto& a : arcs) {
            if (a.from == a.to || a.from >= nodes_.size() || a.to >= nodes_.size()) continue;
            uniq.try_emplace({a.from, a.to}, a);
        }
        for (auto& [k, a] : uniq) arcs_.push_back(a);
        index();
    }

    const std::vector<GraphNode>& nodes() const noexcept { return nodes_; }
    const GraphNode& node(std::size_t i) const { return nodes_.at(i); }
    const std::vector<Arc>& arcs() const noexcept { return arcs_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t arc_count() const noexcept { return arcs_.size(); }

    /// Arc indices leaving / entering a node, in (from, to) order.
    const std::vector<std::size_t>& out_arcs(std::size_t v) const { return out_.at(v); }
    const std::vector<std::size_t>& in_arcs(std::size_t v) const { return in_.at(v); }

    std::optional<std::size_t> find(const std::string& id) const {
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (nodes_[i].id == id) return i;
        return std::nullopt;
    }

    bool has_arc(std::size_t from, std::size_t to) const {
        for (auto a : out_.at(from))
            if (arcs_[a].to == to) return true;
        return false;
    }

    /// Weakly connected components, largest first (ties: smallest member first).
    std::vector<std::vector<std::size_t>> components() const {
        std::vector<std::size_t> comp(nodes_.size(), SIZE_MAX);
        std::vector<std::vector<std::size_t>> out;
        for (std::size_t s = 0; s < nodes_.size(); ++s) {
            if (comp[s] != SIZE_MAX) continue;
            std::vector<std::size_t> members{s}, stack{s};
            comp[s] = out.size();
            while (!stack.empty()) {
                auto v = stack.back();
                stack.pop_back();
                auto visit = [&](std::size_t w) {
                    if (comp[w] == SIZE_MAX) {
                        comp[w] = out.size();
                        members.push_back(w);
                        stack.push_back(w);
                    }
                };
                for (auto a : out_[v]) visit(arcs_[a].to);
                for (auto a : in_[v]) visit(arcs_[a].from);
            }
            std::sort(members.begin(), members.end());
            out.push_back(std::move(members));
        }
        std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
        return out;
    }

    /// Kahn order with the smallest ready node first, or nullopt if a cycle exists.
    std::optional<std::vector<std::size_t>> topological_order() const {
        std::vector<std::size_t> indeg(nodes_.size(), 0);
        for (const auto& a : arcs_) ++indeg[a.to];
        std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
        for (std::size_t v = 0; v < nodes_.size(); ++v)
            if (indeg[v] == 0) ready.push(v);
        std::vector<std::size_t> order;
        while (!ready.empty()) {
            auto v = ready.top();
            ready.pop();
            order.push_back(v);
            for (auto a : out_[v])
                if (--indeg[arcs_[a].to] == 0) ready.push(arcs_[a].to);
        }
        if (order.size() != nodes_.size()) return std::nullopt;
        return order;
    }

    bool is_acyclic() const { return topological_order().has_value(); }

private:
    void index() {
        out_.assign(nodes_.size(), {});
        in_.assign(nodes_.size(), {});
        for (std::size_t i = 0; i < arcs_.size(); ++i) {
            out_[arcs_[i].from].push_back(i);
            in_[arcs_[i].to].push_back(i);
        }
    }

    std::vector<GraphNode> nodes_;
    std::vector<Arc> arcs_;  // sorted by (from, to)
    std::vector<std::vector<std::size_t>> out_, in_;
};

/// HistCite-style label: `AUTHOR, YEAR, SOURCE, Vn, Pn`.
inline std::string record_label(const DocumentRecord& r) {
    std::string s = r.first_author_norm.empty() ? r.id : r.first_author_norm;
    if (r.pub_year) s += ", " + std::to_string(*r.pub_year);
    if (!r.source_abbrev.empty()) s += ", " + r.source_abbrev;
    if (r.volume) s += ", V" + *r.volume;
    if (r.begin_page) s += ", P" + *r.begin_page;
    return s;
}

/// One node per record (isolated records kept), one arc per citation edge.
inline CitationGraph build_graph(const Corpus& corpus, std::span<const CitationEdge> edges) {
    std::vector<GraphNode> nodes;
    nodes.reserve(corpus.size());
    for (const auto& r : corpus.records()) nodes.push_back({r.id, r.pub_year, record_label(r)});
    std::vector<Arc> arcs;
    arcs.reserve(edges.size());
    for (const auto& e : edges) arcs.push_back({e.citing, e.cited, 1.0});
    return CitationGraph(std::move(nodes), arcs);
}

// ---------------------------------------------------------------------------
// Chronology repair

struct RemovedArc {
    Arc arc;
    std::string reason;
};

struct Acyclicized {
    CitationGraph graph;
    std::vector<RemovedArc> removed;
};

/// Drops arcs from an older citing record to a newer cited one, then breaks the
/// remaining cycles one back-arc at a time: each round runs a depth-first search
/// in id order and removes the back-arc with the smallest (citing id, cited id).
inline Acyclicized acyclicize(const CitationGraph& g) {
    Acyclicized out;
    std::vector<Arc> kept;
    for (const auto& a : g.arcs()) {
        auto yc = g.node(a.from).year, yd = g.node(a.to).year;
        if (yc && yd && *yc < *yd)
            out.removed.push_back({a, "citing record (" + std::to_string(*yc) + ") predates cited record (" +
                                          std::to_string(*yd) + ")"});
        else
            kept.push_back(a);
    }

    const auto n = g.node_count();
    std::vector<std::size_t> by_id(n);
    std::iota(by_id.begin(), by_id.end(), std::size_t{0});
    std::sort(by_id.begin(), by_id.end(), [&](auto x, auto y) { return g.node(x).id < g.node(y).id; });

    while (true) {
        std::vector<std::vector<std::size_t>> succ(n);
        for (std::size_t i = 0; i < kept.size(); ++i) succ[kept[i].from].push_back(i);
        for (auto& s : succ)
            std::sort(s.begin(), s.end(), [&](auto x, auto y) { return g.node(kept[x].to).id < g.node(kept[y].to).id; });

        enum : unsigned char { white, grey, black };
        std::vector<unsigned char> color(n, white);
        std::vector<std::size_t> back;
        for (auto root : by_id) {
            if (color[root] != white) continue;
            // iterative DFS: (node, next successor position)
            std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
            color[root] = grey;
            while (!stack.empty()) {
                auto& [v, pos] = stack.back();
                if (pos == succ[v].size()) {
                    color[v] = black;
                    stack.pop_back();
                    continue;
                }
                auto arc = succ[v][pos++];
                auto w = kept[arc].to;
                if (color[w] == grey) {
                    back.push_back(arc);
                } else if (color[w] == white) {
                    color[w] = grey;
                    stack.emplace_back(w, 0);
                }
            }
        }
        if (back.empty()) break;
        auto victim = *std::min_element(back.begin(), back.end(), [&](auto x, auto y) {
            return std::tie(g.node(kept[x].from).id, g.node(kept[x].to).id) <
                   std::tie(g.node(kept[y].from).id, g.node(kept[y].to).id);
        });
        out.removed.push_back({kept[victim], "breaks a citation cycle"});
        kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(victim));
    }
    out.graph = CitationGraph(g.nodes(), kept);
    return out;
}

// ---------------------------------------------------------------------------
// Search path count

/// Arc in knowledge-flow orientation (cited -> citing).
struct FlowArc {
    std::size_t from = 0;
    std::size_t to = 0;
    double spc = 0.0;
};

/// Search path counts over the flow DAG. Counts are held as doubles; they are
/// exact integers up to 2^53 paths.
struct SpcWeights {
    std::vector<FlowArc> arcs;                               // one per citation arc, same order
    std::vector<std::pair<std::size_t, double>> source_arcs;  // virtual source -> node
    std::vector<std::pair<std::size_t, double>> sink_arcs;    // node -> virtual sink
    std::vector<double> from_source;  // paths from the virtual source to each node
    std::vector<double> to_sink;      // paths from each node to the virtual sink
    double total_paths = 0.0;
    std::vector<std::vector<std::size_t>> flow_out;  // per node: indices into arcs

    double through(std::size_t v) const { return from_source.at(v) * to_sink.at(v); }
};

/// Nodes without any arc take no part in the path system.
inline SpcWeights spc_weights(const CitationGraph& dag) {
    auto topo = dag.topological_order();
    if (!topo) throw CyclicInput();
    const auto n = dag.node_count();
    SpcWeights w;
    w.flow_out.assign(n, {});
    std::vector<std::vector<std::size_t>> flow_in(n);
    for (std::size_t i = 0; i < dag.arc_count(); ++i) {
        const auto& a = dag.arcs()[i];
        w.arcs.push_back({a.to, a.from, 0.0});
        w.flow_out[a.to].push_back(i);
        flow_in[a.from].push_back(i);
    }
    auto linked = [&](std::size_t v) { return !w.flow_out[v].empty() || !flow_in[v].empty(); };

    // Citation topological order runs citing -> cited, so flow order is its reverse.
    std::vector<std::size_t> flow_order(topo->rbegin(), topo->rend());
    w.from_source.assign(n, 0.0);
    w.to_sink.assign(n, 0.0);
    for (auto v : flow_order) {
        if (!linked(v)) continue;
        if (flow_in[v].empty()) w.from_source[v] = 1.0;
        for (auto i : flow_in[v]) w.from_source[v] += w.from_source[w.arcs[i].from];
    }
    for (auto it = flow_order.rbegin(); it != flow_order.rend(); ++it) {
        auto v = *it;
        if (!linked(v)) continue;
        if (w.flow_out[v].empty()) w.to_sink[v] = 1.0;
        for (auto i : w.flow_out[v]) w.to_sink[v] += w.to_sink[w.arcs[i].to];
    }
    for (auto& a : w.arcs) a.spc = w.from_source[a.from] * w.to_sink[a.to];
    for (std::size_t v = 0; v < n; ++v) {
        if (!linked(v)) continue;
        if (flow_in[v].empty()) {
            w.source_arcs.emplace_back(v, w.to_sink[v]);
            w.total_paths += w.to_sink[v];
        }
        if (w.flow_out[v].empty()) w.sink_arcs.emplace_back(v, w.from_source[v]);
    }
    return w;
}

struct MainPath {
    std::vector<std::size_t> nodes;  // earliest first
    std::vector<double> arc_spc;     // SPC of each consecutive pair
    double total_weight = 0.0;       // sum of arc_spc

    bool operator==(const MainPath&) const = default;
};

inline constexpr std::size_t kDefaultMainPathCap = 8;

/// Forward local search from the virtual source: at each step take the out-arc
/// with the largest SPC; among equal arcs prefer the head with more source-sink
/// paths through it. Remaining ties branch, up to `cap` paths.
inline std::vector<MainPath> main_path(const SpcWeights& w, std::size_t cap = kDefaultMainPathCap) {
    struct Option {
        std::size_t node;
        double spc;
    };
    auto best_of = [&](std::vector<Option> opts) {
        std::vector<Option> best;
        for (const auto& o : opts) {
            if (best.empty()) {
                best.push_back(o);
                continue;
            }
            auto key = std::make_pair(o.spc, w.through(o.node));
            auto top = std::make_pair(best.front().spc, w.through(best.front().node));
            if (key > top)
                best.assign(1, o);
            else if (key == top)
                best.push_back(o);
        }
        std::sort(best.begin(), best.end(), [](const Option& a, const Option& b) { return a.node < b.node; });
        return best;
    };

    std::vector<MainPath> done;
    std::vector<Option> starts;
    for (auto [v, s] : w.source_arcs) starts.push_back({v, s});
    if (starts.empty() || cap == 0) return done;

    // depth-first expansion keeps the output order stable
    std::vector<MainPath> stack;
    auto first = best_of(starts);
    for (auto it = first.rbegin(); it != first.rend(); ++it) stack.push_back(MainPath{{it->node}, {}, 0.0});
    while (!stack.empty() && done.size() < cap) {
        MainPath p = std::move(stack.back());
        stack.pop_back();
        auto v = p.nodes.back();
        if (w.flow_out[v].empty()) {
            done.push_back(std::move(p));
            continue;
        }
        std::vector<Option> opts;
        for (auto i : w.flow_out[v]) opts.push_back({w.arcs[i].to, w.arcs[i].spc});
        auto next = best_of(std::move(opts));
        for (auto it = next.rbegin(); it != next.rend(); ++it) {
            MainPath q = p;
            q.nodes.push_back(it->node);
            q.arc_spc.push_back(it->spc);
            q.total_weight += it->spc;
            stack.push_back(std::move(q));
        }
    }
    return done;
}

// ---------------------------------------------------------------------------
// Shortest paths

inline constexpr std::size_t kDefaultShortestPathCap = 1024;

/// All shortest paths between two nodes on the undirected view (at most `cap`).
inline std::vector<std::vector<std::size_t>> shortest_paths(const CitationGraph& g, std::size_t from, std::size_t to,
                                                            std::size_t cap = kDefaultShortestPathCap) {
    const auto n = g.node_count();
    if (from >= n) throw UnknownNode(std::to_string(from));
    if (to >= n) throw UnknownNode(std::to_string(to));
    std::vector<std::vector<std::size_t>> nbrs(n);
    for (const auto& a : g.arcs()) {
        nbrs[a.from].push_back(a.to);
        nbrs[a.to].push_back(a.from);
    }
    for (auto& v : nbrs) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    std::vector<std::size_t> dist(n, SIZE_MAX);
    std::queue<std::size_t> q;
    dist[from] = 0;
    q.push(from);
    while (!q.empty()) {
        auto v = q.front();
        q.pop();
        if (v == to) break;
        for (auto w : nbrs[v])
            if (dist[w] == SIZE_MAX) {
                dist[w] = dist[v] + 1;
                q.push(w);
            }
    }
    std::vector<std::vector<std::size_t>> out;
    if (dist[to] == SIZE_MAX) return out;

    // walk back from `to` through neighbours one step closer to `from`
    std::vector<std::size_t> path{to};
    std::function<void(std::size_t)> back = [&](std::size_t v) {
        if (out.size() >= cap) return;
        if (v == from) {
            out.emplace_back(path.rbegin(), path.rend());
            return;
        }
        for (auto w : nbrs[v]) {
            if (dist[w] != SIZE_MAX && dist[w] + 1 == dist[v]) {
                path.push_back(w);
                back(w);
                path.pop_back();
            }
        }
    };
    back(to);
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<std::vector<std::size_t>> shortest_paths(const CitationGraph& g, const std::string& from,
                                                            const std::string& to,
                                                            std::size_t cap = kDefaultShortestPathCap) {
    auto a = g.find(from);
    if (!a) throw UnknownNode(from);
    auto b = g.find(to);
    if (!b) throw UnknownNode(to);
    return shortest_paths(g, *a, *b, cap);
}

}  // namespace citehist
