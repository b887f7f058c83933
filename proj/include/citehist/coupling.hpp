#pragma once

// Bibliographic coupling between documents or co-authors, cosine-normalized.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "citehist/community.hpp"
#include "citehist/corpus.hpp"
#include "citehist/rpys.hpp"

namespace citehist {

struct CouplingEdge {
    std::size_t a = 0;  // a < b
    std::size_t b = 0;
    std::size_t shared = 0;
    double cosine = 0.0;

    bool operator==(const CouplingEdge&) const = default;
};

struct CouplingGraph {
    std::vector<std::string> entities;
    std::vector<std::size_t> ref_counts;  // |R_e|
    std::vector<CouplingEdge> edges;      // sorted by (a, b); zero-shared pairs omitted

    /// Undirected graph weighted by cosine, for community detection.
    UndirectedGraph weighted() const {
        std::vector<WeightedEdge> es;
        for (const auto& e : edges) es.push_back({e.a, e.b, e.cosine});
        return UndirectedGraph(entities.size(), es);
    }
};

/// cosine(i,j) = |R_i ∩ R_j| / sqrt(|R_i| |R_j|).
inline CouplingGraph couple(std::vector<std::string> entities, const std::vector<std::set<std::string>>& refsets) {
    CouplingGraph g;
    g.entities = std::move(entities);
    for (const auto& r : refsets) g.ref_counts.push_back(r.size());

    // inverted index: reference -> entities citing it
    std::map<std::string, std::vector<std::size_t>> citing;
    for (std::size_t e = 0; e < refsets.size(); ++e)
        for (const auto& r : refsets[e]) citing[r].push_back(e);
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> shared;
    for (auto& [ref, es] : citing)
        for (std::size_t x = 0; x < es.size(); ++x)
            for (std::size_t y = x + 1; y < es.size(); ++y) ++shared[{es[x], es[y]}];
    for (auto& [k, s] : shared) {
        double denom = std::sqrt(static_cast<double>(g.ref_counts[k.first]) * static_cast<double>(g.ref_counts[k.second]));
        g.edges.push_back({k.first, k.second, s, std::min(1.0, static_cast<double>(s) / denom)});
    }
    return g;
}

enum class CouplingUnit { documents, coauthors };

struct CouplingOptions {
    std::optional<std::string> focal_author;  // normalized key
    bool include_focal = true;
};

/// Reference identity is the cluster canonical when `canonical` maps the raw string.
inline CouplingGraph bibliographic_coupling(const Corpus& corpus, CouplingUnit unit, const CanonicalMap* canonical = nullptr,
                                            const CouplingOptions& options = {}) {
    auto identity = [&](const CitedRef& r) -> const std::string& {
        if (canonical != nullptr)
            if (auto it = canonical->find(r.raw); it != canonical->end()) return it->second;
        return r.raw;
    };

    std::vector<std::string> names;
    std::vector<std::set<std::string>> sets;
    if (unit == CouplingUnit::documents) {
        for (const auto& rec : corpus.records()) {
            names.push_back(rec.id);
            std::set<std::string> s;
            for (const auto& cr : rec.cited_refs) s.insert(identity(cr));
            sets.push_back(std::move(s));
        }
    } else {
        std::map<std::string, std::set<std::string>> by_author;
        for (const auto& rec : corpus.records()) {
            std::set<std::string> authors;
            for (const auto& a : rec.authors) {
                auto key = normalize_author(a);
                if (!key.empty()) authors.insert(key);
            }
            for (const auto& a : authors) {
                if (!options.include_focal && options.focal_author && a == *options.focal_author) continue;
                auto& s = by_author[a];
                for (const auto& cr : rec.cited_refs) s.insert(identity(cr));
            }
        }
        for (auto& [a, s] : by_author) {
            names.push_back(a);
            sets.push_back(std::move(s));
        }
    }
    return couple(std::move(names), sets);
}

}  // namespace citehist
