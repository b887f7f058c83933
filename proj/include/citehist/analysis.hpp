#pragma once

// Derives every analysis artefact from a project: corpus, variant clusters,
// citation edges and the repaired citation DAG.

#include <optional>
#include <string>
#include <vector>

#include "citehist/citegraph.hpp"
#include "citehist/community.hpp"
#include "citehist/corpus.hpp"
#include "citehist/coupling.hpp"
#include "citehist/disambig.hpp"
#include "citehist/project.hpp"
#include "citehist/rpys.hpp"

namespace citehist {

/// One cluster per distinct reference string.
inline std::vector<VariantCluster> singleton_clusters(std::span<const CitedRef> refs) {
    DistinctRefs distinct(refs);
    std::vector<VariantCluster> out;
    for (std::size_t i = 0; i < distinct.refs.size(); ++i) {
        VariantCluster c;
        c.members.push_back({distinct.refs[i].raw, distinct.counts[i]});
        detail::finalize(c);
        out.push_back(std::move(c));
    }
    detail::sort_clusters(out);
    return out;
}

struct Analysis {
    Corpus corpus;
    std::vector<CitedRef> refs;
    std::vector<VariantCluster> auto_clusters;  // before the ledger
    LedgerApplication disambiguated;            // after the ledger
    CanonicalMap canonical;
    EdgeBuild edges;
    CitationGraph graph;
    Acyclicized dag;

    const std::vector<VariantCluster>& clusters() const noexcept { return disambiguated.clusters; }

    std::vector<std::string> node_ids() const {
        std::vector<std::string> ids;
        for (const auto& n : graph.nodes()) ids.push_back(n.id);
        return ids;
    }
};

inline Analysis analyze(const ProjectState& p) {
    Analysis a;
    a.corpus = Corpus(p.records);
    a.refs = a.corpus.all_refs();
    a.auto_clusters = p.settings.threshold ? auto_cluster(a.refs, *p.settings.threshold) : singleton_clusters(a.refs);
    a.disambiguated = apply_ledger(a.auto_clusters, p.ledger);
    a.canonical = canonical_map(a.disambiguated.clusters);
    a.edges = a.corpus.build_citation_edges();
    a.graph = build_graph(a.corpus, a.edges.edges);
    a.dag = acyclicize(a.graph);
    return a;
}

}  // namespace citehist
