#include <gtest/gtest.h>

#include <random>
#include <tuple>

#include "citehist/community.hpp"
#include "support.hpp"

using namespace citehist;

namespace {

using EdgeList = std::vector<std::tuple<std::size_t, std::size_t, double>>;

UndirectedGraph make(std::size_t n, const EdgeList& edges) {
    std::vector<WeightedEdge> es;
    for (auto [a, b, w] : edges) es.push_back({a, b, w});
    return UndirectedGraph(n, es);
}

EdgeList clique(std::size_t first, std::size_t size) {
    EdgeList e;
    for (std::size_t i = first; i < first + size; ++i)
        for (std::size_t j = i + 1; j < first + size; ++j) e.emplace_back(i, j, 1.0);
    return e;
}

EdgeList two_cliques_with_bridge() {
    auto e = clique(0, 4);
    auto f = clique(4, 4);
    e.insert(e.end(), f.begin(), f.end());
    e.emplace_back(3, 4, 1.0);
    return e;
}

}  // namespace

TEST(Modularity, TwoTriangles) {
    auto e = clique(0, 3);
    auto f = clique(3, 3);
    e.insert(e.end(), f.begin(), f.end());
    auto g = make(6, e);
    std::vector<std::size_t> part{0, 0, 0, 1, 1, 1};
    EXPECT_NEAR(modularity(g, part), 0.5, 1e-9);
    EXPECT_NEAR(modularity(g, std::vector<std::size_t>(6, 0)), 0.0, 1e-12);
}

TEST(Modularity, EdgelessAndMismatch) {
    UndirectedGraph g(3, {});
    EXPECT_EQ(modularity(g, std::vector<std::size_t>{0, 1, 2}), 0.0);
    EXPECT_THROW(modularity(g, std::vector<std::size_t>{0}), PartitionMismatch);
    auto p = louvain(g);
    EXPECT_EQ(p.count, 3u);
    EXPECT_EQ(p.q, 0.0);
}

TEST(Modularity, MatchesPairwiseDefinition) {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<std::size_t> n(1, 9);
    std::uniform_real_distribution<double> w(0.5, 3.0);
    std::bernoulli_distribution coin(0.35);
    for (int t = 0; t < 300; ++t) {
        auto k = n(rng);
        EdgeList e;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i; j < k; ++j)
                if (coin(rng)) e.emplace_back(i, j, w(rng));
        std::uniform_int_distribution<std::size_t> c(0, 2);
        std::vector<std::size_t> part(k);
        for (auto& x : part) x = c(rng);
        EXPECT_NEAR(modularity(make(k, e), part), testsupport::oracle_modularity(k, e, part), 1e-9);
    }
}

TEST(Louvain, RecoversCliquesForManySeeds) {
    auto e = two_cliques_with_bridge();
    auto g = make(8, e);
    double best = -1;
    testsupport::for_each_partition(8, [&](const std::vector<std::size_t>& p) {
        best = std::max(best, testsupport::oracle_modularity(8, e, p));
    });
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto p = louvain(g, seed);
        EXPECT_EQ(p.count, 2u) << seed;
        for (std::size_t v = 0; v < 4; ++v) EXPECT_EQ(p.community[v], p.community[0]);
        for (std::size_t v = 4; v < 8; ++v) EXPECT_EQ(p.community[v], p.community[4]);
        EXPECT_NE(p.community[0], p.community[4]);
        EXPECT_NEAR(p.q, best, 1e-9);
    }
}

TEST(Louvain, NeverWorseThanTrivialPartitions) {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<std::size_t> n(2, 30);
    std::bernoulli_distribution coin(0.15);
    for (int t = 0; t < 100; ++t) {
        auto k = n(rng);
        EdgeList e;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i + 1; j < k; ++j)
                if (coin(rng)) e.emplace_back(i, j, 1.0);
        auto g = make(k, e);
        auto p = louvain(g, t);
        std::vector<std::size_t> singletons(k);
        for (std::size_t i = 0; i < k; ++i) singletons[i] = i;
        EXPECT_GE(p.q + 1e-12, modularity(g, singletons));
        EXPECT_GE(p.q + 1e-12, modularity(g, std::vector<std::size_t>(k, 0)));
        EXPECT_NEAR(p.q, testsupport::oracle_modularity(k, e, p.community), 1e-9);
        EXPECT_EQ(louvain(g, t).community, p.community);
    }
}

TEST(Louvain, DenseLabelsByFirstAppearance) {
    auto p = louvain(make(8, two_cliques_with_bridge()), 42);
    EXPECT_EQ(p.community[0], 0u);
    EXPECT_EQ(p.community[7], 1u);
    EXPECT_EQ(dense_labels(std::vector<std::size_t>{7, 7, 3, 9, 3}), (std::vector<std::size_t>{0, 0, 1, 2, 1}));
}

TEST(UndirectedView, MutualCitationsAddUp) {
    std::vector<GraphNode> nodes{{"a", {}, ""}, {"b", {}, ""}};
    std::vector<Arc> arcs{{0, 1, 1.0}, {1, 0, 1.0}};
    auto g = undirected_view(CitationGraph(nodes, arcs));
    EXPECT_EQ(g.total_weight(), 2.0);
    EXPECT_EQ(g.degree(0), 2.0);
}
