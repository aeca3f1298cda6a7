#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "lonetrack/isomorphism.hpp"
#include "lonetrack/whitehead.hpp"

using namespace lonetrack;

namespace {

std::set<std::pair<std::string, std::string>> labelled_edges(const WhiteheadGraph& w) {
    std::set<std::pair<std::string, std::string>> out;
    for (auto [a, b] : w.edges) out.insert(std::minmax(w.labels[a], w.labels[b]));
    return out;
}

WhiteheadGraph from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
    WhiteheadGraph w;
    for (int i = 0; i < n; ++i) w.add_vertex(std::to_string(i), 0, 0);
    for (auto [a, b] : edges) w.add_edge(a, b);
    return w;
}

// v is a cut vertex iff deleting it leaves more components than before (not counting v).
std::vector<int> removal_oracle(const WhiteheadGraph& w) {
    std::vector<int> all(w.vertex_count());
    std::iota(all.begin(), all.end(), 0);
    std::size_t base = w.components().size();
    std::vector<int> out;
    for (int v = 0; v < static_cast<int>(w.vertex_count()); ++v) {
        std::vector<int> keep;
        for (int u : all) {
            if (u != v) keep.push_back(u);
        }
        bool isolated = true;
        for (auto [a, b] : w.edges) isolated = isolated && a != v && b != v;
        std::size_t after = w.induced(keep).components().size();
        if (after > base - (isolated ? 1 : 0) && !isolated) out.push_back(v);
    }
    return out;
}

// Whitehead graphs as marked graphs (one vertex per Whitehead vertex), for isomorphism tests.
MarkedGraph as_graph(const WhiteheadGraph& w) {
    MarkedGraph g;
    for (std::size_t v = 0; v < w.vertex_count(); ++v) g.add_vertex("w" + std::to_string(v));
    int k = 0;
    for (auto [a, b] : w.edges) g.add_edge("e" + std::to_string(k++), a, b);
    return g;
}

}  // namespace

TEST(LocalWhiteheadGraph, WorkedExamples) {
    auto h = fixtures::tribonacci_like();
    auto lh = local_whitehead_graph(h, 0);
    EXPECT_EQ(lh.vertex_count(), 6u);
    EXPECT_EQ(lh.edge_count(), 7u);
    auto f = fixtures::fibonacci();
    auto lf = local_whitehead_graph(f, 0);
    EXPECT_EQ(lf.vertex_count(), 4u);
    EXPECT_EQ(labelled_edges(lf), (std::set<std::pair<std::string, std::string>>{{"a'", "b"}, {"a", "b'"}, {"a", "a'"}}));
}

TEST(StableWhiteheadGraph, WorkedExamples) {
    auto h6 = power(fixtures::tribonacci_like(), 6);
    auto sh = stable_whitehead_graph(h6, 0);
    EXPECT_EQ(sh.vertex_count(), 5u);
    std::set<std::pair<std::string, std::string>> k23;
    for (const char* x : {"b'", "c'"})
        for (const char* y : {"a", "b", "c"}) k23.insert(std::minmax(std::string(x), std::string(y)));
    EXPECT_EQ(labelled_edges(sh), k23);
    auto f2 = power(fixtures::fibonacci(), 2);
    EXPECT_EQ(stable_whitehead_graph(f2, 0).vertex_count(), 3u);
    EXPECT_THROW(stable_whitehead_graph(fixtures::tribonacci_like(), 0), PreconditionError);
}

TEST(StableWhiteheadGraph, EqualsLocalGraphRestrictedToPeriodicDirections) {
    std::mt19937 rng(41);
    int checked = 0;
    for (int i = 0; i < 40; ++i) {
        auto g = fixtures::random_positive_automorphism(2 + i % 3, rng, 4 + i % 5);
        if (matrix_class(transition_matrix(g)) != MatrixClass::primitive) continue;
        auto ps = periodic_structure(g);
        if (ps.rotationless_exponent > 12) continue;
        auto gk = power(g, static_cast<int>(ps.rotationless_exponent));
        if (gk.max_image_length() > 400) continue;
        auto pk = periodic_structure(gk);
        auto local = local_whitehead_graph(gk, 0);
        std::vector<int> periodic;
        for (std::size_t v = 0; v < local.vertex_count(); ++v) {
            if (pk.direction_period[local.directions[v]] > 0) periodic.push_back(static_cast<int>(v));
        }
        EXPECT_EQ(labelled_edges(stable_whitehead_graph(gk, 0)), labelled_edges(local.induced(periodic)));
        ++checked;
    }
    EXPECT_GE(checked, 10);
}

TEST(IdealWhiteheadGraph, WorkedExamples) {
    auto h6 = power(fixtures::tribonacci_like(), 6);
    auto iw = ideal_whitehead_graph(h6, 30);
    EXPECT_EQ(iw.components().size(), 1u);
    EXPECT_EQ(iw.vertex_count(), 5u);
    EXPECT_EQ(iw.edge_count(), 6u);
    EXPECT_TRUE(cut_vertices(iw).empty());
    EXPECT_TRUE(removal_oracle(iw).empty());

    auto f2 = power(fixtures::fibonacci(), 2);
    EXPECT_THROW(ideal_whitehead_graph(f2, 30), UnsupportedRepresentative);
    EXPECT_THROW(index_report(f2, 30), UnsupportedRepresentative);
    EXPECT_THROW(ideal_whitehead_graph(h6, 1), UnknownAtBound);
}

TEST(IndexReport, WorkedExample) {
    auto h6 = power(fixtures::tribonacci_like(), 6);
    auto r = index_report(h6, 30);
    ASSERT_EQ(r.index_list.size(), 1u);
    EXPECT_EQ(r.index_list[0], HalfInt::from_twice(-3));
    EXPECT_EQ(r.index_sum, HalfInt::from_twice(3 - 2 * 3));
    EXPECT_EQ(r.gate_index, HalfInt::from_twice(-3));
    EXPECT_TRUE(r.within_bounds);
    EXPECT_EQ(component_index(ideal_whitehead_graph(h6, 30)), r.index_sum);
}

TEST(IdealWhiteheadGraph, PowerInvariant) {
    auto h = fixtures::tribonacci_like();
    auto h6 = power(h, 6), h12 = power(h, 12);
    auto iw6 = ideal_whitehead_graph(h6, 30), iw12 = ideal_whitehead_graph(h12, 30);
    EXPECT_TRUE(are_isomorphic(as_graph(iw6), as_graph(iw12), false).has_value());
    EXPECT_EQ(index_report(h6, 30).index_sum, index_report(h12, 30).index_sum);
}

TEST(CutVertices, SmallGraphs) {
    EXPECT_EQ(cut_vertices(from_edges(3, {{0, 1}, {1, 2}})), std::vector<int>{1});
    EXPECT_TRUE(cut_vertices(from_edges(3, {{0, 1}, {1, 2}, {0, 2}})).empty());
    EXPECT_EQ(cut_vertices(from_edges(5, {{0, 1}, {1, 2}, {0, 2}, {2, 3}, {3, 4}, {2, 4}})), std::vector<int>{2});
}

TEST(CutVertices, AgreeWithRemovalOracle) {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        int n = 1 + static_cast<int>(rng() % 12);
        std::vector<std::pair<int, int>> edges;
        std::bernoulli_distribution coin(0.15 + 0.5 * (trial % 4) / 4.0);
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) {
                if (coin(rng)) edges.emplace_back(a, b);
            }
        auto w = from_edges(n, edges);
        EXPECT_EQ(cut_vertices(w), removal_oracle(w)) << "trial " << trial;
    }
}

TEST(Dot, ContainsFlavorLabelsAndEdges) {
    auto iw = ideal_whitehead_graph(power(fixtures::tribonacci_like(), 6), 30);
    auto dot = to_dot(iw, "H");
    EXPECT_NE(dot.find("label=\"ideal\""), std::string::npos);
    EXPECT_NE(dot.find("[label=\"c'\"]"), std::string::npos);
    EXPECT_EQ(std::count(dot.begin(), dot.end(), '-') / 2, 6);
}
