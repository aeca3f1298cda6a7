#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "lonetrack/traintrack.hpp"

using namespace lonetrack;
using fixtures::word;

namespace {

EdgeId dir(const GraphMap& g, const char* label) { return *g.domain().find_edge(label); }

std::set<std::set<EdgeId>> gate_sets(const GateStructure& gs) {
    std::set<std::set<EdgeId>> out;
    for (const auto& gate : gs.gates) out.insert({gate.begin(), gate.end()});
    return out;
}

// Gate partition by simulating Dg orbits directly: d ~ d' iff Dg^k d = Dg^k d' for some k <= depth.
std::set<std::set<EdgeId>> simulated_gates(const GraphMap& g, int depth) {
    auto dg = direction_map(g);
    const auto& G = g.domain();
    std::set<std::set<EdgeId>> out;
    for (std::size_t v = 0; v < G.vertex_count(); ++v) {
        const auto& ds = G.directions_at(static_cast<VertexId>(v));
        // union-find over the directions at v
        std::vector<std::size_t> parent(ds.size());
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](std::size_t x) {
            while (parent[x] != x) x = parent[x];
            return x;
        };
        for (std::size_t i = 0; i < ds.size(); ++i)
            for (std::size_t j = i + 1; j < ds.size(); ++j) {
                EdgeId x = ds[i], y = ds[j];
                for (int k = 0; k <= depth; ++k) {
                    if (x == y) {
                        parent[find(i)] = find(j);
                        break;
                    }
                    x = dg[x];
                    y = dg[y];
                }
            }
        std::map<std::size_t, std::set<EdgeId>> classes;
        for (std::size_t i = 0; i < ds.size(); ++i) classes[find(i)].insert(ds[i]);
        for (auto& [root, cls] : classes) out.insert(cls);
    }
    return out;
}

}  // namespace

TEST(DirectionMap, WorkedExamples) {
    auto f = fixtures::fibonacci();
    auto dg = direction_map(f);
    EXPECT_EQ(dg[dir(f, "a")], dir(f, "a"));
    EXPECT_EQ(dg[dir(f, "b")], dir(f, "a"));
    EXPECT_EQ(dg[dir(f, "a'")], dir(f, "b'"));
    EXPECT_EQ(dg[dir(f, "b'")], dir(f, "a'"));
    auto h = fixtures::tribonacci_like();
    auto dh = direction_map(h);
    EXPECT_EQ(dh[dir(h, "a")], dir(h, "b"));
    EXPECT_EQ(dh[dir(h, "b")], dir(h, "c"));
    EXPECT_EQ(dh[dir(h, "c")], dir(h, "a"));
    EXPECT_EQ(dh[dir(h, "c'")], dir(h, "b'"));
    EXPECT_EQ(dh[dir(h, "b'")], dir(h, "c'"));
    EXPECT_EQ(dh[dir(h, "a'")], dir(h, "b'"));
}

TEST(Gates, WorkedExamples) {
    auto f = fixtures::fibonacci();
    auto gf = gates(f);
    EXPECT_EQ(gate_sets(gf), (std::set<std::set<EdgeId>>{{dir(f, "a"), dir(f, "b")}, {dir(f, "a'")}, {dir(f, "b'")}}));
    ASSERT_EQ(gf.illegal_turns.size(), 1u);
    EXPECT_EQ(gf.illegal_turns[0], Turn::of(dir(f, "a"), dir(f, "b")));

    auto h = fixtures::tribonacci_like();
    auto gh = gates(h);
    EXPECT_EQ(gh.gates.size(), 5u);
    ASSERT_EQ(gh.illegal_turns.size(), 1u);
    EXPECT_EQ(gh.illegal_turns[0], Turn::of(dir(h, "a'"), dir(h, "c'")));

    auto homeo = fixtures::rose_map({"a", "b"}, {"b", "a"});
    EXPECT_EQ(gates(homeo).gates.size(), 4u);
    EXPECT_TRUE(gates(homeo).illegal_turns.empty());
}

TEST(Gates, AgreeWithOrbitSimulation) {
    std::mt19937 rng(17);
    std::vector<GraphMap> maps{fixtures::fibonacci(), fixtures::tribonacci_like()};
    for (int i = 0; i < 60; ++i) maps.push_back(fixtures::random_positive_automorphism(2 + i % 3, rng, 3 + i % 6));
    for (const auto& g : maps) {
        auto gs = gates(g);
        EXPECT_EQ(gate_sets(gs), simulated_gates(g, 20));
        std::size_t expected = 0;
        for (const auto& gate : gs.gates) expected += gate.size() * (gate.size() - 1) / 2;
        EXPECT_EQ(gs.illegal_turns.size(), expected);
    }
}

TEST(Gates, PowersRefine) {
    std::mt19937 rng(23);
    for (int i = 0; i < 15; ++i) {
        auto g = fixtures::random_positive_automorphism(2 + i % 3, rng, 5);
        auto gs = gates(g);
        for (int k = 2; k <= 6; ++k) {
            auto gk = gates(power(g, k));
            for (std::size_t a = 0; a < gk.gate_of.size(); ++a)
                for (std::size_t b = 0; b < gk.gate_of.size(); ++b) {
                    if (gk.gate_of[a] == gk.gate_of[b]) {
                        EXPECT_EQ(gs.gate_of[a], gs.gate_of[b]);
                    }
                }
        }
    }
}

TEST(TrainTrack, Verdicts) {
    EXPECT_TRUE(is_train_track(fixtures::fibonacci()).train_track);
    EXPECT_TRUE(is_train_track(fixtures::tribonacci_like()).train_track);
    // b -> a' b crosses {a, b}, which a -> a b makes illegal.
    auto bad = fixtures::rose_map({"a", "b"}, {"a b", "a' b"});
    auto verdict = is_train_track(bad);
    EXPECT_FALSE(verdict.train_track);
    ASSERT_TRUE(verdict.edge.has_value());
    ASSERT_TRUE(verdict.turn.has_value());
    EXPECT_FALSE(gates(bad).legal(*verdict.turn));
}

TEST(TrainTrack, ImagesOfPowersCrossOnlyLegalTurns) {
    std::mt19937 rng(29);
    for (int i = 0; i < 20; ++i) {
        auto g = fixtures::random_positive_automorphism(2 + i % 3, rng, 5);
        ASSERT_TRUE(is_train_track(g).train_track);
        auto gs = gates(g);
        auto g4 = power(g, 4);
        for (std::size_t e = 0; e < g.domain().oriented_edge_count(); ++e) {
            for (const Turn& t : turns_crossed(g4.image(static_cast<EdgeId>(e)))) EXPECT_TRUE(gs.legal(t));
        }
    }
}

TEST(PeriodicStructure, WorkedExamples) {
    auto f = fixtures::fibonacci();
    auto pf = periodic_structure(f);
    EXPECT_EQ(pf.rotationless_exponent, 2);
    EXPECT_EQ(pf.direction_period[dir(f, "a")], 1);
    EXPECT_EQ(pf.direction_period[dir(f, "a'")], 2);
    EXPECT_EQ(pf.direction_period[dir(f, "b'")], 2);
    EXPECT_EQ(pf.direction_period[dir(f, "b")], 0);
    EXPECT_FALSE(is_rotationless(f));
    EXPECT_TRUE(is_rotationless(power(f, 2)));

    auto h = fixtures::tribonacci_like();
    auto ph = periodic_structure(h);
    EXPECT_EQ(ph.rotationless_exponent, 6);
    for (const char* d : {"a", "b", "c"}) EXPECT_EQ(ph.direction_period[dir(h, d)], 3);
    for (const char* d : {"b'", "c'"}) EXPECT_EQ(ph.direction_period[dir(h, d)], 2);
    EXPECT_FALSE(is_rotationless(h));
    EXPECT_TRUE(is_rotationless(power(h, 6)));
    EXPECT_EQ(periodic_structure(power(h, 6)).rotationless_exponent, 1);
}

TEST(TakenTurns, WorkedExamples) {
    auto f = fixtures::fibonacci();
    std::set<Turn> expected_f{Turn::of(dir(f, "a'"), dir(f, "b")), Turn::of(dir(f, "b'"), dir(f, "a")),
                              Turn::of(dir(f, "a'"), dir(f, "a"))};
    auto tf = taken_turns(f);
    EXPECT_EQ(std::set<Turn>(tf.begin(), tf.end()), expected_f);

    auto h = fixtures::tribonacci_like();
    std::set<Turn> expected_h;
    for (auto [x, y] : std::vector<std::pair<const char*, const char*>>{
             {"a'", "b"}, {"b'", "c"}, {"c'", "a"}, {"b'", "b"}, {"c'", "c"}, {"b'", "a"}, {"c'", "b"}}) {
        expected_h.insert(Turn::of(dir(h, x), dir(h, y)));
    }
    auto th = taken_turns(h);
    EXPECT_EQ(std::set<Turn>(th.begin(), th.end()), expected_h);

    EXPECT_THROW(taken_turns(fixtures::rose_map({"a", "b"}, {"b", "a"})), PreconditionError);
}

TEST(TakenTurns, InvariantAndMatchesLongIterates) {
    std::mt19937 rng(31);
    std::vector<GraphMap> maps{fixtures::fibonacci(), fixtures::tribonacci_like()};
    for (int i = 0; i < 20; ++i) maps.push_back(fixtures::random_positive_automorphism(2 + i % 3, rng, 6));
    for (const auto& g : maps) {
        if (matrix_class(transition_matrix(g)) != MatrixClass::primitive) continue;
        auto turns = taken_turns(g);
        std::set<Turn> set(turns.begin(), turns.end());
        auto dg = direction_map(g);
        for (const Turn& t : turns) EXPECT_TRUE(set.count(Turn::of(dg[t.first], dg[t.second])));
        // Turns crossed by long iterates of any edge are exactly the taken turns.
        std::set<Turn> crossed;
        auto gk = g;
        for (int k = 1; k <= 12 && gk.max_image_length() < 20000; ++k) {
            for (std::size_t e = 0; e < g.domain().oriented_edge_count(); e += 2) {
                for (const Turn& t : turns_crossed(gk.image(static_cast<EdgeId>(e)))) {
                    crossed.insert(t);
                    if (k <= 4) {
                        EXPECT_TRUE(set.count(t));
                    }
                }
            }
            gk = compose(g, gk);
        }
        EXPECT_EQ(crossed, set);
    }
}

TEST(GateIndexSum, WorkedExamplesAndEulerIdentity) {
    EXPECT_EQ(gate_index_sum(fixtures::fibonacci()), HalfInt::from_twice(-1));
    EXPECT_EQ(gate_index_sum(fixtures::tribonacci_like()), HalfInt::from_twice(-3));
    std::mt19937 rng(37);
    for (int i = 0; i < 50; ++i) {
        auto g = fixtures::random_positive_automorphism(2 + i % 3, rng, 2 + i % 7);
        const auto& G = g.domain();
        auto gs = gates(g);
        HalfInt rhs;
        for (const auto& gate : gs.gates) rhs += HalfInt::from_twice(1 - static_cast<long long>(gate.size()));
        HalfInt lhs = HalfInt::integer(static_cast<long long>(G.vertex_count()) - static_cast<long long>(G.edge_count())) - gate_index_sum(g);
        EXPECT_EQ(lhs, rhs);
        bool equality = gate_index_sum(g) == HalfInt::from_twice(3 - 2 * G.rank());
        EXPECT_EQ(equality, gs.illegal_turns.size() == 1);
        // A map without illegal turns is a homeomorphism and has GI = 1 - r.
        if (!gs.illegal_turns.empty()) {
            EXPECT_GE(gate_index_sum(g), HalfInt::from_twice(3 - 2 * G.rank()));
        }
    }
}
