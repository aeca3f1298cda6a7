#include <gtest/gtest.h>

#include <random>
#include <set>

#include "fixtures.hpp"
#include "lonetrack/nielsen.hpp"

using namespace lonetrack;
using fixtures::word;

namespace {

void expect_valid_inp(const GraphMap& g, const NielsenPath& np) {
    auto gs = gates(g);
    EXPECT_TRUE(is_tight(np.path));
    EXPECT_EQ(apply_map(g, np.path), np.path);
    EXPECT_EQ(g.vertex_image(g.domain().init(np.path.front())), g.domain().init(np.path.front()));
    EXPECT_EQ(detail::illegal_turn_count(gs, np.path), 1u);
    ASSERT_GT(np.turn_index, 0u);
    EXPECT_FALSE(gs.legal(Turn::of(reverse(np.path[np.turn_index - 1]), np.path[np.turn_index])));
}

// Pieces of each original edge, read off by following the subdivision.
std::vector<EdgePath> pieces_of(const MarkedGraph& original, const MarkedGraph& sub) {
    std::vector<EdgePath> out(original.edge_count());
    for (std::size_t k = 0; k < original.edge_count(); ++k) {
        const auto& name = original.edge_name(static_cast<int>(k));
        if (auto e = sub.find_edge(name)) {
            out[k] = {*e};
            continue;
        }
        for (int i = 1;; ++i) {
            auto e = sub.find_edge(name + "_" + std::to_string(i));
            if (!e) break;
            out[k].push_back(*e);
        }
    }
    return out;
}

}  // namespace

TEST(SubdivideAtFixedPoints, CommutesWithTheSubdivision) {
    // a -> b a b a: the second and fourth letters give one interior fixed point (the last
    // occurrence touches the end and is the fixed vertex).
    auto g = fixtures::rose_map({"a", "b"}, {"b a b a", "b a"});
    auto sub = subdivide_at_fixed_points(g);
    EXPECT_EQ(sub.domain().vertex_count(), 2u);
    EXPECT_EQ(sub.domain().edge_count(), 3u);
    EXPECT_TRUE(sub.domain().is_subdivision(1));
    EXPECT_EQ(sub.vertex_image(1), 1);

    std::mt19937 rng(3);
    std::vector<GraphMap> maps{g, fixtures::rose_map({"a", "b"}, {"a b a b a", "b a"})};
    for (int i = 0; i < 30; ++i) maps.push_back(fixtures::random_positive_automorphism(2 + i % 2, rng, 6));
    for (const auto& m : maps) {
        auto s = subdivide_at_fixed_points(m);
        auto pieces = pieces_of(m.domain(), s.domain());
        auto expand = [&](const EdgePath& p) {
            EdgePath out;
            for (EdgeId f : p) {
                auto q = pieces[pair_of(f)];
                if (!is_positive(f)) q = reversed(q);
                out.insert(out.end(), q.begin(), q.end());
            }
            return out;
        };
        for (std::size_t k = 0; k < m.domain().edge_count(); ++k) {
            EdgeId e = static_cast<EdgeId>(2 * k);
            EXPECT_EQ(apply_map(s, expand({e})), expand(m.image(e)));
        }
        EXPECT_TRUE(is_train_track(s).train_track);
    }
}

TEST(FindNielsenPaths, FibonacciSquareCarriesAnIndivisiblePath) {
    auto f2 = power(fixtures::fibonacci(), 2);
    auto report = find_nielsen_paths(f2, 30);
    ASSERT_EQ(report.paths.size(), 1u);
    const auto& G = f2.domain();
    auto expected = detail::orientation_normal(word(G, "a' b' a b"));
    EXPECT_EQ(report.paths[0].path, expected);
    expect_valid_inp(report.searched_map, report.paths[0]);
    EXPECT_TRUE(report.exhaustive);

    auto small = find_nielsen_paths(f2, 12);
    ASSERT_TRUE(small.oracle_agrees.has_value());
    EXPECT_TRUE(*small.oracle_agrees);
    auto brute = brute_force_nielsen_paths(f2, 10);
    EXPECT_TRUE(std::find(brute.begin(), brute.end(), expected) != brute.end());
}

TEST(FindNielsenPaths, RotationlessPowerOfCubicExampleIsFree) {
    auto h6 = power(fixtures::tribonacci_like(), 6);
    auto report = find_nielsen_paths(h6, 30);
    EXPECT_TRUE(report.paths.empty());
    EXPECT_TRUE(report.exhaustive);
    auto small = find_nielsen_paths(h6, 12);
    ASSERT_TRUE(small.oracle_agrees.has_value());
    EXPECT_TRUE(*small.oracle_agrees);
    EXPECT_GE(*small.oracle_length, 7);
    EXPECT_TRUE(brute_force_nielsen_paths(h6, 7).empty());
}

TEST(FindNielsenPaths, RejectsRotatingInput) {
    EXPECT_THROW(find_nielsen_paths(fixtures::tribonacci_like(), 10), PreconditionError);
    EXPECT_THROW(find_nielsen_paths(fixtures::fibonacci(), 10), PreconditionError);
}

TEST(FindNielsenPaths, TinyBoundIsNotExhaustive) {
    auto f2 = power(fixtures::fibonacci(), 2);
    auto report = find_nielsen_paths(f2, 1);
    EXPECT_FALSE(report.exhaustive);
    EXPECT_EQ(is_fully_stable(report), Stability::unknown_at_bound);
}

TEST(FindNielsenPaths, AgreesWithBruteForceOnRandomMaps) {
    std::mt19937 rng(101);
    int checked = 0;
    for (int i = 0; i < 60; ++i) {
        auto g = fixtures::random_positive_automorphism(2 + i % 2, rng, 3 + i % 4);
        if (matrix_class(transition_matrix(g)) != MatrixClass::primitive) continue;
        auto ps = periodic_structure(g);
        if (ps.rotationless_exponent > 12) continue;
        auto gk = power(g, static_cast<int>(ps.rotationless_exponent));
        if (gk.max_image_length() > 60 || !is_rotationless(gk)) continue;
        auto report = find_nielsen_paths(gk, 12);
        ASSERT_TRUE(report.oracle_agrees.has_value());
        EXPECT_TRUE(*report.oracle_agrees) << "map " << i;
        for (const auto& np : report.paths) expect_valid_inp(report.searched_map, np);
        ++checked;
    }
    EXPECT_GE(checked, 10);
}

TEST(Stability, WorkedExamples) {
    auto h6 = power(fixtures::tribonacci_like(), 6);
    auto f2 = power(fixtures::fibonacci(), 2);
    EXPECT_EQ(is_fully_stable(h6, 30), Stability::fully_stable);
    EXPECT_EQ(is_fully_stable(f2, 30), Stability::not_fully_stable);
    EXPECT_EQ(ageometric_certificate(h6, 30), Geometricity::ageometric);
    EXPECT_EQ(ageometric_certificate(f2, 30), Geometricity::not_ageometric);
    EXPECT_EQ(ageometric_certificate(f2, 1), Geometricity::not_ageometric);
    EXPECT_EQ(ageometric_certificate(f2, 1, 1), Geometricity::unknown);
    EXPECT_GT(gate_rotationless_index(h6), HalfInt::integer(1 - 3));
}

TEST(LegDynamics, WorkedExamples) {
    auto h = leg_dynamics(fixtures::tribonacci_like());
    EXPECT_TRUE(h.none());
    EXPECT_NEAR(h.lambda, 1.3247179572, 1e-9);
    auto f = leg_dynamics(fixtures::fibonacci());
    EXPECT_TRUE(f.settled);
    EXPECT_EQ(f.periods, std::vector<long long>{2});
    EXPECT_FALSE(leg_dynamics(fixtures::fibonacci(), 1).settled);
}

// Five illegal turns, nothing for g, g^2 or g^4: the first Nielsen path lives on g^8.
TEST(LegDynamics, PeriodEightOnRankThree) {
    auto g = fixtures::rose_map({"a", "b", "d"}, {"a' b", "d' a", "b' a a"});
    auto dyn = leg_dynamics(g);
    ASSERT_TRUE(dyn.settled);
    EXPECT_EQ(dyn.periods, std::vector<long long>{8});
    for (int k : {1, 2, 4}) {
        auto r = find_nielsen_paths(power(g, k), 60);
        EXPECT_TRUE(r.paths.empty()) << k;
        EXPECT_TRUE(r.exhaustive) << k;
    }
    auto r = find_periodic_nielsen_paths(g, 120);
    EXPECT_EQ(periodic_stability(r), Stability::not_fully_stable);
    ASSERT_TRUE(r.found_at.has_value());
    EXPECT_EQ(*r.found_at, 8);
    for (const auto& np : r.found->paths) expect_valid_inp(r.found->searched_map, np);
}

// Periods from the leg dynamics against explicit searches of g^(e*m): Nielsen paths
// appear exactly when some period divides e*m.
TEST(LegDynamics, AgreesWithPowerSearches) {
    std::mt19937 rng(2024);
    int compared = 0;
    for (int i = 0; i < 120 && compared < 150; ++i) {
        auto g = fixtures::random_positive_automorphism(2 + i % 3, rng, 3 + i % 5);
        if (matrix_class(transition_matrix(g)) != MatrixClass::primitive) continue;
        auto dyn = leg_dynamics(g);
        if (!dyn.settled) continue;
        const long long e = periodic_structure(g).rotationless_exponent;
        for (long long m = 1; m <= 6; ++m) {
            auto gk = power(g, static_cast<int>(std::min<long long>(e * m, 1000)));
            if (e * m > 1000 || gk.total_image_length() > 1500) break;
            auto r = find_nielsen_paths(gk, 30);
            bool expected = false;
            for (long long p : dyn.periods) expected = expected || (e * m) % p == 0;
            if (!r.exhaustive && r.paths.empty()) continue;
            EXPECT_EQ(!r.paths.empty(), expected) << "map " << i << " power " << e * m;
            ++compared;
        }
    }
    EXPECT_GE(compared, 60);
}
