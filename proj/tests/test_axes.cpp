#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "lonetrack/axes.hpp"
#include "lonetrack/folds.hpp"
#include "lonetrack/isomorphism.hpp"

using namespace lonetrack;
using namespace fixtures;

namespace {

// Hand fold of F: a = a1 a2 with a1 -> a, a2 -> b; then b and a1 both map to a.
TEST(Stallings, FibonacciByHand) {
    auto f = fibonacci();
    auto seq = stallings_decomposition(f);
    ASSERT_EQ(seq.moves.size(), 3u);
    EXPECT_EQ(seq.moves[0].kind, MoveKind::subdivide);
    EXPECT_EQ(seq.moves[1].kind, MoveKind::fold);
    EXPECT_EQ(seq.moves[2].kind, MoveKind::homeomorphism);
    EXPECT_EQ(seq.fold_count(), 1u);
    const auto& mid = *seq.graphs[1];
    EXPECT_EQ(mid.vertex_count(), 2u);
    EXPECT_EQ(mid.edge_count(), 3u);
    EXPECT_TRUE(seq.recompose() == f);
}

TEST(Stallings, HomeomorphismIsOneMove) {
    auto g = rose_map({"a", "b", "c"}, {"b", "c'", "a"});
    auto seq = stallings_decomposition(g);
    ASSERT_EQ(seq.moves.size(), 1u);
    EXPECT_EQ(seq.moves[0].kind, MoveKind::homeomorphism);
    EXPECT_TRUE(seq.recompose() == g);
}

TEST(Stallings, TribonacciFirstFold) {
    auto h = tribonacci_like();
    auto seq = stallings_decomposition(h);
    EXPECT_TRUE(seq.recompose() == h);
    // a' and c' both start with b'; c' is cut after one edge and then folded onto a'.
    const FoldMove* first = nullptr;
    for (const auto& m : seq.moves) {
        if (m.kind == MoveKind::fold) {
            first = &m;
            break;
        }
    }
    ASSERT_NE(first, nullptr);
    EXPECT_EQ(first->image, (EdgePath{reverse(2)}));
}

TEST(Stallings, RejectsNonEquivalence) {
    // a -> a a is not a homotopy equivalence.
    auto g = rose_map({"a", "b"}, {"a a", "b"});
    EXPECT_THROW(stallings_decomposition(g), PreconditionError);
    auto collapse = rose_map({"a", "b"}, {"a b", "a b"});
    EXPECT_THROW(stallings_decomposition(collapse), PreconditionError);
}

TEST(Stallings, RecomposesRandomAutomorphisms) {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        auto g = random_positive_automorphism(2 + trial % 3, rng, 4 + trial % 5);
        auto seq = stallings_decomposition(g);
        EXPECT_TRUE(seq.recompose() == g) << trial;
        EXPECT_EQ(seq.moves.back().kind, MoveKind::homeomorphism);
    }
}

TEST(Stallings, FoldsAreLocalIsometries) {
    for (const auto& g : {fibonacci(), tribonacci_like(), power(tribonacci_like(), 3)}) {
        auto seq = stallings_decomposition(g);
        ASSERT_TRUE(seq.lambda.has_value());
        EXPECT_NEAR(seq.graphs.front()->volume(), 1.0, 1e-12);
        EXPECT_NEAR(seq.graphs[seq.graphs.size() - 2]->volume(), 1.0 / *seq.lambda, 1e-9);
        for (const auto& m : seq.moves) {
            if (m.kind == MoveKind::homeomorphism) continue;
            const auto& src = m.map.domain();
            const auto& dst = m.map.codomain();
            for (std::size_t k = 0; k < src.edge_count(); ++k) {
                EdgeId e = static_cast<EdgeId>(2 * k);
                EXPECT_NEAR(src.length(e), path_length(dst, m.map.image(e)), 1e-9);
            }
        }
    }
}

TEST(FoldLine, ZeroSamplesIsStart) {
    auto line = fold_line(fibonacci(), 1, 0);
    ASSERT_EQ(line.samples.size(), 1u);
    EXPECT_NEAR(line.samples[0].graph.volume(), 1.0, 1e-12);
    EXPECT_EQ(line.samples[0].graph.edge_count(), 2u);
}

void expect_periodic(const GraphMap& g, int periods, int samples) {
    auto line = fold_line(g, periods, samples);
    ASSERT_EQ(line.samples.size(), static_cast<std::size_t>(periods * samples + 1));
    for (int j = 0; j + samples < static_cast<int>(line.samples.size()); ++j) {
        const auto& a = line.samples[j].graph;
        const auto& b = line.samples[j + samples].graph;
        EXPECT_NEAR(a.volume(), 1.0, 1e-12);
        EXPECT_TRUE(are_isomorphic(a, b, true, 1e-8).has_value()) << "sample " << j;
    }
}

TEST(FoldLine, FibonacciPeriodic) { expect_periodic(fibonacci(), 2, 7); }
TEST(FoldLine, TribonacciPeriodic) { expect_periodic(tribonacci_like(), 2, 9); }
TEST(FoldLine, TribonacciPowerPeriodic) { expect_periodic(power(tribonacci_like(), 6), 2, 5); }

TEST(FoldLine, EndpointIsStart) {
    auto line = fold_line(fibonacci(), 1, 4);
    EXPECT_TRUE(are_isomorphic(line.samples.front().graph, line.samples.back().graph, true, 1e-8).has_value());
    EXPECT_NEAR(line.period, std::log((1 + std::sqrt(5.0)) / 2), 1e-12);
}

TEST(FoldLine, Csv) {
    auto line = fold_line(fibonacci(), 1, 2);
    auto csv = fold_line_csv(line);
    EXPECT_EQ(csv.substr(0, 17), "step,edge,length\n");
    EXPECT_NE(csv.find("\n2,"), std::string::npos);
}

TEST(PeriodicNielsen, FoundOnlyInSquare) {
    // No Nielsen paths for g itself, five for g^2.
    auto g = rose_map({"a", "b", "c"}, {"b b c", "b a", "b c"});
    EXPECT_TRUE(find_nielsen_paths(g).paths.empty());
    auto r = find_periodic_nielsen_paths(g);
    ASSERT_TRUE(r.found_at.has_value());
    EXPECT_EQ(*r.found_at, 2);
    ASSERT_TRUE(r.dynamics.has_value());
    EXPECT_EQ(r.dynamics->periods, std::vector<long long>{2});
    EXPECT_EQ(r.found->paths.size(), 5u);
    for (const auto& np : r.found->paths) EXPECT_EQ(apply_map(r.found->searched_map, np.path), np.path);
    EXPECT_EQ(periodic_stability(r), Stability::not_fully_stable);
}

TEST(PeriodicNielsen, TribonacciFree) {
    auto r = find_periodic_nielsen_paths(tribonacci_like());
    EXPECT_EQ(r.base_exponent, 6);
    ASSERT_TRUE(r.dynamics.has_value());
    EXPECT_TRUE(r.dynamics->settled);
    EXPECT_TRUE(r.dynamics->periods.empty());
    EXPECT_TRUE(r.complete);
    EXPECT_EQ(periodic_stability(r), Stability::fully_stable);
}

TEST(LoneAxis, Tribonacci) {
    auto r = lone_axis_decision(tribonacci_like(), kDefaultNielsenBound, true);
    EXPECT_EQ(r.overall, LoneAxisVerdict::lone_axis);
    EXPECT_NEAR(r.lambda, 1.3247179572, 1e-9);
    EXPECT_EQ(r.rotationless_exponent, 6);
    EXPECT_EQ(r.nielsen, Stability::fully_stable);
    EXPECT_EQ(*r.index, HalfInt::from_twice(-3));
    EXPECT_EQ(r.index_source, "gates");
    EXPECT_TRUE(*r.index_condition);
    EXPECT_EQ(r.ideal_graph->vertex_count(), 5u);
    EXPECT_EQ(r.ideal_graph->edges.size(), 6u);
    EXPECT_EQ(*r.cut_vertex_count, 0u);
    EXPECT_EQ(r.illegal_turns, 1u);
    EXPECT_TRUE(*r.unique_illegal_turn_check);
    EXPECT_TRUE(r.irreducibility_criterion);
    EXPECT_EQ(lone_axis_decision(tribonacci_like()).overall, LoneAxisVerdict::conditional);
}

TEST(LoneAxis, Fibonacci) {
    auto r = lone_axis_decision(fibonacci(), kDefaultNielsenBound, true);
    EXPECT_EQ(r.overall, LoneAxisVerdict::not_lone_axis);
    EXPECT_EQ(r.nielsen, Stability::not_fully_stable);
    EXPECT_EQ(*r.nielsen_found_at, 2);
    EXPECT_EQ(*r.index, HalfInt::integer(1 - 2));
    EXPECT_EQ(r.index_source, "nielsen-paths");
    EXPECT_FALSE(*r.index_condition);
    // At bounds <= 12 the brute-force search runs as well and must agree.
    auto small = lone_axis_decision(fibonacci(), kOracleMaxBound, true);
    EXPECT_EQ(small.overall, LoneAxisVerdict::not_lone_axis);
    EXPECT_TRUE(small.oracle_agrees.value_or(false));
}

TEST(LoneAxis, IndexMinusOneInRankThree) {
    auto g = rose_map({"a", "b", "c"}, {"a b a", "a b a c", "c a b c"});
    auto r = lone_axis_decision(g);
    EXPECT_EQ(*r.index, HalfInt::integer(-1));
    EXPECT_FALSE(*r.index_condition);
    EXPECT_EQ(r.overall, LoneAxisVerdict::not_lone_axis);
}

TEST(LoneAxis, CutVertex) {
    auto g = rose_map({"a", "b", "c"}, {"b a b c b", "a", "b a b c"});
    auto r = lone_axis_decision(g, kDefaultNielsenBound, true);
    EXPECT_EQ(*r.index, HalfInt::from_twice(-3));
    EXPECT_TRUE(*r.index_condition);
    EXPECT_GT(*r.cut_vertex_count, 0u);
    EXPECT_EQ(r.overall, LoneAxisVerdict::not_lone_axis);
}

TEST(LoneAxis, StageErrors) {
    auto bad = rose_map({"a", "b"}, {"a b", "a' b"});
    try {
        lone_axis_decision(bad);
        FAIL();
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "train-track");
    }
    auto perm = rose_map({"a", "b"}, {"b", "a"});
    EXPECT_THROW(lone_axis_decision(perm), StageError);
}

TEST(LoneAxis, TinyBoundIsUnknown) {
    // The leg dynamics settles what a cut-off leg search leaves open, unless it is capped too.
    EXPECT_EQ(lone_axis_decision(tribonacci_like(), 1).overall, LoneAxisVerdict::conditional);
    EXPECT_EQ(lone_axis_decision(tribonacci_like(), 1, false, 1).overall, LoneAxisVerdict::unknown);
}

TEST(LoneAxis, InducedRepresentativesHaveOneIllegalTurn) {
    for (const auto& g : {tribonacci_like(), power(tribonacci_like(), 2), power(tribonacci_like(), 6)}) {
        auto seq = stallings_decomposition(g);
        for (std::size_t k = 0; k < seq.moves.size(); ++k) EXPECT_TRUE(seq.induced_representative(k).is_self_map());
        for (auto n : induced_illegal_turn_counts(seq)) EXPECT_EQ(n, 1u);
    }
}

// Random corpus: conditions and verdict must be consistent, and the unique-illegal-turn
// consequence must hold whenever both conditions do.
TEST(LoneAxis, RandomCorpusConsistency) {
    std::mt19937 rng(5);
    int conditional = 0;
    for (int t = 0; t < 300; ++t) {
        auto g = random_positive_automorphism(3, rng, 3 + t % 4);
        if (matrix_class(transition_matrix(g)) != MatrixClass::primitive) continue;
        auto r = lone_axis_decision(g);
        if (r.overall == LoneAxisVerdict::conditional) {
            ++conditional;
            EXPECT_EQ(r.illegal_turns, 1u);
            EXPECT_EQ(*r.index, HalfInt::from_twice(-3));
        }
        if (r.irreducibility_criterion) {
            EXPECT_LE(HalfInt::integer(1 - r.rank), *r.index);
            EXPECT_LT(*r.index, HalfInt{});
        }
    }
    EXPECT_GT(conditional, 0);
}

TEST(Signature, RelabelingInvariant) {
    auto s1 = axis_signature(tribonacci_like());
    auto s2 = axis_signature(tribonacci_relabeled());
    EXPECT_EQ(s1.word, s2.word);
    EXPECT_EQ(s1.repetitions, s2.repetitions);
    EXPECT_NEAR(s1.lambda, s2.lambda, 1e-12);
}

TEST(Signature, ShuffledCopyIsSame) {
    // H with its edges stored in the order c, a, b.
    auto h = rose_map({"c", "a", "b"}, {"a b", "b", "c"});
    auto s1 = axis_signature(tribonacci_like());
    auto s2 = axis_signature(h);
    EXPECT_EQ(s1.word, s2.word);
}

TEST(Signature, PowersRepeat) {
    auto base = axis_signature(tribonacci_like());
    for (int k : {2, 3, 6}) {
        auto s = axis_signature(power(tribonacci_like(), k));
        EXPECT_EQ(s.word, base.word) << k;
        EXPECT_EQ(s.repetitions, k * base.repetitions) << k;
        EXPECT_NEAR(s.period, k * base.period, 1e-8);
    }
}

TEST(Signature, UndefinedOffLoneAxis) { EXPECT_THROW(axis_signature(fibonacci()), PreconditionError); }

TEST(Conjugacy, Verdicts) {
    auto same = conjugate_power_check(tribonacci_like(), tribonacci_relabeled(), 12);
    EXPECT_EQ(same.verdict, ConjugacyVerdict::conjugate_powers);
    EXPECT_EQ(same.k, 1);
    EXPECT_EQ(same.l, 1);
    auto sq = conjugate_power_check(tribonacci_like(), power(tribonacci_like(), 2), 12);
    EXPECT_EQ(sq.verdict, ConjugacyVerdict::conjugate_powers);
    EXPECT_EQ(sq.k, 2);
    EXPECT_EQ(sq.l, 1);
    EXPECT_EQ(conjugate_power_check(fibonacci(), tribonacci_like(), 12).verdict, ConjugacyVerdict::inapplicable);
    auto capped = conjugate_power_check(tribonacci_like(), power(tribonacci_like(), 3), 2);
    EXPECT_EQ(capped.verdict, ConjugacyVerdict::not_detected);
}

TEST(Conjugacy, DifferentAxes) {
    // Another lone-axis example from the random corpus with a different dilatation.
    auto other = rose_map({"a", "b", "c"}, {"b c", "a", "c a a"});
    ASSERT_EQ(lone_axis_decision(other).overall, LoneAxisVerdict::conditional);
    auto r = conjugate_power_check(tribonacci_like(), other, 12);
    EXPECT_EQ(r.verdict, ConjugacyVerdict::not_detected);
}

}  // namespace
