#pragma once

#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "folds.hpp"
#include "graph.hpp"
#include "isomorphism.hpp"
#include "nielsen.hpp"
#include "spectral.hpp"
#include "traintrack.hpp"
#include "whitehead.hpp"

namespace lonetrack {

enum class LoneAxisVerdict { lone_axis, not_lone_axis, conditional, unknown };

inline std::string to_string(LoneAxisVerdict v) {
    switch (v) {
        case LoneAxisVerdict::lone_axis: return "lone-axis";
        case LoneAxisVerdict::not_lone_axis: return "not-lone-axis";
        case LoneAxisVerdict::conditional: return "conditional";
        case LoneAxisVerdict::unknown: return "unknown";
    }
    return "?";
}

struct LoneAxisReport {
    int rank = 0;
    bool fully_irreducible_asserted = false;
    MatrixClass matrix = MatrixClass::reducible;
    double lambda = 0.0;
    long long rotationless_exponent = 1;
    std::size_t illegal_turns = 0;  // of the rotationless power

    Stability nielsen = Stability::unknown_at_bound;
    std::size_t nielsen_paths = 0;
    int nielsen_bound = 0;
    std::vector<long long> nielsen_periods;  // from the leg dynamics
    std::vector<long long> nielsen_powers_searched;
    std::optional<long long> nielsen_found_at;
    std::optional<bool> oracle_agrees;

    std::optional<HalfInt> index;
    std::string index_source;  // "gates" or "nielsen-paths"
    std::vector<HalfInt> index_list;
    std::optional<HalfInt> gate_index;
    std::optional<bool> index_condition;  // i = 3/2 - r

    std::optional<WhiteheadGraph> ideal_graph;
    std::optional<std::size_t> cut_vertex_count;
    std::optional<bool> cut_vertex_condition;  // no component has a cut vertex

    // When both conditions hold, the power must have exactly one illegal turn.
    std::optional<bool> unique_illegal_turn_check;

    // Sufficient test for full irreducibility (primitive, no periodic Nielsen paths, every
    // local Whitehead graph connected). Informational only; it does not upgrade the verdict.
    bool irreducibility_criterion = false;

    LoneAxisVerdict overall = LoneAxisVerdict::unknown;
    std::string reason;
};

// True when g is a primitive train track without periodic Nielsen paths (certified by
// `nielsen`) all of whose local Whitehead graphs are connected; such g represents a fully
// irreducible class. False means only that the test does not apply.
inline bool irreducibility_criterion(const GraphMap& g, const PeriodicNielsenReport& nielsen) {
    if (!is_train_track(g) || matrix_class(transition_matrix(g)) != MatrixClass::primitive) return false;
    if (periodic_stability(nielsen) != Stability::fully_stable) return false;
    for (std::size_t v = 0; v < g.domain().vertex_count(); ++v) {
        if (local_whitehead_graph(g, static_cast<VertexId>(v)).components().size() != 1) return false;
    }
    return true;
}

inline LoneAxisReport lone_axis_decision(const GraphMap& g, int np_bound = kDefaultNielsenBound, bool fully_irreducible_asserted = false,
                                         std::size_t cell_cap = kLegDynamicsCellCap) {
    if (!g.is_self_map()) throw StageError("input", "not a self-map");
    LoneAxisReport r;
    r.rank = g.domain().rank();
    r.fully_irreducible_asserted = fully_irreducible_asserted;
    if (r.rank < 2) throw StageError("input", "rank must be at least 2");

    auto tt = is_train_track(g);
    if (!tt) throw StageError("train-track", tt.reason);
    r.matrix = matrix_class(transition_matrix(g));
    if (r.matrix != MatrixClass::primitive) throw StageError("primitivity", "transition matrix is " + to_string(r.matrix));
    r.lambda = pf_data(transition_matrix(g)).lambda;

    r.rotationless_exponent = periodic_structure(g).rotationless_exponent;
    auto search = [&] {
        try {
            return find_periodic_nielsen_paths(g, np_bound, cell_cap);
        } catch (const UnknownAtBound& ex) {
            throw StageError("rotationless-power", ex.what());
        }
    }();
    GraphMap p = power(g, static_cast<int>(r.rotationless_exponent));
    r.illegal_turns = gates(p).illegal_turns.size();

    const NielsenPathReport& nielsen = search.base;
    r.nielsen = periodic_stability(search);
    r.nielsen_paths = search.found ? search.found->paths.size() : 0;
    r.nielsen_bound = np_bound;
    if (search.dynamics) r.nielsen_periods = search.dynamics->periods;
    r.nielsen_powers_searched = search.powers_searched;
    r.nielsen_found_at = search.found_at;
    r.oracle_agrees = search.found ? search.found->oracle_agrees : nielsen.oracle_agrees;
    const HalfInt target = HalfInt::from_twice(3 - 2 * static_cast<long long>(r.rank));

    if (r.nielsen == Stability::not_fully_stable) {
        // Nielsen paths rule out the ageometric case; fully irreducible classes with Nielsen
        // paths are geometric or parageometric, both of index 1 - r.
        r.index = HalfInt::integer(1 - r.rank);
        r.index_source = "nielsen-paths";
        r.index_list = {*r.index};
        r.index_condition = *r.index == target;
        r.overall = LoneAxisVerdict::not_lone_axis;
        r.reason = r.nielsen_found_at ? "power " + std::to_string(*r.nielsen_found_at) + " has " + std::to_string(r.nielsen_paths) + " Nielsen path(s)"
                                      : "periodic Nielsen path of period " + std::to_string(r.nielsen_periods.front()) + " in the leg dynamics";
        return r;
    }
    if (r.nielsen == Stability::unknown_at_bound) {
        r.overall = LoneAxisVerdict::unknown;
        r.reason = "periodic Nielsen path search inconclusive: " + search.limit;
        return r;
    }

    r.irreducibility_criterion = irreducibility_criterion(g, search);
    auto idx = index_report(p, nielsen);
    r.index = idx.index_sum;
    r.index_source = "gates";
    r.index_list = idx.index_list;
    r.gate_index = idx.gate_index;
    r.index_condition = idx.index_sum == target;

    auto iw = ideal_whitehead_graph(p, nielsen);
    r.cut_vertex_count = cut_vertices(iw).size();
    r.cut_vertex_condition = *r.cut_vertex_count == 0;
    r.ideal_graph = std::move(iw);

    const bool both = *r.index_condition && *r.cut_vertex_condition;
    if (*r.index_condition) r.unique_illegal_turn_check = r.illegal_turns == 1;
    if (!both) {
        r.overall = LoneAxisVerdict::not_lone_axis;
        r.reason = !*r.index_condition ? "index " + r.index->str() + " differs from 3/2 - r = " + target.str()
                                       : "ideal Whitehead graph has a cut vertex";
        return r;
    }
    if (!*r.unique_illegal_turn_check) {
        throw StageError("illegal-turns", "conditions hold but the rotationless power has " + std::to_string(r.illegal_turns) +
                                              " illegal turns");
    }
    r.overall = fully_irreducible_asserted ? LoneAxisVerdict::lone_axis : LoneAxisVerdict::conditional;
    r.reason = fully_irreducible_asserted ? "both conditions hold" : "both conditions hold; full irreducibility not asserted";
    return r;
}

// Number of illegal turns of each induced representative along a decomposition, one per
// intermediate graph, counted at vertices of valence at least three.
inline std::vector<std::size_t> induced_illegal_turn_counts(const FoldSequence& seq) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < seq.moves.size(); ++k) {
        GraphMap f = seq.induced_representative(k);
        auto gs = gates(f);
        std::size_t n = 0;
        for (const Turn& t : gs.illegal_turns) {
            if (f.domain().valence(f.domain().init(t.first)) >= 3) ++n;
        }
        out.push_back(n);
    }
    return out;
}

// -- axis signatures -----------------------------------------------------------------

struct AxisSignature {
    std::vector<std::string> word;  // primitive cyclic word of fold records, least rotation
    int repetitions = 1;            // copies of `word` in one period of the input
    double lambda = 0.0;
    double period = 0.0;  // log lambda
};

namespace detail {

// Combinatorial type of the graph halfway through a fold, with the fold vertex marked.
inline std::string fold_record(const FoldMove& move) {
    auto b = partial_fold(move, move.amount / 2);
    auto built = b.build();
    return canonical_form(*built.graph, built.marks);
}

inline std::size_t least_rotation(const std::vector<std::string>& w) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < w.size(); ++i) {
        for (std::size_t j = 0; j < w.size(); ++j) {
            const auto& a = w[(i + j) % w.size()];
            const auto& b = w[(best + j) % w.size()];
            if (a != b) {
                if (a < b) best = i;
                break;
            }
        }
    }
    return best;
}

}  // namespace detail

// Canonical description of the periodic fold line of a lone-axis representative. On such
// inputs every stage has a single illegal turn, so the decomposition is forced. One record
// per maximal fold; a power of g repeats the records of g.
inline AxisSignature axis_signature(const GraphMap& g, int np_bound = kDefaultNielsenBound) {
    auto decision = lone_axis_decision(g, np_bound, false);
    if (decision.overall != LoneAxisVerdict::conditional) {
        throw PreconditionError("axis_signature: not lone-axis (" + to_string(decision.overall) + ": " + decision.reason + ")");
    }
    auto seq = stallings_decomposition(g);
    std::vector<std::string> records;
    for (const auto& m : seq.moves) {
        if (m.kind == MoveKind::fold) records.push_back(detail::fold_record(m));
    }
    AxisSignature sig;
    const std::size_t n = records.size();
    std::size_t root = n;
    for (std::size_t d = 1; d <= n; ++d) {
        if (n % d != 0) continue;
        bool periodic = true;
        for (std::size_t i = d; i < n && periodic; ++i) periodic = records[i] == records[i - d];
        if (periodic) {
            root = d;
            break;
        }
    }
    std::vector<std::string> word(records.begin(), records.begin() + static_cast<std::ptrdiff_t>(root));
    std::rotate(word.begin(), word.begin() + static_cast<std::ptrdiff_t>(detail::least_rotation(word)), word.end());
    sig.word = std::move(word);
    sig.repetitions = static_cast<int>(n / std::max<std::size_t>(root, 1));
    sig.lambda = decision.lambda;
    sig.period = std::log(decision.lambda);
    return sig;
}

enum class ConjugacyVerdict { conjugate_powers, not_detected, inapplicable };

inline std::string to_string(ConjugacyVerdict v) {
    switch (v) {
        case ConjugacyVerdict::conjugate_powers: return "conjugate-powers";
        case ConjugacyVerdict::not_detected: return "not-detected";
        case ConjugacyVerdict::inapplicable: return "inapplicable";
    }
    return "?";
}

struct ConjugacyResult {
    ConjugacyVerdict verdict = ConjugacyVerdict::inapplicable;
    int k = 0;
    int l = 0;
    std::string reason;
    std::optional<AxisSignature> first, second;
};

inline constexpr double kLogLambdaTolerance = 1e-8;

// Detects k, l with g1^k and g2^l conjugate by comparing the primitive axis signatures.
// A mismatch is reported as not-detected: equal signatures are sufficient, not known to
// be necessary.
inline ConjugacyResult conjugate_power_check(const GraphMap& g1, const GraphMap& g2, int max_power, int np_bound = kDefaultNielsenBound) {
    if (max_power < 1) throw PreconditionError("conjugate_power_check: max_power must be positive");
    ConjugacyResult out;
    for (const GraphMap* g : {&g1, &g2}) {
        auto d = lone_axis_decision(*g, np_bound, false);
        if (d.overall != LoneAxisVerdict::conditional) {
            out.reason = std::string(g == &g1 ? "first" : "second") + " input is " + to_string(d.overall) + ": " + d.reason;
            return out;
        }
    }
    out.first = axis_signature(g1, np_bound);
    out.second = axis_signature(g2, np_bound);
    out.verdict = ConjugacyVerdict::not_detected;
    if (out.first->word != out.second->word) {
        out.reason = "primitive signatures differ";
        return out;
    }
    const int m1 = out.first->repetitions, m2 = out.second->repetitions;
    const int gcd = std::gcd(m1, m2);
    const int k = m2 / gcd, l = m1 / gcd;
    if (k > max_power || l > max_power) {
        out.reason = "signatures agree but the powers (" + std::to_string(k) + ", " + std::to_string(l) + ") exceed the maximum";
        return out;
    }
    const double gap = std::abs(k * out.first->period - l * out.second->period);
    if (gap > kLogLambdaTolerance) {
        out.reason = "signatures agree but k log lambda1 - l log lambda2 = " + std::to_string(gap);
        return out;
    }
    out.verdict = ConjugacyVerdict::conjugate_powers;
    out.k = k;
    out.l = l;
    out.reason = "primitive signatures agree";
    return out;
}

}  // namespace lonetrack
