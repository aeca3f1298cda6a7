#pragma once

#include <algorithm>
#include <compare>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "rational.hpp"
#include "spectral.hpp"

namespace lonetrack {

// Unordered pair of distinct directions at a common vertex, stored with first < second.
struct Turn {
    EdgeId first = 0;
    EdgeId second = 0;

    static Turn of(EdgeId a, EdgeId b) { return a < b ? Turn{a, b} : Turn{b, a}; }
    bool degenerate() const { return first == second; }
    friend auto operator<=>(const Turn&, const Turn&) = default;
};

inline std::string turn_string(const MarkedGraph& g, const Turn& t) {
    return "{" + g.label(t.first) + "," + g.label(t.second) + "}";
}

// Turns crossed by a path: at each interior vertex, the reverse of the incoming edge
// together with the outgoing edge.
inline std::vector<Turn> turns_crossed(std::span<const EdgeId> path) {
    std::vector<Turn> out;
    for (std::size_t i = 1; i < path.size(); ++i) out.push_back(Turn::of(reverse(path[i - 1]), path[i]));
    return out;
}

// Dg, indexed by direction (oriented edge).
using DirectionMap = std::vector<EdgeId>;

inline DirectionMap direction_map(const GraphMap& g) {
    if (!g.is_self_map()) throw PreconditionError("direction_map: map is not a self-map");
    DirectionMap dg(g.domain().oriented_edge_count());
    for (std::size_t d = 0; d < dg.size(); ++d) {
        const auto& img = g.image(static_cast<EdgeId>(d));
        if (img.empty()) throw PreconditionError("direction_map: empty edge image");
        dg[d] = img.front();
    }
    return dg;
}

struct GateStructure {
    std::vector<int> gate_of;                 // direction -> gate index
    std::vector<std::vector<EdgeId>> gates;   // sorted by (vertex, smallest direction)
    std::vector<VertexId> gate_vertex;
    std::vector<Turn> illegal_turns;          // sorted

    std::size_t gates_at(VertexId v) const {
        return static_cast<std::size_t>(std::count(gate_vertex.begin(), gate_vertex.end(), v));
    }
    bool legal(const Turn& t) const { return gate_of[t.first] != gate_of[t.second]; }
};

// Directions at a vertex share a gate iff some iterate of Dg identifies them. Orbits are
// followed for (#directions)^2 steps, past the point where every orbit is periodic.
inline GateStructure gates(const GraphMap& g) {
    const MarkedGraph& G = g.domain();
    const auto dg = direction_map(g);
    const std::size_t n = dg.size();
    std::vector<EdgeId> far(n);
    std::iota(far.begin(), far.end(), 0);
    for (std::size_t k = 0; k < n * n; ++k) {
        bool moved = false;
        for (auto& d : far) {
            EdgeId next = dg[static_cast<std::size_t>(d)];
            moved = moved || next != d;
            d = next;
        }
        if (!moved) break;
    }

    GateStructure gs;
    gs.gate_of.assign(n, -1);
    for (std::size_t v = 0; v < G.vertex_count(); ++v) {
        for (EdgeId d : G.directions_at(static_cast<VertexId>(v))) {
            if (gs.gate_of[d] != -1) continue;
            int id = static_cast<int>(gs.gates.size());
            gs.gates.emplace_back();
            gs.gate_vertex.push_back(static_cast<VertexId>(v));
            for (EdgeId e : G.directions_at(static_cast<VertexId>(v))) {
                if (gs.gate_of[e] == -1 && far[e] == far[d]) {
                    gs.gate_of[e] = id;
                    gs.gates[id].push_back(e);
                }
            }
        }
    }
    for (const auto& gate : gs.gates) {
        for (std::size_t i = 0; i < gate.size(); ++i)
            for (std::size_t j = i + 1; j < gate.size(); ++j) gs.illegal_turns.push_back(Turn::of(gate[i], gate[j]));
    }
    std::sort(gs.illegal_turns.begin(), gs.illegal_turns.end());
    return gs;
}

struct TrainTrackVerdict {
    bool train_track = false;
    std::optional<EdgeId> edge;  // witness: an edge whose image crosses an illegal turn
    std::optional<Turn> turn;
    std::string reason;

    explicit operator bool() const { return train_track; }
};

// Train track iff every edge image is a nonempty tight path crossing only legal turns;
// legality is preserved by Dg, so this covers every iterate.
inline TrainTrackVerdict is_train_track(const GraphMap& g) {
    if (!g.is_self_map()) return {false, std::nullopt, std::nullopt, "not a self-map"};
    auto gs = gates(g);
    for (std::size_t e = 0; e < g.domain().oriented_edge_count(); e += 2) {
        const auto& img = g.image(static_cast<EdgeId>(e));
        for (const Turn& t : turns_crossed(img)) {
            if (!gs.legal(t)) {
                return {false, static_cast<EdgeId>(e), t,
                        "image of " + g.domain().label(static_cast<EdgeId>(e)) + " crosses illegal turn " + turn_string(g.domain(), t)};
            }
        }
    }
    return {true, std::nullopt, std::nullopt, ""};
}

inline void require_train_track(const GraphMap& g, const char* op) {
    auto verdict = is_train_track(g);
    if (!verdict) throw PreconditionError(std::string(op) + ": not a train track map (" + verdict.reason + ")");
}

struct PeriodicStructure {
    std::vector<int> vertex_period;     // 0 when not periodic
    std::vector<int> direction_period;  // 0 when not periodic
    std::vector<VertexId> principal;    // sorted
    // Principal vertices so far come from gate counts only; endpoints of Nielsen paths
    // have not been added yet.
    bool pending_nielsen_endpoints = true;
    long long rotationless_exponent = 1;
};

namespace detail {

inline long long lcm_checked(long long a, long long b) {
    long long l = std::lcm(a, b);
    if (l <= 0 || l > 1'000'000'000LL) throw Error("rotationless exponent overflow");
    return l;
}

inline long long exponent_for(const GraphMap& g, const PeriodicStructure& ps) {
    long long r = 1;
    for (VertexId v : ps.principal) {
        r = lcm_checked(r, ps.vertex_period[v]);
        for (EdgeId d : g.domain().directions_at(v)) {
            if (ps.direction_period[d] > 0) r = lcm_checked(r, ps.direction_period[d]);
        }
    }
    return r;
}

}  // namespace detail

inline PeriodicStructure periodic_structure(const GraphMap& g) {
    require_train_track(g, "periodic_structure");
    const MarkedGraph& G = g.domain();
    PeriodicStructure ps;
    ps.vertex_period.assign(G.vertex_count(), 0);
    for (std::size_t v = 0; v < G.vertex_count(); ++v) {
        VertexId w = static_cast<VertexId>(v);
        for (std::size_t k = 1; k <= G.vertex_count(); ++k) {
            w = g.vertex_image(w);
            if (w == static_cast<VertexId>(v)) {
                ps.vertex_period[v] = static_cast<int>(k);
                break;
            }
        }
    }
    const auto dg = direction_map(g);
    ps.direction_period.assign(dg.size(), 0);
    for (std::size_t d = 0; d < dg.size(); ++d) {
        EdgeId e = static_cast<EdgeId>(d);
        for (std::size_t k = 1; k <= dg.size(); ++k) {
            e = dg[static_cast<std::size_t>(e)];
            if (e == static_cast<EdgeId>(d)) {
                ps.direction_period[d] = static_cast<int>(k);
                break;
            }
        }
    }
    const auto gs = gates(g);
    for (std::size_t v = 0; v < G.vertex_count(); ++v) {
        if (ps.vertex_period[v] > 0 && gs.gates_at(static_cast<VertexId>(v)) >= 3) ps.principal.push_back(static_cast<VertexId>(v));
    }
    ps.rotationless_exponent = detail::exponent_for(g, ps);
    return ps;
}

// Adds endpoints of Nielsen paths found by a search to the principal set.
inline PeriodicStructure with_nielsen_endpoints(const GraphMap& g, PeriodicStructure ps, const std::vector<VertexId>& endpoints) {
    for (VertexId v : endpoints) {
        if (v >= 0 && static_cast<std::size_t>(v) < ps.vertex_period.size() && ps.vertex_period[v] > 0) ps.principal.push_back(v);
    }
    std::sort(ps.principal.begin(), ps.principal.end());
    ps.principal.erase(std::unique(ps.principal.begin(), ps.principal.end()), ps.principal.end());
    ps.pending_nielsen_endpoints = false;
    ps.rotationless_exponent = detail::exponent_for(g, ps);
    return ps;
}

inline bool is_rotationless(const GraphMap& g) { return periodic_structure(g).rotationless_exponent == 1; }

// Smallest set of turns containing every turn crossed by an edge image and closed under
// {d, d'} -> {Dg d, Dg d'}: the turns taken by leaves of the attracting lamination.
inline std::vector<Turn> taken_turns(const GraphMap& g) {
    require_train_track(g, "taken_turns");
    if (matrix_class(transition_matrix(g)) != MatrixClass::primitive) {
        throw PreconditionError("taken_turns: transition matrix is not primitive");
    }
    const auto dg = direction_map(g);
    std::set<Turn> seen;
    std::vector<Turn> work;
    for (std::size_t e = 0; e < g.domain().oriented_edge_count(); e += 2) {
        for (const Turn& t : turns_crossed(g.image(static_cast<EdgeId>(e)))) {
            if (seen.insert(t).second) work.push_back(t);
        }
    }
    while (!work.empty()) {
        Turn t = work.back();
        work.pop_back();
        Turn next = Turn::of(dg[t.first], dg[t.second]);
        if (next.degenerate()) throw Error("taken_turns: a taken turn degenerated (map is not a train track)");
        if (seen.insert(next).second) work.push_back(next);
    }
    return {seen.begin(), seen.end()};
}

// GI(g): sum over vertices of 1 - #gates/2. Valence-2 vertices with two gates add zero.
inline HalfInt gate_index_sum(const GraphMap& g) {
    require_train_track(g, "gate_index_sum");
    const auto gs = gates(g);
    HalfInt total;
    for (std::size_t v = 0; v < g.domain().vertex_count(); ++v) {
        total += HalfInt::from_twice(2 - static_cast<long long>(gs.gates_at(static_cast<VertexId>(v))));
    }
    return total;
}

}  // namespace lonetrack
