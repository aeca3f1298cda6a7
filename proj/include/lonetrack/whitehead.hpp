#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "nielsen.hpp"
#include "rational.hpp"
#include "spectral.hpp"
#include "traintrack.hpp"

namespace lonetrack {

enum class WhiteheadFlavor { local, stable, ideal };

inline std::string to_string(WhiteheadFlavor f) {
    switch (f) {
        case WhiteheadFlavor::local: return "local";
        case WhiteheadFlavor::stable: return "stable";
        case WhiteheadFlavor::ideal: return "ideal";
    }
    return "?";
}

// Finite simple graph. Vertices stand for directions (local) or gates named by their
// periodic direction (stable, ideal); `base` records the graph vertex they sit at.
struct WhiteheadGraph {
    WhiteheadFlavor flavor = WhiteheadFlavor::local;
    std::vector<std::string> labels;
    std::vector<EdgeId> directions;
    std::vector<VertexId> base;
    std::set<std::pair<int, int>> edges;  // i < j

    std::size_t vertex_count() const { return labels.size(); }
    std::size_t edge_count() const { return edges.size(); }

    int add_vertex(std::string label, EdgeId direction, VertexId at) {
        labels.push_back(std::move(label));
        directions.push_back(direction);
        base.push_back(at);
        return static_cast<int>(labels.size() - 1);
    }

    // Loops are dropped and repeated edges collapse.
    void add_edge(int a, int b) {
        if (a == b) return;
        edges.insert({std::min(a, b), std::max(a, b)});
    }

    std::vector<std::vector<int>> adjacency() const {
        std::vector<std::vector<int>> adj(vertex_count());
        for (auto [a, b] : edges) {
            adj[a].push_back(b);
            adj[b].push_back(a);
        }
        return adj;
    }

    // Vertex sets of connected components, each sorted, ordered by smallest member.
    std::vector<std::vector<int>> components() const {
        auto adj = adjacency();
        std::vector<int> comp(vertex_count(), -1);
        std::vector<std::vector<int>> out;
        for (std::size_t s = 0; s < vertex_count(); ++s) {
            if (comp[s] != -1) continue;
            out.emplace_back();
            std::vector<int> stack{static_cast<int>(s)};
            comp[s] = static_cast<int>(out.size() - 1);
            while (!stack.empty()) {
                int v = stack.back();
                stack.pop_back();
                out.back().push_back(v);
                for (int w : adj[v]) {
                    if (comp[w] == -1) {
                        comp[w] = comp[s];
                        stack.push_back(w);
                    }
                }
            }
            std::sort(out.back().begin(), out.back().end());
        }
        return out;
    }

    // Subgraph induced on `keep`, vertices renumbered in order.
    WhiteheadGraph induced(const std::vector<int>& keep) const {
        WhiteheadGraph out;
        out.flavor = flavor;
        std::map<int, int> index;
        for (int v : keep) index[v] = out.add_vertex(labels[v], directions[v], base[v]);
        for (auto [a, b] : edges) {
            if (index.count(a) && index.count(b)) out.add_edge(index[a], index[b]);
        }
        return out;
    }
};

namespace detail {

inline std::string whitehead_label(const MarkedGraph& G, EdgeId d, bool qualify) {
    return qualify ? G.vertex_name(G.init(d)) + ":" + G.label(d) : G.label(d);
}

}  // namespace detail

// Directions at v, joined along the taken turns at v.
inline WhiteheadGraph local_whitehead_graph(const GraphMap& g, VertexId v) {
    const MarkedGraph& G = g.domain();
    if (v < 0 || static_cast<std::size_t>(v) >= G.vertex_count()) throw PreconditionError("local_whitehead_graph: no such vertex");
    auto turns = taken_turns(g);
    WhiteheadGraph w;
    w.flavor = WhiteheadFlavor::local;
    std::map<EdgeId, int> index;
    for (EdgeId d : G.directions_at(v)) index[d] = w.add_vertex(G.label(d), d, v);
    for (const Turn& t : turns) {
        if (index.count(t.first) && index.count(t.second)) w.add_edge(index[t.first], index[t.second]);
    }
    return w;
}

namespace detail {

// Gates at v as Whitehead vertices, each named by its periodic direction, with the taken
// turns at v pushed to gate pairs.
inline void add_stable_part(const GraphMap& g, VertexId v, const GateStructure& gs, const PeriodicStructure& ps,
                            const std::vector<Turn>& turns, bool qualify, WhiteheadGraph& w) {
    const MarkedGraph& G = g.domain();
    std::map<int, int> of_gate;
    for (std::size_t gate = 0; gate < gs.gates.size(); ++gate) {
        if (gs.gate_vertex[gate] != v) continue;
        const auto& members = gs.gates[gate];
        EdgeId name = members.front();
        int periodic = 0;
        for (EdgeId d : members) {
            if (ps.direction_period[d] > 0) {
                if (periodic++ == 0) name = d;
            }
        }
        if (periodic != 1) {
            throw PreconditionError("stable_whitehead_graph: gate " + G.label(members.front()) + " at " + G.vertex_name(v) +
                                    " has " + std::to_string(periodic) + " periodic directions");
        }
        of_gate[static_cast<int>(gate)] = w.add_vertex(whitehead_label(G, name, qualify), name, v);
    }
    for (const Turn& t : turns) {
        if (G.init(t.first) != v) continue;
        w.add_edge(of_gate.at(gs.gate_of[t.first]), of_gate.at(gs.gate_of[t.second]));
    }
}

inline void require_rotationless_train_track(const GraphMap& g, const char* op) {
    require_train_track(g, op);
    if (!is_rotationless(g)) throw PreconditionError(std::string(op) + ": map is not rotationless");
}

}  // namespace detail

inline WhiteheadGraph stable_whitehead_graph(const GraphMap& g, VertexId v) {
    detail::require_rotationless_train_track(g, "stable_whitehead_graph");
    const MarkedGraph& G = g.domain();
    if (v < 0 || static_cast<std::size_t>(v) >= G.vertex_count()) throw PreconditionError("stable_whitehead_graph: no such vertex");
    auto ps = periodic_structure(g);
    if (ps.vertex_period[v] == 0) throw PreconditionError("stable_whitehead_graph: vertex " + G.vertex_name(v) + " is not periodic");
    WhiteheadGraph w;
    w.flavor = WhiteheadFlavor::stable;
    detail::add_stable_part(g, v, gates(g), ps, taken_turns(g), false, w);
    return w;
}

// Raised when a representative carries Nielsen paths, where the gate-based constructions
// of the ideal Whitehead graph and the index do not apply.
class UnsupportedRepresentative : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

namespace detail {

inline void require_nielsen_free(const NielsenPathReport& report, const char* op) {
    if (!report.paths.empty()) {
        throw UnsupportedRepresentative(std::string(op) + ": representative has " + std::to_string(report.paths.size()) +
                                        " Nielsen path(s)");
    }
    if (!report.exhaustive && !report.free_by_leg_dynamics) {
        throw UnknownAtBound(std::string(op) + ": Nielsen path search inconclusive at bound " + std::to_string(report.search_bound) +
                             "; raise the bound");
    }
}

inline void require_ideal_preconditions(const GraphMap& g, const char* op) {
    require_rotationless_train_track(g, op);
    if (matrix_class(transition_matrix(g)) != MatrixClass::primitive) {
        throw PreconditionError(std::string(op) + ": transition matrix is not primitive");
    }
}

}  // namespace detail

// Disjoint union of the stable Whitehead graphs at the principal vertices, keeping the
// components with at least three vertices. `nielsen` must come from the same map.
inline WhiteheadGraph ideal_whitehead_graph(const GraphMap& g, const NielsenPathReport& nielsen) {
    detail::require_ideal_preconditions(g, "ideal_whitehead_graph");
    detail::require_nielsen_free(nielsen, "ideal_whitehead_graph");
    auto ps = periodic_structure(g);
    auto gs = gates(g);
    auto turns = taken_turns(g);
    WhiteheadGraph all;
    all.flavor = WhiteheadFlavor::ideal;
    bool qualify = ps.principal.size() > 1;
    for (VertexId v : ps.principal) detail::add_stable_part(g, v, gs, ps, turns, qualify, all);
    std::vector<int> keep;
    for (const auto& comp : all.components()) {
        if (comp.size() >= 3) keep.insert(keep.end(), comp.begin(), comp.end());
    }
    std::sort(keep.begin(), keep.end());
    return all.induced(keep);
}

inline WhiteheadGraph ideal_whitehead_graph(const GraphMap& g, int bound = kDefaultNielsenBound) {
    detail::require_ideal_preconditions(g, "ideal_whitehead_graph");
    return ideal_whitehead_graph(g, find_nielsen_paths(g, bound));
}

struct IndexReport {
    std::vector<HalfInt> index_list;  // by increasing absolute value
    HalfInt index_sum;
    std::vector<std::pair<VertexId, std::size_t>> gate_counts;  // principal vertex, #gates
    int rank = 0;
    HalfInt gate_index;  // GI(g)
    bool within_bounds = false;  // 1 - r <= i < 0 and every entry <= -1/2
};

inline IndexReport index_report(const GraphMap& g, const NielsenPathReport& nielsen) {
    detail::require_ideal_preconditions(g, "index_report");
    detail::require_nielsen_free(nielsen, "index_report");
    auto ps = periodic_structure(g);
    auto gs = gates(g);
    IndexReport r;
    r.rank = g.domain().rank();
    for (VertexId v : ps.principal) {
        std::size_t k = gs.gates_at(v);
        r.gate_counts.emplace_back(v, k);
        HalfInt entry = HalfInt::from_twice(2 - static_cast<long long>(k));
        r.index_list.push_back(entry);
        r.index_sum += entry;
    }
    std::stable_sort(r.index_list.begin(), r.index_list.end(), [](HalfInt a, HalfInt b) { return a.abs() < b.abs(); });
    r.gate_index = gate_index_sum(g);
    if (r.gate_index > r.index_sum) throw Error("index_report: GI exceeds the rotationless index");
    r.within_bounds = HalfInt::integer(1 - r.rank) <= r.index_sum && r.index_sum < HalfInt{};
    for (HalfInt x : r.index_list) r.within_bounds = r.within_bounds && x <= HalfInt::from_twice(-1);
    return r;
}

inline IndexReport index_report(const GraphMap& g, int bound = kDefaultNielsenBound) {
    detail::require_ideal_preconditions(g, "index_report");
    return index_report(g, find_nielsen_paths(g, bound));
}

// Index read off a Whitehead graph: sum over components of 1 - (#vertices)/2.
inline HalfInt component_index(const WhiteheadGraph& w) {
    HalfInt sum;
    for (const auto& c : w.components()) sum += HalfInt::from_twice(2 - static_cast<long long>(c.size()));
    return sum;
}

// Articulation points, by an iterative depth-first search with low-link values.
inline std::vector<int> cut_vertices(const WhiteheadGraph& w) {
    const int n = static_cast<int>(w.vertex_count());
    auto adj = w.adjacency();
    std::vector<int> disc(n, -1), low(n, 0), parent(n, -1);
    std::vector<char> cut(n, 0);
    int time = 0;
    for (int root = 0; root < n; ++root) {
        if (disc[root] != -1) continue;
        int root_children = 0;
        std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
        disc[root] = low[root] = time++;
        while (!stack.empty()) {
            auto& [v, next] = stack.back();
            if (next < adj[v].size()) {
                int u = adj[v][next++];
                if (disc[u] == -1) {
                    parent[u] = v;
                    disc[u] = low[u] = time++;
                    if (v == root) ++root_children;
                    stack.emplace_back(u, 0);
                } else if (u != parent[v]) {
                    low[v] = std::min(low[v], disc[u]);
                }
                continue;
            }
            int done = v;
            stack.pop_back();
            if (stack.empty()) break;
            int p = stack.back().first;
            low[p] = std::min(low[p], low[done]);
            if (p != root && low[done] >= disc[p]) cut[p] = 1;
        }
        if (root_children > 1) cut[root] = 1;
    }
    std::vector<int> out;
    for (int v = 0; v < n; ++v) {
        if (cut[v]) out.push_back(v);
    }
    return out;
}

inline std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

inline std::string to_dot(const WhiteheadGraph& w, const std::string& name = "whitehead") {
    std::string out = "graph \"" + dot_escape(name) + "\" {\n";
    out += "  label=\"" + to_string(w.flavor) + "\";\n";
    for (std::size_t v = 0; v < w.vertex_count(); ++v) {
        out += "  n" + std::to_string(v) + " [label=\"" + dot_escape(w.labels[v]) + "\"];\n";
    }
    for (auto [a, b] : w.edges) out += "  n" + std::to_string(a) + " -- n" + std::to_string(b) + ";\n";
    out += "}\n";
    return out;
}

}  // namespace lonetrack
