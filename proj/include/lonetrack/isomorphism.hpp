#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "graph.hpp"

namespace lonetrack {

struct GraphIsomorphism {
    std::vector<VertexId> vertex_map;
    std::vector<EdgeId> edge_map;  // oriented edge of the first graph -> oriented edge of the second
};

namespace detail {

// One direction seen from its base vertex: (mark of d, mark of reverse d, color of far end).
using DirectionKey = std::tuple<int, int, int>;
using VertexSignature = std::pair<int, std::vector<DirectionKey>>;

inline int mark_of(std::span<const int> marks, EdgeId e) {
    return marks.empty() ? 0 : marks[static_cast<std::size_t>(e)];
}

// Colour refinement run in lockstep over several graphs so colours stay comparable
// between them. Colours are ranks of label-independent signatures.
inline void refine(std::span<const MarkedGraph* const> graphs, std::span<const std::span<const int>> marks,
                   std::vector<std::vector<int>>& colors) {
    std::size_t classes = 0;
    for (;;) {
        std::vector<std::vector<VertexSignature>> sigs(graphs.size());
        std::vector<VertexSignature> all;
        for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
            const MarkedGraph& g = *graphs[gi];
            for (std::size_t v = 0; v < g.vertex_count(); ++v) {
                VertexSignature s;
                s.first = colors[gi][v];
                for (EdgeId d : g.directions_at(static_cast<VertexId>(v))) {
                    s.second.emplace_back(mark_of(marks[gi], d), mark_of(marks[gi], reverse(d)), colors[gi][g.term(d)]);
                }
                std::sort(s.second.begin(), s.second.end());
                sigs[gi].push_back(s);
                all.push_back(std::move(s));
            }
        }
        std::sort(all.begin(), all.end());
        all.erase(std::unique(all.begin(), all.end()), all.end());
        for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
            for (std::size_t v = 0; v < sigs[gi].size(); ++v) {
                colors[gi][v] = static_cast<int>(std::lower_bound(all.begin(), all.end(), sigs[gi][v]) - all.begin());
            }
        }
        if (all.size() == classes) return;
        classes = all.size();
    }
}

using EdgeCode = std::tuple<int, int, int, int>;

inline std::vector<EdgeCode> encode(const MarkedGraph& g, std::span<const int> marks, const std::vector<int>& label) {
    std::vector<EdgeCode> codes;
    for (std::size_t k = 0; k < g.edge_count(); ++k) {
        EdgeId e = static_cast<EdgeId>(2 * k);
        std::pair<int, int> a{label[g.init(e)], mark_of(marks, e)};
        std::pair<int, int> b{label[g.term(e)], mark_of(marks, reverse(e))};
        if (b < a) std::swap(a, b);
        codes.emplace_back(a.first, b.first, a.second, b.second);
    }
    std::sort(codes.begin(), codes.end());
    return codes;
}

inline void canonical_search(const MarkedGraph& g, std::span<const int> marks, std::vector<int> colors,
                             std::optional<std::vector<EdgeCode>>& best) {
    const MarkedGraph* gp = &g;
    std::vector<std::vector<int>> wrap{std::move(colors)};
    std::span<const int> mk[1] = {marks};
    refine(std::span<const MarkedGraph* const>(&gp, 1), mk, wrap);
    std::vector<int>& c = wrap[0];

    std::map<int, std::vector<VertexId>> cells;
    for (std::size_t v = 0; v < c.size(); ++v) cells[c[v]].push_back(static_cast<VertexId>(v));
    const std::vector<VertexId>* target = nullptr;
    for (const auto& [color, members] : cells) {
        if (members.size() > 1 && (!target || members.size() < target->size())) target = &members;
    }
    if (!target) {
        auto code = encode(g, marks, c);
        if (!best || code < *best) best = std::move(code);
        return;
    }
    for (VertexId v : *target) {
        // Individualise v: it keeps the cell's colour, its cell-mates move just above.
        std::vector<int> next(c.size());
        for (std::size_t u = 0; u < c.size(); ++u) next[u] = 2 * c[u] + ((c[u] == c[v] && static_cast<VertexId>(u) != v) ? 1 : 0);
        canonical_search(g, marks, std::move(next), best);
    }
}

}  // namespace detail

// Label-independent description of the graph's combinatorial type, with optional
// integer marks on oriented edges (directions). Equal strings iff isomorphic by a
// mark-preserving isomorphism. Exhaustive individualisation-refinement; meant for
// small graphs.
inline std::string canonical_form(const MarkedGraph& g, std::span<const int> direction_marks = {}) {
    if (!direction_marks.empty() && direction_marks.size() != g.oriented_edge_count()) {
        throw PreconditionError("canonical_form: one mark per oriented edge expected");
    }
    std::optional<std::vector<detail::EdgeCode>> best;
    detail::canonical_search(g, direction_marks, std::vector<int>(g.vertex_count(), 0), best);
    std::string out = "V" + std::to_string(g.vertex_count()) + "E" + std::to_string(g.edge_count());
    for (const auto& [a, b, ma, mb] : *best) {
        out += "|" + std::to_string(a) + "," + std::to_string(b);
        if (ma || mb) out += ":" + std::to_string(ma) + "," + std::to_string(mb);
    }
    return out;
}

// Finds a vertex/edge bijection commuting with reversal and endpoints (and matching
// lengths within `tolerance` when requested). Deterministic: vertices are tried in
// id order after colour refinement.
inline std::optional<GraphIsomorphism> are_isomorphic(const MarkedGraph& g1, const MarkedGraph& g2, bool respect_lengths,
                                                      double tolerance = kLengthTolerance) {
    if (g1.vertex_count() != g2.vertex_count() || g1.edge_count() != g2.edge_count()) return std::nullopt;
    if (respect_lengths && (!g1.has_lengths() || !g2.has_lengths())) {
        throw PreconditionError("are_isomorphic: lengths requested but a graph has none");
    }
    const std::size_t n = g1.vertex_count();
    if (n == 0) return GraphIsomorphism{};

    const MarkedGraph* graphs[2] = {&g1, &g2};
    std::span<const int> marks[2] = {{}, {}};
    std::vector<std::vector<int>> colors{std::vector<int>(n, 0), std::vector<int>(n, 0)};
    detail::refine(graphs, marks, colors);
    {
        auto h1 = colors[0], h2 = colors[1];
        std::sort(h1.begin(), h1.end());
        std::sort(h2.begin(), h2.end());
        if (h1 != h2) return std::nullopt;
    }

    // Edges between each unordered vertex pair, as lists of pair indices.
    auto bucket = [](const MarkedGraph& g) {
        std::map<std::pair<VertexId, VertexId>, std::vector<int>> out;
        for (std::size_t k = 0; k < g.edge_count(); ++k) {
            VertexId a = g.init(static_cast<EdgeId>(2 * k)), b = g.term(static_cast<EdgeId>(2 * k));
            out[{std::min(a, b), std::max(a, b)}].push_back(static_cast<int>(k));
        }
        return out;
    };
    auto buckets1 = bucket(g1), buckets2 = bucket(g2);
    auto sorted_lengths = [&](const MarkedGraph& g, const std::vector<int>& pairs) {
        std::vector<double> ls;
        for (int k : pairs) ls.push_back(g.length(2 * k));
        std::sort(ls.begin(), ls.end());
        return ls;
    };
    static const std::vector<int> kNone;
    auto between = [](const auto& buckets, VertexId a, VertexId b) -> const std::vector<int>& {
        auto it = buckets.find({std::min(a, b), std::max(a, b)});
        return it == buckets.end() ? kNone : it->second;
    };
    auto compatible = [&](VertexId a1, VertexId b1, VertexId a2, VertexId b2) {
        const auto& e1 = between(buckets1, a1, b1);
        const auto& e2 = between(buckets2, a2, b2);
        if (e1.size() != e2.size()) return false;
        if (respect_lengths && !e1.empty()) {
            auto l1 = sorted_lengths(g1, e1), l2 = sorted_lengths(g2, e2);
            for (std::size_t i = 0; i < l1.size(); ++i) {
                if (std::abs(l1[i] - l2[i]) > tolerance) return false;
            }
        }
        return true;
    };

    // Breadth-first order from the vertex with the rarest colour keeps the search local.
    std::vector<VertexId> order;
    {
        std::map<int, int> freq;
        for (int c : colors[0]) ++freq[c];
        VertexId start = 0;
        for (std::size_t v = 1; v < n; ++v) {
            if (freq[colors[0][v]] < freq[colors[0][start]]) start = static_cast<VertexId>(v);
        }
        std::vector<char> seen(n, 0);
        std::vector<VertexId> queue{start};
        seen[start] = 1;
        for (std::size_t i = 0; i < queue.size(); ++i) {
            for (EdgeId d : g1.directions_at(queue[i])) {
                VertexId w = g1.term(d);
                if (!seen[w]) {
                    seen[w] = 1;
                    queue.push_back(w);
                }
            }
        }
        for (std::size_t v = 0; v < n; ++v) {
            if (!seen[v]) queue.push_back(static_cast<VertexId>(v));
        }
        order = std::move(queue);
    }

    std::vector<VertexId> phi(n, -1);
    std::vector<char> used(n, 0);
    auto extend = [&](auto&& self, std::size_t depth) -> bool {
        if (depth == n) return true;
        VertexId u = order[depth];
        for (std::size_t w = 0; w < n; ++w) {
            if (used[w] || colors[1][w] != colors[0][u]) continue;
            bool ok = compatible(u, u, static_cast<VertexId>(w), static_cast<VertexId>(w));
            for (std::size_t i = 0; ok && i < depth; ++i) {
                ok = compatible(u, order[i], static_cast<VertexId>(w), phi[order[i]]);
            }
            if (!ok) continue;
            phi[u] = static_cast<VertexId>(w);
            used[w] = 1;
            if (self(self, depth + 1)) return true;
            used[w] = 0;
            phi[u] = -1;
        }
        return false;
    };
    if (!extend(extend, 0)) return std::nullopt;

    GraphIsomorphism iso;
    iso.vertex_map = phi;
    iso.edge_map.assign(g1.oriented_edge_count(), -1);
    for (const auto& [ends, pairs1] : buckets1) {
        auto pairs2 = between(buckets2, phi[ends.first], phi[ends.second]);
        auto p1 = pairs1;
        if (respect_lengths) {
            auto by_length = [](const MarkedGraph& g) {
                return [&g](int a, int b) { return g.length(2 * a) < g.length(2 * b) || (g.length(2 * a) == g.length(2 * b) && a < b); };
            };
            std::sort(p1.begin(), p1.end(), by_length(g1));
            std::sort(pairs2.begin(), pairs2.end(), by_length(g2));
        }
        for (std::size_t i = 0; i < p1.size(); ++i) {
            EdgeId e = 2 * p1[i];
            EdgeId f = 2 * pairs2[i];
            if (g2.init(f) != phi[g1.init(e)] || g2.term(f) != phi[g1.term(e)]) f = reverse(f);
            iso.edge_map[e] = f;
            iso.edge_map[reverse(e)] = reverse(f);
        }
    }
    return iso;
}

}  // namespace lonetrack
