#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "nielsen.hpp"
#include "spectral.hpp"
#include "traintrack.hpp"

namespace lonetrack {

// Mutable edge list used for graph surgery. Oriented ids follow the MarkedGraph
// convention (2k, 2k+1) over the builder's own edge indices; dead entries are skipped
// when building.
struct GraphBuilder {
    struct Vertex {
        std::string name;
        bool alive = true;
    };
    struct Edge {
        std::string name;
        VertexId from = 0;
        VertexId to = 0;
        double length = 0.0;
        int mark_forward = 0;
        int mark_backward = 0;
        bool alive = true;
    };

    std::vector<Vertex> vertices;
    std::vector<Edge> edges;
    bool has_lengths = false;

    static GraphBuilder from(const MarkedGraph& g) {
        GraphBuilder b;
        for (std::size_t v = 0; v < g.vertex_count(); ++v) b.vertices.push_back({g.vertex_name(static_cast<VertexId>(v))});
        b.has_lengths = g.has_lengths();
        for (std::size_t k = 0; k < g.edge_count(); ++k) {
            EdgeId e = static_cast<EdgeId>(2 * k);
            b.edges.push_back({g.edge_name(static_cast<int>(k)), g.init(e), g.term(e), b.has_lengths ? g.length(e) : 0.0});
        }
        return b;
    }

    VertexId init(EdgeId e) const { return is_positive(e) ? edges[pair_of(e)].from : edges[pair_of(e)].to; }
    VertexId term(EdgeId e) const { return init(reverse(e)); }
    int mark(EdgeId e) const { return is_positive(e) ? edges[pair_of(e)].mark_forward : edges[pair_of(e)].mark_backward; }
    void set_mark(EdgeId e, int m) { (is_positive(e) ? edges[pair_of(e)].mark_forward : edges[pair_of(e)].mark_backward) = m; }

    std::vector<EdgeId> directions_at(VertexId v) const {
        std::vector<EdgeId> out;
        for (std::size_t k = 0; k < edges.size(); ++k) {
            if (!edges[k].alive) continue;
            if (edges[k].from == v) out.push_back(static_cast<EdgeId>(2 * k));
            if (edges[k].to == v) out.push_back(static_cast<EdgeId>(2 * k + 1));
        }
        return out;
    }

    std::set<std::string> names() const {
        std::set<std::string> out;
        for (const auto& v : vertices) out.insert(v.name);
        for (const auto& e : edges) out.insert(e.name);
        return out;
    }

    VertexId add_vertex(const std::string& base) {
        vertices.push_back({detail::fresh_name(names(), base)});
        return static_cast<VertexId>(vertices.size() - 1);
    }

    int add_edge(const std::string& base, VertexId from, VertexId to, double length = 0.0) {
        edges.push_back({detail::fresh_name(names(), base), from, to, length});
        return static_cast<int>(edges.size() - 1);
    }

    // Merges the two edges at each valence-2 vertex into one, carrying lengths and marks.
    void suppress_valence_two() {
        for (bool changed = true; changed;) {
            changed = false;
            for (std::size_t v = 0; v < vertices.size(); ++v) {
                if (!vertices[v].alive) continue;
                auto ds = directions_at(static_cast<VertexId>(v));
                if (ds.size() != 2 || pair_of(ds[0]) == pair_of(ds[1])) continue;
                EdgeId in = reverse(ds[0]), out = ds[1];
                Edge merged{edges[pair_of(in)].name, init(in), term(out),
                            edges[pair_of(in)].length + edges[pair_of(out)].length, mark(in), mark(reverse(out))};
                edges[pair_of(in)].alive = false;
                edges[pair_of(out)].alive = false;
                vertices[v].alive = false;
                edges.push_back(merged);
                changed = true;
            }
        }
    }

    double volume() const {
        double total = 0.0;
        for (const auto& e : edges) {
            if (e.alive) total += e.length;
        }
        return total;
    }

    struct Built {
        std::shared_ptr<MarkedGraph> graph;
        std::vector<VertexId> vertex_index;  // builder vertex -> built vertex, -1 if dead
        std::vector<int> edge_index;         // builder edge -> built pair, -1 if dead
        std::vector<int> marks;              // per built oriented edge
    };

    Built build() const {
        Built out;
        out.graph = std::make_shared<MarkedGraph>();
        out.vertex_index.assign(vertices.size(), -1);
        out.edge_index.assign(edges.size(), -1);
        std::vector<int> valence(vertices.size(), 0);
        for (const auto& e : edges) {
            if (!e.alive) continue;
            ++valence[e.from];
            ++valence[e.to];
        }
        for (std::size_t v = 0; v < vertices.size(); ++v) {
            if (vertices[v].alive) out.vertex_index[v] = out.graph->add_vertex(vertices[v].name, valence[v] < 3);
        }
        std::vector<double> lengths;
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const auto& e = edges[k];
            if (!e.alive) continue;
            EdgeId id = out.graph->add_edge(e.name, out.vertex_index[e.from], out.vertex_index[e.to]);
            out.edge_index[k] = pair_of(id);
            lengths.push_back(e.length);
            out.marks.push_back(e.mark_forward);
            out.marks.push_back(e.mark_backward);
        }
        if (has_lengths) out.graph->set_lengths(lengths);
        return out;
    }
};

enum class MoveKind { subdivide, fold, homeomorphism };

inline std::string to_string(MoveKind k) {
    switch (k) {
        case MoveKind::subdivide: return "subdivide";
        case MoveKind::fold: return "fold";
        case MoveKind::homeomorphism: return "homeomorphism";
    }
    return "?";
}

struct FoldMove {
    MoveKind kind;
    GraphMap map;              // source graph -> target graph
    EdgeId edge = -1;          // subdivide: the direction measured from; fold: first folded direction
    EdgeId other = -1;         // fold: second folded direction
    std::size_t position = 0;  // subdivide: image edges before the cut; fold: image edges identified
    EdgePath image;            // fold: common image of the identified segments
    double amount = 0.0;       // metric length of the identified segments (or of the cut-off start)
};

struct FoldSequence {
    std::vector<std::shared_ptr<const MarkedGraph>> graphs;  // graphs[i] --moves[i]--> graphs[i+1]
    std::vector<FoldMove> moves;
    std::optional<double> lambda;  // set when the decomposition is metric

    std::size_t fold_count() const {
        return static_cast<std::size_t>(std::count_if(moves.begin(), moves.end(), [](const FoldMove& m) { return m.kind == MoveKind::fold; }));
    }

    // moves[to-1] o ... o moves[from]
    GraphMap compose_range(std::size_t from, std::size_t to) const {
        if (from >= to || to > moves.size()) throw PreconditionError("FoldSequence: empty move range");
        GraphMap out = moves[from].map;
        for (std::size_t i = from + 1; i < to; ++i) out = compose(moves[i].map, out);
        return out;
    }

    GraphMap recompose() const { return compose_range(0, moves.size()); }

    // The self-map of graphs[k] obtained by rotating the factorisation: first the moves
    // from k on, then the moves before k. Requires a self-map decomposition.
    GraphMap induced_representative(std::size_t k) const {
        if (k == 0 || k >= moves.size()) return recompose();
        return compose(compose_range(0, k), compose_range(k, moves.size()));
    }
};

namespace detail {

inline EdgePath direction_image(const std::vector<EdgePath>& images, EdgeId d) {
    const auto& img = images[pair_of(d)];
    return is_positive(d) ? img : reversed(img);
}

inline EdgeId first_image_edge(const std::vector<EdgePath>& images, EdgeId d) {
    const auto& img = images[pair_of(d)];
    return is_positive(d) ? img.front() : reverse(img.back());
}

struct FoldState {
    std::shared_ptr<const MarkedGraph> graph;
    std::vector<VertexId> vertex_map;
    std::vector<EdgePath> images;  // positive images in the fixed codomain
};

class Decomposer {
public:
    Decomposer(const GraphMap& g, std::optional<std::vector<double>> target_lengths, double lambda)
        : g_(g), target_lengths_(std::move(target_lengths)), lambda_(lambda) {}

    FoldSequence run() {
        FoldSequence seq;
        if (target_lengths_) seq.lambda = lambda_;
        FoldState s{metrized(GraphBuilder::from(g_.domain()).build().graph, g_.positive_images()), g_.vertex_map(), g_.positive_images()};
        seq.graphs.push_back(s.graph);
        const std::size_t cap = 10 * std::max<std::size_t>(1, g_.domain().edge_count()) * std::max<std::size_t>(1, g_.max_image_length());
        std::size_t folds = 0;
        for (;;) {
            auto turn = least_illegal_turn(s);
            if (!turn) break;
            if (++folds > cap) throw Error("stallings_decomposition: move cap exceeded");
            EdgeId x = turn->first, y = turn->second;
            const auto ix = direction_image(s.images, x), iy = direction_image(s.images, y);
            std::size_t c = 0;
            while (c < ix.size() && c < iy.size() && ix[c] == iy[c]) ++c;
            if (c < ix.size()) subdivide(s, seq, x, c, x, y);
            if (c < direction_image(s.images, y).size()) subdivide(s, seq, y, c, x, y);
            fold(s, seq, x, y, c);
        }
        finish(s, seq);
        return seq;
    }

private:
    std::shared_ptr<const MarkedGraph> metrized(std::shared_ptr<MarkedGraph> graph, const std::vector<EdgePath>& images) const {
        if (target_lengths_) {
            std::vector<double> lengths;
            for (const auto& img : images) lengths.push_back(image_length(img));
            graph->set_lengths(lengths);
        }
        return graph;
    }

    double image_length(std::span<const EdgeId> path) const {
        double total = 0.0;
        for (EdgeId e : path) total += (*target_lengths_)[pair_of(e)];
        return total / lambda_;
    }

    // One-step illegal turn: two directions at a vertex whose images start with the same
    // edge. The lexicographically least one is folded.
    std::optional<Turn> least_illegal_turn(const FoldState& s) const {
        const MarkedGraph& G = *s.graph;
        std::optional<Turn> best;
        for (std::size_t v = 0; v < G.vertex_count(); ++v) {
            const auto& ds = G.directions_at(static_cast<VertexId>(v));
            for (std::size_t i = 0; i < ds.size(); ++i)
                for (std::size_t j = i + 1; j < ds.size(); ++j) {
                    if (first_image_edge(s.images, ds[i]) != first_image_edge(s.images, ds[j])) continue;
                    Turn t = Turn::of(ds[i], ds[j]);
                    if (!best || t < *best) best = t;
                }
        }
        return best;
    }

    // Cuts the edge of direction d after c image edges (counted from d's end). The
    // directions x and y are translated to the new graph.
    void subdivide(FoldState& s, FoldSequence& seq, EdgeId d, std::size_t c, EdgeId& x, EdgeId& y) {
        const MarkedGraph& G = *s.graph;
        const int p = pair_of(d);
        const EdgePath img = s.images[p];
        const std::size_t cut = is_positive(d) ? c : img.size() - c;
        GraphBuilder b = GraphBuilder::from(G);
        VertexId mid = b.add_vertex("s");
        int second = b.add_edge(G.edge_name(p), mid, b.edges[p].to);
        b.edges[p].to = mid;
        auto built = b.build();

        std::vector<EdgePath> images = s.images;
        images[p] = EdgePath(img.begin(), img.begin() + static_cast<std::ptrdiff_t>(cut));
        images.push_back(EdgePath(img.begin() + static_cast<std::ptrdiff_t>(cut), img.end()));
        std::vector<VertexId> vmap = s.vertex_map;
        vmap.push_back(g_.codomain().term(img[cut - 1]));
        auto next = metrized(built.graph, images);

        std::vector<VertexId> identity(G.vertex_count());
        std::iota(identity.begin(), identity.end(), 0);
        std::vector<EdgePath> move_images;
        for (std::size_t k = 0; k < G.edge_count(); ++k) move_images.push_back({static_cast<EdgeId>(2 * k)});
        move_images[p] = {static_cast<EdgeId>(2 * p), static_cast<EdgeId>(2 * second)};
        FoldMove move{MoveKind::subdivide, GraphMap(s.graph, next, identity, move_images), d, -1, c, {}, 0.0};
        if (target_lengths_) {
            auto head = direction_image(s.images, d);
            move.amount = image_length(std::span<const EdgeId>(head.data(), c));
        }
        seq.moves.push_back(std::move(move));
        seq.graphs.push_back(next);
        s = {next, vmap, images};
        // The old terminal direction of the cut edge now belongs to the second piece.
        const EdgeId moved = reverse(static_cast<EdgeId>(2 * p));
        for (EdgeId* t : {&x, &y}) {
            if (*t == moved) *t = reverse(static_cast<EdgeId>(2 * second));
        }
    }

    void fold(FoldState& s, FoldSequence& seq, EdgeId x, EdgeId y, std::size_t c) {
        const MarkedGraph& G = *s.graph;
        VertexId tx = G.term(x), ty = G.term(y);
        if (tx == ty) {
            throw PreconditionError("stallings_decomposition: map is not a homotopy equivalence (folding " + G.label(x) + " and " +
                                    G.label(y) + " closes a loop with trivial image)");
        }
        GraphBuilder b = GraphBuilder::from(G);
        b.edges[pair_of(y)].alive = false;
        for (auto& e : b.edges) {
            if (e.from == ty) e.from = tx;
            if (e.to == ty) e.to = tx;
        }
        b.vertices[ty].alive = false;
        auto built = b.build();

        std::vector<VertexId> vmap(built.graph->vertex_count());
        for (std::size_t u = 0; u < G.vertex_count(); ++u) {
            if (built.vertex_index[u] >= 0) vmap[built.vertex_index[u]] = s.vertex_map[u];
        }
        std::vector<EdgePath> images(built.graph->edge_count());
        for (std::size_t q = 0; q < G.edge_count(); ++q) {
            if (built.edge_index[q] >= 0) images[built.edge_index[q]] = s.images[q];
        }
        auto next = metrized(built.graph, images);

        std::vector<VertexId> move_vmap(G.vertex_count());
        for (std::size_t u = 0; u < G.vertex_count(); ++u) {
            move_vmap[u] = built.vertex_index[static_cast<VertexId>(u) == ty ? tx : static_cast<VertexId>(u)];
        }
        std::vector<EdgePath> move_images(G.edge_count());
        const EdgeId xn = static_cast<EdgeId>(2 * built.edge_index[pair_of(x)] + (x & 1));
        for (std::size_t q = 0; q < G.edge_count(); ++q) {
            if (static_cast<int>(q) == pair_of(y)) {
                move_images[q] = {is_positive(y) ? xn : reverse(xn)};
            } else {
                move_images[q] = {static_cast<EdgeId>(2 * built.edge_index[q])};
            }
        }
        auto common = direction_image(s.images, x);
        FoldMove move{MoveKind::fold, GraphMap(s.graph, next, move_vmap, move_images), x, y, c, common, 0.0};
        if (target_lengths_) move.amount = image_length(common);
        seq.moves.push_back(std::move(move));
        seq.graphs.push_back(next);
        s = {next, vmap, images};
    }

    // No illegal turn is left: the residual map must be a graph isomorphism.
    void finish(FoldState& s, FoldSequence& seq) {
        const MarkedGraph& G = *s.graph;
        const MarkedGraph& T = g_.codomain();
        bool ok = G.edge_count() == T.edge_count() && G.vertex_count() == T.vertex_count();
        std::vector<char> hit_edge(T.edge_count(), 0), hit_vertex(T.vertex_count(), 0);
        for (std::size_t q = 0; ok && q < G.edge_count(); ++q) {
            ok = s.images[q].size() == 1 && !hit_edge[pair_of(s.images[q][0])];
            if (ok) hit_edge[pair_of(s.images[q][0])] = 1;
        }
        for (std::size_t u = 0; ok && u < G.vertex_count(); ++u) {
            ok = !hit_vertex[s.vertex_map[u]];
            hit_vertex[s.vertex_map[u]] = 1;
        }
        if (!ok) throw PreconditionError("stallings_decomposition: map is not a homotopy equivalence (folding ends in a non-surjective immersion)");
        seq.moves.push_back({MoveKind::homeomorphism, GraphMap(s.graph, g_.codomain_ptr(), s.vertex_map, s.images), -1, -1, 0, {}, 0.0});
        seq.graphs.push_back(g_.codomain_ptr());
    }

    const GraphMap& g_;
    std::optional<std::vector<double>> target_lengths_;
    double lambda_;
};

}  // namespace detail

// Factors g into subdivisions, folds and a final homeomorphism. When g is an expanding
// irreducible self-map, every intermediate graph carries the metric pulled back from the
// eigenmetric of the target, scaled by 1/lambda; folds are then isometries on edges.
inline FoldSequence stallings_decomposition(const GraphMap& g) {
    std::optional<std::vector<double>> lengths;
    double lambda = 1.0;
    if (g.is_self_map()) {
        auto m = transition_matrix(g);
        if (matrix_class(m) != MatrixClass::reducible) {
            auto pf = pf_data(m);
            if (pf.lambda > 1.0 + 1e-12) {
                lengths = pf.edge_lengths;
                lambda = pf.lambda;
            }
        }
    }
    return detail::Decomposer(g, lengths, lambda).run();
}

// -- periodic fold lines -------------------------------------------------------------

namespace detail {

// Graph reached after folding the first `sigma` of the two segments of a fold move, with
// valence-2 vertices suppressed. Directions at the new fold vertex are marked: 2 for the
// way back along the folded segment, 1 for the two unfolded remainders.
inline GraphBuilder partial_fold(const FoldMove& move, double sigma) {
    const MarkedGraph& G = move.map.domain();
    GraphBuilder b = GraphBuilder::from(G);
    const EdgeId x = move.edge, y = move.other;
    const double s = G.length(x);
    if (sigma <= kLengthTolerance * 1e-3) {
        b.suppress_valence_two();
        return b;
    }
    if (sigma >= s) throw PreconditionError("partial_fold: use the folded graph for a full fold");
    VertexId w = b.add_vertex("w");
    VertexId v = G.init(x);
    // x becomes v -> w (folded part) followed by w -> term(x); y keeps only its remainder.
    int x_rest = b.add_edge(G.edge_name(pair_of(x)), w, G.term(x), s - sigma);
    int y_rest = b.add_edge(G.edge_name(pair_of(y)), w, G.term(y), s - sigma);
    auto& ex = b.edges[pair_of(x)];
    ex.from = v;
    ex.to = w;
    ex.length = sigma;
    b.edges[pair_of(y)].alive = false;
    b.set_mark(static_cast<EdgeId>(2 * pair_of(x) + 1), 2);
    b.set_mark(static_cast<EdgeId>(2 * x_rest), 1);
    b.set_mark(static_cast<EdgeId>(2 * y_rest), 1);
    b.suppress_valence_two();
    return b;
}

inline MarkedGraph normalized(GraphBuilder b) {
    double vol = b.volume();
    for (auto& e : b.edges) e.length /= vol;
    auto built = b.build();
    return *built.graph;
}

// h^-1 o g o h for the final homeomorphism h of a decomposition, as a self-map of its source.
inline GraphMap conjugate_by_final_homeomorphism(const GraphMap& g, const FoldSequence& seq) {
    const GraphMap& h = seq.moves.back().map;
    const MarkedGraph& src = h.domain();
    auto clean = GraphBuilder::from(src);
    clean.has_lengths = false;
    std::shared_ptr<const MarkedGraph> base = clean.build().graph;
    GraphMap hh(base, h.codomain_ptr(), h.vertex_map(), h.positive_images());
    std::vector<VertexId> inv_v(src.vertex_count());
    for (std::size_t u = 0; u < src.vertex_count(); ++u) inv_v[h.vertex_image(static_cast<VertexId>(u))] = static_cast<VertexId>(u);
    std::vector<EdgePath> inv_e(src.edge_count());
    for (std::size_t q = 0; q < src.edge_count(); ++q) {
        EdgeId f = h.image(static_cast<EdgeId>(2 * q))[0];
        inv_e[pair_of(f)] = {is_positive(f) ? static_cast<EdgeId>(2 * q) : static_cast<EdgeId>(2 * q + 1)};
    }
    GraphMap hinv(h.codomain_ptr(), base, inv_v, inv_e);
    return compose(hinv, compose(g, hh));
}

}  // namespace detail

struct FoldLineSample {
    int step = 0;
    double t = 0.0;  // -log of the unnormalised volume
    MarkedGraph graph;
};

struct FoldLine {
    double period = 0.0;  // log lambda
    std::vector<FoldLineSample> samples;
    std::vector<FoldSequence> decompositions;  // one per period
};

// Samples the periodic fold line of a train track map at parameters t_j = j*P/M,
// j = 0..periods*M, with P = log lambda. Each period is decomposed afresh: period p+1
// folds the conjugate of the map by the final homeomorphism of period p.
inline FoldLine fold_line(const GraphMap& g, int periods, int samples_per_period) {
    if (periods < 1 || samples_per_period < 0) throw PreconditionError("fold_line: periods must be positive and samples nonnegative");
    require_train_track(g, "fold_line");
    if (matrix_class(transition_matrix(g)) != MatrixClass::primitive) throw PreconditionError("fold_line: transition matrix is not primitive");
    FoldLine line;
    const double lambda = pf_data(transition_matrix(g)).lambda;
    line.period = std::log(lambda);

    GraphMap current = g;
    const int total = periods * samples_per_period;
    for (int p = 0; p < periods; ++p) {
        line.decompositions.push_back(stallings_decomposition(current));
        current = detail::conjugate_by_final_homeomorphism(current, line.decompositions.back());
    }
    if (samples_per_period == 0) {
        line.samples.push_back({0, 0.0, detail::normalized(GraphBuilder::from(*line.decompositions[0].graphs[0]))});
        return line;
    }
    for (int j = 0; j <= total; ++j) {
        int p = j / samples_per_period;
        double u = line.period * (j % samples_per_period) / samples_per_period;
        if (p == periods) {
            // Endpoint: the last graph of the final period.
            const auto& seq = line.decompositions.back();
            auto b = GraphBuilder::from(*seq.graphs[seq.graphs.size() - 2]);
            b.suppress_valence_two();
            line.samples.push_back({j, line.period * j / samples_per_period, detail::normalized(b)});
            continue;
        }
        const auto& seq = line.decompositions[p];
        const double target = std::exp(-u);
        double volume = seq.graphs[0]->volume();
        std::optional<GraphBuilder> found;
        for (const auto& move : seq.moves) {
            if (move.kind != MoveKind::fold) continue;
            if (volume - move.amount < target - 1e-15) {
                found = detail::partial_fold(move, volume - target);
                break;
            }
            volume -= move.amount;
        }
        if (!found) {
            auto b = GraphBuilder::from(*seq.graphs[seq.graphs.size() - 2]);
            b.suppress_valence_two();
            found = b;
        }
        line.samples.push_back({j, line.period * j / samples_per_period, detail::normalized(*found)});
    }
    return line;
}

inline std::string fold_line_csv(const FoldLine& line) {
    std::string out = "step,edge,length\n";
    char buf[64];
    for (const auto& s : line.samples) {
        for (std::size_t k = 0; k < s.graph.edge_count(); ++k) {
            std::snprintf(buf, sizeof buf, "%.12g", s.graph.length(static_cast<EdgeId>(2 * k)));
            out += std::to_string(s.step) + "," + std::to_string(k) + "," + buf + "\n";
        }
    }
    return out;
}

}  // namespace lonetrack
