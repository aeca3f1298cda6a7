#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "rational.hpp"

namespace lonetrack {

// Oriented edges are numbered so that 2k is the positive orientation of edge pair k
// and 2k+1 its reverse. A direction at a vertex is identified with the oriented edge
// leaving it.
using EdgeId = int;
using VertexId = int;

constexpr EdgeId reverse(EdgeId e) noexcept { return e ^ 1; }
constexpr int pair_of(EdgeId e) noexcept { return e >> 1; }
constexpr bool is_positive(EdgeId e) noexcept { return (e & 1) == 0; }

using EdgePath = std::vector<EdgeId>;

inline constexpr double kLengthTolerance = 1e-9;

class MarkedGraph {
public:
    VertexId add_vertex(std::string name, bool subdivision = false) {
        vertex_names_.push_back(std::move(name));
        subdivision_.push_back(subdivision);
        directions_.emplace_back();
        return static_cast<VertexId>(vertex_names_.size() - 1);
    }

    // Returns the positive orientation of the new edge pair.
    EdgeId add_edge(std::string name, VertexId from, VertexId to) {
        check_vertex(from);
        check_vertex(to);
        EdgeId e = static_cast<EdgeId>(endpoints_.size());
        edge_names_.push_back(std::move(name));
        endpoints_.push_back(from);
        endpoints_.push_back(to);
        directions_[from].push_back(e);
        directions_[to].push_back(reverse(e));
        if (!lengths_.empty()) {
            lengths_.push_back(0.0);
            exact_.emplace_back();
        }
        return e;
    }

    std::size_t vertex_count() const noexcept { return vertex_names_.size(); }
    std::size_t edge_count() const noexcept { return edge_names_.size(); }
    std::size_t oriented_edge_count() const noexcept { return endpoints_.size(); }

    VertexId init(EdgeId e) const { return endpoint(e, false); }
    VertexId term(EdgeId e) const { return endpoint(e, true); }

    const std::string& edge_name(int pair) const { return edge_names_.at(pair); }
    std::string label(EdgeId e) const { return is_positive(e) ? edge_names_.at(pair_of(e)) : edge_names_.at(pair_of(e)) + "'"; }
    const std::string& vertex_name(VertexId v) const { return vertex_names_.at(v); }

    bool is_subdivision(VertexId v) const { return subdivision_.at(v); }
    void set_subdivision(VertexId v, bool flag) { subdivision_.at(v) = flag; }

    // Directions (outgoing oriented edges) at v, sorted by id. A loop contributes two.
    const std::vector<EdgeId>& directions_at(VertexId v) const { return directions_.at(v); }
    std::size_t valence(VertexId v) const { return directions_.at(v).size(); }

    // Rank of the fundamental group; assumes the graph is connected.
    int rank() const { return static_cast<int>(edge_count()) - static_cast<int>(vertex_count()) + 1; }

    bool connected() const {
        if (vertex_count() == 0) return true;
        std::vector<char> seen(vertex_count(), 0);
        std::vector<VertexId> stack{0};
        seen[0] = 1;
        std::size_t reached = 1;
        while (!stack.empty()) {
            VertexId v = stack.back();
            stack.pop_back();
            for (EdgeId d : directions_[v]) {
                VertexId w = term(d);
                if (!seen[w]) {
                    seen[w] = 1;
                    ++reached;
                    stack.push_back(w);
                }
            }
        }
        return reached == vertex_count();
    }

    std::optional<EdgeId> find_edge(std::string_view label) const {
        bool inverse = !label.empty() && label.back() == '\'';
        if (inverse) label.remove_suffix(1);
        for (std::size_t k = 0; k < edge_names_.size(); ++k) {
            if (edge_names_[k] == label) return static_cast<EdgeId>(2 * k + (inverse ? 1 : 0));
        }
        return std::nullopt;
    }

    std::optional<VertexId> find_vertex(std::string_view name) const {
        for (std::size_t v = 0; v < vertex_names_.size(); ++v) {
            if (vertex_names_[v] == name) return static_cast<VertexId>(v);
        }
        return std::nullopt;
    }

    // -- metric --------------------------------------------------------------

    bool has_lengths() const noexcept { return !lengths_.empty(); }
    double length(EdgeId e) const { return lengths_.at(pair_of(e)); }
    const std::optional<Rational>& exact_length(EdgeId e) const { return exact_.at(pair_of(e)); }
    std::span<const double> lengths() const { return lengths_; }

    void set_lengths(std::vector<double> per_pair) {
        if (per_pair.size() != edge_count()) throw InputError("lengths", "length vector has wrong size");
        lengths_ = std::move(per_pair);
        exact_.assign(edge_count(), std::nullopt);
    }
    void set_exact_lengths(const std::vector<Rational>& per_pair) {
        if (per_pair.size() != edge_count()) throw InputError("lengths", "length vector has wrong size");
        lengths_.resize(edge_count());
        exact_.resize(edge_count());
        for (std::size_t k = 0; k < per_pair.size(); ++k) {
            lengths_[k] = per_pair[k].to_double();
            exact_[k] = per_pair[k];
        }
    }
    void clear_lengths() {
        lengths_.clear();
        exact_.clear();
    }

    double volume() const {
        double v = 0.0;
        for (double l : lengths_) v += l;
        return v;
    }

    // Connected, reversal-consistent, valence >= 3 off subdivision vertices,
    // positive lengths, and unit volume when `normalized` is requested.
    void validate(bool normalized = false) const {
        if (vertex_count() == 0) throw InputError("empty-graph", "graph has no vertices");
        if (!connected()) throw InputError("connected", "graph is not connected");
        for (std::size_t v = 0; v < vertex_count(); ++v) {
            if (valence(v) < 3 && !subdivision_[v]) {
                throw InputError("valence", "vertex " + vertex_names_[v] + " has valence " + std::to_string(valence(v)));
            }
        }
        for (std::size_t i = 0; i < edge_names_.size(); ++i) {
            for (std::size_t j = i + 1; j < edge_names_.size(); ++j) {
                if (edge_names_[i] == edge_names_[j]) throw InputError("duplicate-label", "edge label " + edge_names_[i] + " repeated");
            }
        }
        for (std::size_t i = 0; i < vertex_names_.size(); ++i) {
            for (std::size_t j = i + 1; j < vertex_names_.size(); ++j) {
                if (vertex_names_[i] == vertex_names_[j]) throw InputError("duplicate-label", "vertex " + vertex_names_[i] + " repeated");
            }
        }
        if (has_lengths()) {
            for (std::size_t k = 0; k < lengths_.size(); ++k) {
                if (!(lengths_[k] > 0.0)) throw InputError("lengths", "edge " + edge_names_[k] + " has non-positive length");
            }
            if (normalized && std::abs(volume() - 1.0) > 1e-12) throw InputError("volume", "volume is not 1");
        }
    }

    // Same vertices, edges, names and incidences; lengths ignored.
    friend bool same_combinatorics(const MarkedGraph& a, const MarkedGraph& b) {
        return a.vertex_names_ == b.vertex_names_ && a.edge_names_ == b.edge_names_ && a.endpoints_ == b.endpoints_;
    }

    friend bool operator==(const MarkedGraph& a, const MarkedGraph& b) {
        return same_combinatorics(a, b) && a.subdivision_ == b.subdivision_ && a.lengths_ == b.lengths_ && a.exact_ == b.exact_;
    }

private:
    VertexId endpoint(EdgeId e, bool terminal) const {
        if (e < 0 || static_cast<std::size_t>(e) >= endpoints_.size()) throw InputError("edge", "edge id out of range");
        // endpoints_ holds (init, term) of the positive orientation.
        bool want_second = terminal != !is_positive(e);
        return endpoints_[(e & ~1) + (want_second ? 1 : 0)];
    }
    void check_vertex(VertexId v) const {
        if (v < 0 || static_cast<std::size_t>(v) >= vertex_count()) throw InputError("vertex", "vertex id out of range");
    }

    std::vector<std::string> vertex_names_;
    std::vector<bool> subdivision_;
    std::vector<std::vector<EdgeId>> directions_;
    std::vector<std::string> edge_names_;
    std::vector<VertexId> endpoints_;
    std::vector<double> lengths_;
    std::vector<std::optional<Rational>> exact_;
};

// -- edge paths ----------------------------------------------------------------

inline EdgePath reversed(const EdgePath& path) {
    EdgePath out;
    out.reserve(path.size());
    for (auto it = path.rbegin(); it != path.rend(); ++it) out.push_back(reverse(*it));
    return out;
}

inline bool is_tight(std::span<const EdgeId> path) {
    for (std::size_t i = 1; i < path.size(); ++i) {
        if (path[i] == reverse(path[i - 1])) return false;
    }
    return true;
}

// Free reduction: cancels every e followed by its reverse.
inline EdgePath tighten(std::span<const EdgeId> path) {
    EdgePath out;
    out.reserve(path.size());
    for (EdgeId e : path) {
        if (!out.empty() && out.back() == reverse(e)) {
            out.pop_back();
        } else {
            out.push_back(e);
        }
    }
    return out;
}

inline bool is_consistent(const MarkedGraph& g, std::span<const EdgeId> path) {
    for (EdgeId e : path) {
        if (e < 0 || static_cast<std::size_t>(e) >= g.oriented_edge_count()) return false;
    }
    for (std::size_t i = 1; i < path.size(); ++i) {
        if (g.term(path[i - 1]) != g.init(path[i])) return false;
    }
    return true;
}

inline std::string path_string(const MarkedGraph& g, std::span<const EdgeId> path) {
    std::string out;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i) out += ' ';
        out += g.label(path[i]);
    }
    return out;
}

inline double path_length(const MarkedGraph& g, std::span<const EdgeId> path) {
    double total = 0.0;
    for (EdgeId e : path) total += g.length(e);
    return total;
}

// -- graph maps ----------------------------------------------------------------

// A map of graphs sending vertices to vertices and each oriented edge to a nonempty
// tight edge path, compatible with reversal and with the vertex map.
class GraphMap {
public:
    GraphMap(std::shared_ptr<const MarkedGraph> domain, std::shared_ptr<const MarkedGraph> codomain,
             std::vector<VertexId> vertex_map, const std::vector<EdgePath>& positive_images)
        : domain_(std::move(domain)), codomain_(std::move(codomain)), vertex_map_(std::move(vertex_map)) {
        if (!domain_ || !codomain_) throw InputError("graph-map", "missing graph");
        if (vertex_map_.size() != domain_->vertex_count()) throw InputError("graph-map", "vertex map has wrong size");
        if (positive_images.size() != domain_->edge_count()) throw InputError("graph-map", "edge map has wrong size");
        images_.resize(domain_->oriented_edge_count());
        for (std::size_t k = 0; k < positive_images.size(); ++k) {
            images_[2 * k] = positive_images[k];
            images_[2 * k + 1] = reversed(positive_images[k]);
        }
        validate();
    }

    // Self-map with the vertex map read off the edge images.
    static GraphMap self_map(std::shared_ptr<const MarkedGraph> graph, const std::vector<EdgePath>& positive_images) {
        auto vmap = infer_vertex_map(*graph, *graph, positive_images);
        return GraphMap(graph, graph, std::move(vmap), positive_images);
    }

    static std::vector<VertexId> infer_vertex_map(const MarkedGraph& domain, const MarkedGraph& codomain,
                                                  const std::vector<EdgePath>& positive_images) {
        std::vector<VertexId> vmap(domain.vertex_count(), -1);
        auto assign = [&](VertexId v, VertexId w, std::size_t k) {
            if (vmap[v] == -1) {
                vmap[v] = w;
            } else if (vmap[v] != w) {
                throw InputError("vertex-map", "images disagree on where vertex " + domain.vertex_name(v) + " goes (edge " +
                                                   domain.edge_name(static_cast<int>(k)) + ")");
            }
        };
        for (std::size_t k = 0; k < positive_images.size() && k < domain.edge_count(); ++k) {
            const auto& img = positive_images[k];
            if (img.empty()) throw InputError("empty-image", "edge " + domain.edge_name(static_cast<int>(k)) + " has empty image");
            if (!is_consistent(codomain, img)) throw InputError("dangling-image", "image of " + domain.edge_name(static_cast<int>(k)) + " is not a path");
            EdgeId e = static_cast<EdgeId>(2 * k);
            assign(domain.init(e), codomain.init(img.front()), k);
            assign(domain.term(e), codomain.init(reverse(img.back())), k);
        }
        for (std::size_t v = 0; v < vmap.size(); ++v) {
            if (vmap[v] == -1) throw InputError("vertex-map", "vertex " + domain.vertex_name(static_cast<VertexId>(v)) + " has no image");
        }
        return vmap;
    }

    const MarkedGraph& domain() const noexcept { return *domain_; }
    const MarkedGraph& codomain() const noexcept { return *codomain_; }
    const std::shared_ptr<const MarkedGraph>& domain_ptr() const noexcept { return domain_; }
    const std::shared_ptr<const MarkedGraph>& codomain_ptr() const noexcept { return codomain_; }

    bool is_self_map() const { return domain_ == codomain_ || same_combinatorics(*domain_, *codomain_); }

    VertexId vertex_image(VertexId v) const { return vertex_map_.at(v); }
    const std::vector<VertexId>& vertex_map() const noexcept { return vertex_map_; }
    const EdgePath& image(EdgeId e) const { return images_.at(e); }

    std::vector<EdgePath> positive_images() const {
        std::vector<EdgePath> out;
        for (std::size_t k = 0; k < domain_->edge_count(); ++k) out.push_back(images_[2 * k]);
        return out;
    }

    std::size_t max_image_length() const {
        std::size_t m = 0;
        for (const auto& img : images_) m = std::max(m, img.size());
        return m;
    }

    std::size_t total_image_length() const {
        std::size_t m = 0;
        for (std::size_t k = 0; k < images_.size(); k += 2) m += images_[k].size();
        return m;
    }

    friend bool operator==(const GraphMap& a, const GraphMap& b) {
        return same_combinatorics(*a.domain_, *b.domain_) && same_combinatorics(*a.codomain_, *b.codomain_) &&
               a.vertex_map_ == b.vertex_map_ && a.images_ == b.images_;
    }

private:
    void validate() const {
        for (std::size_t v = 0; v < vertex_map_.size(); ++v) {
            if (vertex_map_[v] < 0 || static_cast<std::size_t>(vertex_map_[v]) >= codomain_->vertex_count()) {
                throw InputError("vertex-map", "vertex image out of range");
            }
        }
        for (std::size_t e = 0; e < images_.size(); e += 2) {
            const auto& img = images_[e];
            const std::string& name = domain_->edge_name(pair_of(static_cast<EdgeId>(e)));
            if (img.empty()) throw InputError("empty-image", "edge " + name + " has empty image");
            if (!is_consistent(*codomain_, img)) throw InputError("dangling-image", "image of " + name + " is not a path");
            if (!is_tight(img)) throw InputError("non-tight-image", "image of " + name + " is not tight");
            if (codomain_->init(img.front()) != vertex_map_[domain_->init(static_cast<EdgeId>(e))] ||
                codomain_->term(img.back()) != vertex_map_[domain_->term(static_cast<EdgeId>(e))]) {
                throw InputError("vertex-map", "image of " + name + " does not respect the vertex map");
            }
        }
    }

    std::shared_ptr<const MarkedGraph> domain_;
    std::shared_ptr<const MarkedGraph> codomain_;
    std::vector<VertexId> vertex_map_;
    std::vector<EdgePath> images_;
};

// Tightened image g#(path). The input need not be tight.
inline EdgePath apply_map(const GraphMap& g, std::span<const EdgeId> path) {
    if (!is_consistent(g.domain(), path)) throw PreconditionError("apply_map: path does not lie in the domain");
    EdgePath out;
    for (EdgeId e : path) {
        for (EdgeId f : g.image(e)) {
            if (!out.empty() && out.back() == reverse(f)) {
                out.pop_back();
            } else {
                out.push_back(f);
            }
        }
    }
    return out;
}

// g o h, defined when codomain(h) matches domain(g).
inline GraphMap compose(const GraphMap& g, const GraphMap& h) {
    if (!same_combinatorics(h.codomain(), g.domain())) throw PreconditionError("compose: codomain of h is not the domain of g");
    std::vector<VertexId> vmap(h.domain().vertex_count());
    for (std::size_t v = 0; v < vmap.size(); ++v) vmap[v] = g.vertex_image(h.vertex_image(static_cast<VertexId>(v)));
    std::vector<EdgePath> images;
    images.reserve(h.domain().edge_count());
    for (std::size_t k = 0; k < h.domain().edge_count(); ++k) images.push_back(apply_map(g, h.image(static_cast<EdgeId>(2 * k))));
    return GraphMap(h.domain_ptr(), g.codomain_ptr(), std::move(vmap), images);
}

inline GraphMap power(const GraphMap& g, int k) {
    if (k < 1) throw PreconditionError("power: exponent must be positive");
    if (!g.is_self_map()) throw PreconditionError("power: map is not a self-map");
    GraphMap result = g;
    for (int i = 1; i < k; ++i) result = compose(g, result);
    return result;
}

}  // namespace lonetrack
