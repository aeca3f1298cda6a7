#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "legdynamics.hpp"
#include "spectral.hpp"
#include "traintrack.hpp"

namespace lonetrack {

inline constexpr int kDefaultNielsenBound = 40;
inline constexpr int kOracleMaxBound = 12;

namespace detail {

inline std::string fresh_name(const std::set<std::string>& taken, const std::string& base, int start = 1) {
    for (int i = start;; ++i) {
        std::string candidate = base + "_" + std::to_string(i);
        if (!taken.count(candidate)) return candidate;
    }
}

// fresh_name for many requests: remembers where each base left off.
class NameSource {
public:
    explicit NameSource(std::set<std::string> taken) : taken_(std::move(taken)) {}

    std::string fresh(const std::string& base) {
        int& next = next_[base];
        std::string name = fresh_name(taken_, base, next + 1);
        next = std::stoi(name.substr(base.size() + 1));
        taken_.insert(name);
        return name;
    }

private:
    std::set<std::string> taken_;
    std::map<std::string, int> next_;
};

}  // namespace detail

// Subdivides every edge at the fixed points in its interior, so that every fixed point
// of g becomes a vertex. Interior fixed points come from occurrences of e, in the same
// orientation, strictly inside g(e); orientation-reversing occurrences give fixed points
// whose directions are swapped, which cannot be endpoints of Nielsen paths. Returns g
// unchanged when nothing needs cutting. The original vertices keep their ids.
inline GraphMap subdivide_at_fixed_points(const GraphMap& g) {
    if (!g.is_self_map()) throw PreconditionError("subdivide_at_fixed_points: map is not a self-map");
    const MarkedGraph& G = g.domain();
    std::vector<std::vector<std::size_t>> cuts(G.edge_count());
    bool any = false;
    for (std::size_t k = 0; k < G.edge_count(); ++k) {
        const auto& img = g.image(static_cast<EdgeId>(2 * k));
        for (std::size_t j = 1; j + 1 < img.size(); ++j) {
            if (img[j] == static_cast<EdgeId>(2 * k)) cuts[k].push_back(j);
        }
        any = any || !cuts[k].empty();
    }
    if (!any) return g;

    std::set<std::string> taken;
    for (std::size_t k = 0; k < G.edge_count(); ++k) taken.insert(G.edge_name(static_cast<int>(k)));
    for (std::size_t v = 0; v < G.vertex_count(); ++v) taken.insert(G.vertex_name(static_cast<VertexId>(v)));
    detail::NameSource names(std::move(taken));

    auto sub = std::make_shared<MarkedGraph>();
    for (std::size_t v = 0; v < G.vertex_count(); ++v) sub->add_vertex(G.vertex_name(static_cast<VertexId>(v)), G.is_subdivision(static_cast<VertexId>(v)));
    // pieces[k] lists the positive oriented edges of the subdivided graph covering edge k.
    std::vector<std::vector<EdgeId>> pieces(G.edge_count());
    std::vector<VertexId> vmap(G.vertex_count());
    for (std::size_t v = 0; v < G.vertex_count(); ++v) vmap[v] = g.vertex_image(static_cast<VertexId>(v));
    for (std::size_t k = 0; k < G.edge_count(); ++k) {
        EdgeId e = static_cast<EdgeId>(2 * k);
        const std::string& name = G.edge_name(static_cast<int>(k));
        if (cuts[k].empty()) {
            pieces[k].push_back(sub->add_edge(name, G.init(e), G.term(e)));
            continue;
        }
        VertexId prev = G.init(e);
        for (std::size_t i = 0; i <= cuts[k].size(); ++i) {
            VertexId next;
            if (i == cuts[k].size()) {
                next = G.term(e);
            } else {
                next = sub->add_vertex(names.fresh(name + "_fix"), true);
                vmap.push_back(next);
            }
            pieces[k].push_back(sub->add_edge(names.fresh(name), prev, next));
            prev = next;
        }
    }
    auto expand = [&](EdgeId f, EdgePath& out) {
        const auto& p = pieces[pair_of(f)];
        if (is_positive(f)) {
            out.insert(out.end(), p.begin(), p.end());
        } else {
            for (auto it = p.rbegin(); it != p.rend(); ++it) out.push_back(reverse(*it));
        }
    };
    std::vector<EdgePath> images(sub->edge_count());
    for (std::size_t k = 0; k < G.edge_count(); ++k) {
        const auto& img = g.image(static_cast<EdgeId>(2 * k));
        const auto& p = pieces[k];
        const auto& c = cuts[k];
        if (c.empty()) {
            EdgePath out;
            for (EdgeId f : img) expand(f, out);
            images[pair_of(p[0])] = out;
            continue;
        }
        const std::size_t m = c.size();
        for (std::size_t i = 0; i <= m; ++i) {
            EdgePath out;
            // Tail of the occurrence holding the fixed point at the start of piece i.
            if (i > 0) out.insert(out.end(), p.begin() + static_cast<std::ptrdiff_t>(i), p.end());
            std::size_t from = i == 0 ? 0 : c[i - 1] + 1;
            std::size_t to = i == m ? img.size() : c[i];
            for (std::size_t j = from; j < to; ++j) expand(img[j], out);
            // Head of the occurrence holding the fixed point at the end of piece i.
            if (i < m) out.insert(out.end(), p.begin(), p.begin() + static_cast<std::ptrdiff_t>(i) + 1);
            images[pair_of(p[i])] = out;
        }
    }
    std::shared_ptr<const MarkedGraph> frozen = sub;
    return GraphMap(frozen, frozen, vmap, images);
}

struct NielsenPath {
    EdgePath path;
    std::size_t turn_index = 0;  // the illegal turn sits between path[turn_index-1] and path[turn_index]
    bool indivisible = true;
};

struct NielsenPathReport {
    GraphMap searched_map;  // g, subdivided at interior fixed points
    std::vector<NielsenPath> paths;
    int search_bound = 0;
    bool exhaustive = false;
    bool free_by_leg_dynamics = false;  // no paths at any period, though the leg search was cut off
    std::size_t nodes_explored = 0;
    // Brute-force cross-check, run for bounds up to kOracleMaxBound.
    std::optional<int> oracle_length;
    std::optional<bool> oracle_agrees;

    // Vertices of the original graph that end a reported path.
    std::vector<VertexId> endpoints_in(const MarkedGraph& original) const {
        std::vector<VertexId> out;
        const MarkedGraph& G = searched_map.domain();
        for (const auto& np : paths) {
            for (VertexId v : {G.init(np.path.front()), G.term(np.path.back())}) {
                if (static_cast<std::size_t>(v) < original.vertex_count()) out.push_back(v);
            }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }
};

namespace detail {

inline EdgePath orientation_normal(const EdgePath& p) {
    auto r = reversed(p);
    return std::min(p, r);
}

inline std::size_t illegal_turn_count(const GateStructure& gs, const EdgePath& p) {
    std::size_t n = 0;
    for (const Turn& t : turns_crossed(p)) n += gs.legal(t) ? 0 : 1;
    return n;
}

// Leg-growth search for indivisible Nielsen paths. An iNP is a-bar.b with a, b legal
// paths leaving a vertex w through an illegal turn, g(a) = t.a and g(b) = t.b for the
// common prefix t of g(a), g(b). Legs are grown edge by edge; growth is forced whenever
// the image remainder already runs past the leg.
class LegSearch {
public:
    LegSearch(const GraphMap& g, int bound, std::size_t node_budget)
        : g_(g), gs_(gates(g)), bound_(static_cast<std::size_t>(bound)), budget_(node_budget) {}

    std::vector<EdgePath> run() {
        std::vector<EdgePath> out;
        for (const Turn& t : gs_.illegal_turns) joint({t.first}, {t.second}, out);
        return out;
    }

    bool truncated() const { return truncated_; }
    std::size_t nodes() const { return nodes_; }

private:
    bool spend() {
        if (++nodes_ > budget_) {
            truncated_ = true;
            return false;
        }
        return true;
    }

    std::vector<EdgeId> continuations(const EdgePath& leg) const {
        std::vector<EdgeId> out;
        EdgeId last = leg.back();
        for (EdgeId x : g_.domain().directions_at(g_.domain().term(last))) {
            if (x != reverse(last) && gs_.legal(Turn::of(reverse(last), x))) out.push_back(x);
        }
        return out;
    }

    EdgePath image(const EdgePath& leg) const { return apply_map(g_, leg); }

    void joint(const EdgePath& a, const EdgePath& b, std::vector<EdgePath>& out) {
        if (!spend()) return;
        auto ga = image(a), gb = image(b);
        std::size_t c = 0;
        while (c < ga.size() && c < gb.size() && ga[c] == gb[c]) ++c;
        if (c == ga.size() || c == gb.size()) {
            // Common prefix not settled yet: the leg whose image ran out must grow.
            bool grow_a = c == ga.size();
            const EdgePath& leg = grow_a ? a : b;
            if (leg.size() >= bound_) {
                truncated_ = true;
                return;
            }
            for (EdgeId x : continuations(leg)) {
                EdgePath longer = leg;
                longer.push_back(x);
                if (grow_a) {
                    joint(longer, b, out);
                } else {
                    joint(a, longer, out);
                }
            }
            return;
        }
        std::vector<EdgePath> legs_a, legs_b;
        leg(a, c, legs_a);
        if (legs_a.empty()) return;
        leg(b, c, legs_b);
        for (const auto& la : legs_a) {
            for (const auto& lb : legs_b) {
                EdgePath rho = reversed(la);
                rho.insert(rho.end(), lb.begin(), lb.end());
                out.push_back(std::move(rho));
            }
        }
    }

    // Completes one leg once the common prefix (length c) is known.
    void leg(const EdgePath& a, std::size_t c, std::vector<EdgePath>& out) {
        if (!spend()) return;
        auto ga = image(a);
        EdgePath rest(ga.begin() + static_cast<std::ptrdiff_t>(c), ga.end());
        if (rest == a) {
            out.push_back(a);
            return;
        }
        std::size_t common = std::min(rest.size(), a.size());
        if (!std::equal(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(common), a.begin())) return;
        if (a.size() >= bound_) {
            truncated_ = true;
            return;
        }
        if (rest.size() > a.size()) {
            EdgePath longer = a;
            longer.push_back(rest[a.size()]);
            leg(longer, c, out);
            return;
        }
        for (EdgeId x : continuations(a)) {
            EdgePath longer = a;
            longer.push_back(x);
            leg(longer, c, out);
        }
    }

    const GraphMap& g_;
    GateStructure gs_;
    std::size_t bound_;
    std::size_t budget_;
    std::size_t nodes_ = 0;
    bool truncated_ = false;
};

}  // namespace detail

// Longest total length the brute-force oracle can afford on this map: the number of
// tight paths from fixed vertices up to that length stays within `budget`.
inline int affordable_oracle_length(const GraphMap& g, int bound, double budget = 2.0e6) {
    const MarkedGraph& G = g.domain();
    std::vector<double> ending(G.oriented_edge_count(), 0.0);
    for (std::size_t v = 0; v < G.vertex_count(); ++v) {
        if (g.vertex_image(static_cast<VertexId>(v)) != static_cast<VertexId>(v)) continue;
        for (EdgeId d : G.directions_at(static_cast<VertexId>(v))) ending[d] += 1.0;
    }
    double total = 0.0;
    int length = 0;
    for (int len = 1; len <= bound; ++len) {
        double count = 0.0;
        for (double x : ending) count += x;
        total += count;
        if (total > budget) break;
        length = len;
        std::vector<double> next(ending.size(), 0.0);
        for (std::size_t e = 0; e < ending.size(); ++e) {
            if (ending[e] == 0.0) continue;
            for (EdgeId x : G.directions_at(G.term(static_cast<EdgeId>(e)))) {
                if (x != reverse(static_cast<EdgeId>(e))) next[x] += ending[e];
            }
        }
        ending.swap(next);
    }
    return length;
}

// Independent oracle: every tight path of at most `max_length` edges starting at a fixed
// vertex is pushed through g and compared with itself. Returns each Nielsen path once,
// in the orientation that is lexicographically smaller.
inline std::vector<EdgePath> brute_force_nielsen_paths(const GraphMap& g, int max_length) {
    const MarkedGraph& G = g.domain();
    std::set<EdgePath> found;
    EdgePath path;
    EdgePath img;
    struct Op {
        bool pushed;
        EdgeId edge;
    };
    std::vector<std::vector<Op>> undo;

    auto push_edge = [&](EdgeId e) {
        path.push_back(e);
        std::vector<Op> ops;
        for (EdgeId f : g.image(e)) {
            if (!img.empty() && img.back() == reverse(f)) {
                ops.push_back({false, img.back()});
                img.pop_back();
            } else {
                img.push_back(f);
                ops.push_back({true, f});
            }
        }
        undo.push_back(std::move(ops));
    };
    auto pop_edge = [&]() {
        auto ops = std::move(undo.back());
        undo.pop_back();
        for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
            if (it->pushed) {
                img.pop_back();
            } else {
                img.push_back(it->edge);
            }
        }
        path.pop_back();
    };
    auto dfs = [&](auto&& self) -> void {
        if (img == path) found.insert(detail::orientation_normal(path));
        if (static_cast<int>(path.size()) == max_length) return;
        for (EdgeId x : G.directions_at(G.term(path.back()))) {
            if (x == reverse(path.back())) continue;
            push_edge(x);
            self(self);
            pop_edge();
        }
    };
    for (std::size_t v = 0; v < G.vertex_count(); ++v) {
        if (g.vertex_image(static_cast<VertexId>(v)) != static_cast<VertexId>(v)) continue;
        for (EdgeId d : G.directions_at(static_cast<VertexId>(v))) {
            push_edge(d);
            dfs(dfs);
            pop_edge();
        }
    }
    return {found.begin(), found.end()};
}

// Nielsen paths of a rotationless train track map (period one suffices there). The
// search is exhaustive when no leg had to be cut off at `bound`: every branch of the
// leg-growth tree then ended in a solution or a contradiction.
inline NielsenPathReport find_nielsen_paths(const GraphMap& g, int bound = kDefaultNielsenBound) {
    if (bound < 1) throw PreconditionError("find_nielsen_paths: bound must be positive");
    require_train_track(g, "find_nielsen_paths");
    if (!is_rotationless(g)) throw PreconditionError("find_nielsen_paths: map is not rotationless");

    GraphMap sub = subdivide_at_fixed_points(g);
    detail::LegSearch search(sub, bound, 5'000'000);
    auto raw = search.run();

    const auto gs = gates(sub);
    std::set<EdgePath> unique;
    for (auto& rho : raw) {
        if (apply_map(sub, rho) != rho) throw Error("find_nielsen_paths: internal error, candidate is not fixed");
        unique.insert(detail::orientation_normal(rho));
    }
    NielsenPathReport report{sub, {}, bound, !search.truncated(), false, search.nodes(), std::nullopt, std::nullopt};
    for (const auto& rho : unique) {
        NielsenPath np;
        np.path = rho;
        for (std::size_t i = 1; i < rho.size(); ++i) {
            if (!gs.legal(Turn::of(reverse(rho[i - 1]), rho[i]))) np.turn_index = i;
        }
        np.indivisible = true;
        report.paths.push_back(std::move(np));
    }

    if (bound <= kOracleMaxBound) {
        int length = affordable_oracle_length(sub, bound);
        std::set<EdgePath> oracle;
        for (auto& p : brute_force_nielsen_paths(sub, length)) {
            if (detail::illegal_turn_count(gs, p) == 1) oracle.insert(p);
        }
        std::set<EdgePath> mine;
        for (const auto& np : report.paths) {
            if (static_cast<int>(np.path.size()) <= length) mine.insert(np.path);
        }
        report.oracle_length = length;
        // Both legs of a path with at most `length` <= bound edges are within the leg bound,
        // so the leg search is complete at that size even when it was cut off elsewhere.
        report.oracle_agrees = oracle == mine;
    }
    return report;
}

enum class Stability { fully_stable, not_fully_stable, unknown_at_bound };

inline std::string to_string(Stability s) {
    switch (s) {
        case Stability::fully_stable: return "fully-stable";
        case Stability::not_fully_stable: return "not-fully-stable";
        case Stability::unknown_at_bound: return "unknown-at-bound";
    }
    return "?";
}

inline Stability is_fully_stable(const NielsenPathReport& report) {
    if (!report.paths.empty()) return Stability::not_fully_stable;
    return report.exhaustive ? Stability::fully_stable : Stability::unknown_at_bound;
}

inline Stability is_fully_stable(const GraphMap& g, int bound = kDefaultNielsenBound) {
    return is_fully_stable(find_nielsen_paths(g, bound));
}

enum class Geometricity { ageometric, not_ageometric, unknown };

inline std::string to_string(Geometricity a) {
    switch (a) {
        case Geometricity::ageometric: return "ageometric";
        case Geometricity::not_ageometric: return "not-ageometric";
        case Geometricity::unknown: return "unknown";
    }
    return "?";
}

// Rotationless index read off gate counts at periodic vertices with at least three gates.
// Only meaningful for representatives without Nielsen paths.
inline HalfInt gate_rotationless_index(const GraphMap& g) {
    auto ps = periodic_structure(g);
    auto gs = gates(g);
    HalfInt sum;
    for (VertexId v : ps.principal) sum += HalfInt::from_twice(2 - static_cast<long long>(gs.gates_at(v)));
    return sum;
}

// Powers of g whose images would exceed this many edges are not searched.
inline constexpr std::size_t kMaxPowerImageEdges = 50'000;
// Smaller cap for powers searched only to exhibit paths the leg dynamics already found.
inline constexpr std::size_t kWitnessPowerImageEdges = 5'000;

inline GraphMap guarded_power(const GraphMap& g, long long k, std::size_t cap = kMaxPowerImageEdges) {
    double grown = static_cast<double>(g.total_image_length());
    const double lambda = pf_data(transition_matrix(g)).lambda;
    for (long long i = 1; i < k && grown <= static_cast<double>(cap); ++i) grown *= lambda;
    if (grown > static_cast<double>(cap)) {
        throw UnknownAtBound("power " + std::to_string(k) + " would have more than " + std::to_string(cap) + " image edges");
    }
    return power(g, static_cast<int>(k));
}

// Periodic Nielsen paths of a primitive train track map. With e the exponent making
// principal vertices and their directions fixed, g^e is searched for Nielsen paths first.
// Other periods are settled by the leg dynamics of g, which sees every period at once; a
// period p it finds is then searched for explicitly on g^lcm(e, p) when that power is
// affordable. The number of illegal turns does not bound the period: there are rank 3
// examples with five illegal turns whose first Nielsen path appears at the 8th power.
struct PeriodicNielsenReport {
    long long base_exponent = 1;
    std::vector<long long> powers_searched;
    std::optional<long long> found_at;  // power carrying the explicit Nielsen paths
    NielsenPathReport base;             // search on g^e
    std::optional<NielsenPathReport> found;
    std::optional<LegDynamicsReport> dynamics;  // not run when g^e already has paths
    bool complete = false;  // no periodic Nielsen path of any period
    std::string limit;      // why nothing is claimed, or why found periods have no explicit paths

    bool carries_paths() const { return found_at.has_value() || (dynamics && !dynamics->periods.empty()); }
};

inline PeriodicNielsenReport find_periodic_nielsen_paths(const GraphMap& g, int bound = kDefaultNielsenBound,
                                                         std::size_t cell_cap = kLegDynamicsCellCap) {
    require_train_track(g, "find_periodic_nielsen_paths");
    if (matrix_class(transition_matrix(g)) != MatrixClass::primitive) {
        throw PreconditionError("find_periodic_nielsen_paths: transition matrix is not primitive");
    }
    const long long e = periodic_structure(g).rotationless_exponent;
    GraphMap base_map = guarded_power(g, e);
    PeriodicNielsenReport out{e, {e}, std::nullopt, find_nielsen_paths(base_map, bound), std::nullopt, std::nullopt, false, ""};
    if (!out.base.paths.empty()) {
        out.found_at = e;
        out.found = out.base;
        return out;
    }
    out.dynamics = leg_dynamics(g, cell_cap);
    if (!out.dynamics->settled) {
        out.limit = out.dynamics->limit;
        return out;
    }
    if (out.dynamics->periods.empty()) {
        out.complete = true;
        out.base.free_by_leg_dynamics = true;
        return out;
    }
    for (long long p : out.dynamics->periods) {
        const long long k = std::lcm(e, p);
        if (k == e) continue;
        try {
            auto report = find_nielsen_paths(guarded_power(g, k, kWitnessPowerImageEdges), bound);
            out.powers_searched.push_back(k);
            if (!report.paths.empty()) {
                out.found_at = k;
                out.found = std::move(report);
                return out;
            }
            if (report.exhaustive) {
                throw Error("find_periodic_nielsen_paths: leg dynamics has period " + std::to_string(p) +
                            " but power " + std::to_string(k) + " has no Nielsen path");
            }
        } catch (const UnknownAtBound& ex) {
            out.limit = std::string("paths not exhibited: ") + ex.what();
        }
    }
    return out;
}

inline Stability periodic_stability(const PeriodicNielsenReport& r) {
    if (r.carries_paths()) return Stability::not_fully_stable;
    return r.complete ? Stability::fully_stable : Stability::unknown_at_bound;
}

inline Geometricity ageometric_certificate(const GraphMap& g, int bound = kDefaultNielsenBound,
                                          std::size_t cell_cap = kLegDynamicsCellCap) {
    auto search = find_periodic_nielsen_paths(g, bound, cell_cap);
    auto stability = periodic_stability(search);
    if (stability == Stability::unknown_at_bound) return Geometricity::unknown;
    if (stability == Stability::not_fully_stable) return Geometricity::not_ageometric;
    GraphMap p = power(g, static_cast<int>(search.base_exponent));
    // Index 1 - r belongs to geometric and parageometric classes, which carry Nielsen paths.
    if (gate_rotationless_index(p) <= HalfInt::integer(1 - g.domain().rank())) {
        throw Error("ageometric_certificate: no Nielsen paths found but the rotationless index equals 1 - r");
    }
    return Geometricity::ageometric;
}

}  // namespace lonetrack
