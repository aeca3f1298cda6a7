#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "spectral.hpp"
#include "traintrack.hpp"

namespace lonetrack {

// Periodic indivisible Nielsen paths of every period at once.
//
// Such a path is a-bar.b with legal legs a, b of equal eigen-length l leaving an illegal
// turn. One application of g takes it to a'-bar.b' with g(a) = t.a', g(b) = t.b', t the
// common prefix of the two images, so l' = lambda*l - |t|. A cell fixes the turn and the
// edge sequences under both legs; on a cell |t| is constant and the next cell changes only
// at finitely many breakpoints of l. Orbits that stay bounded have l <= cmax/(lambda - 1)
// with cmax the largest common image prefix over legal pairs from an illegal turn, and two
// distinct periodic paths never share a cell (equal |t| would force equal l). The periodic
// paths are therefore the periodic points of a finite expanding interval map, and the
// escaping part is stripped away by intersecting with preimages until nothing is left or
// only short intervals around periodic orbits remain.
struct LegDynamicsReport {
    bool settled = false;            // false: a cap was hit and nothing is claimed
    std::vector<long long> periods;  // periods of the orbits found, distinct, sorted
    double lambda = 0.0;
    double max_prefix = 0.0;  // cmax
    double leg_bound = 0.0;   // cmax / (lambda - 1)
    std::size_t cells = 0;
    std::size_t iterations = 0;
    std::string limit;

    bool none() const { return settled && periods.empty(); }
};

inline constexpr std::size_t kLegDynamicsCellCap = 400'000;

namespace detail {

class LegDynamics {
public:
    LegDynamics(const GraphMap& g, std::size_t cell_cap) : g_(g), gs_(gates(g)), cap_(cell_cap) {
        auto pf = pf_data(transition_matrix(g));
        lambda_ = pf.lambda;
        len_.resize(g.domain().oriented_edge_count());
        for (std::size_t e = 0; e < len_.size(); ++e) len_[e] = pf.edge_lengths[e / 2];
    }

    LegDynamicsReport run() {
        LegDynamicsReport out;
        out.lambda = lambda_;
        if (gs_.illegal_turns.empty()) {
            out.settled = true;
            return out;
        }
        if (!max_prefix(out)) return out;
        out.leg_bound = bound_ = out.max_prefix / (lambda_ - 1.0);
        for (const Turn& t : gs_.illegal_turns) {
            if (!enumerate({t.first}, {t.second})) {
                out.limit = "more than " + std::to_string(cap_) + " leg cells";
                out.cells = cells_.size();
                return out;
            }
        }
        out.cells = cells_.size();
        for (auto& cell : cells_) link(cell);
        refine(out);
        return out;
    }

private:
    struct Piece {
        double lo, hi;  // closed range of l inside the cell
        int target;
        bool flip;      // the image path runs through the target backwards
    };
    struct Cell {
        EdgePath a, b;
        double lo, hi;
        double c;
        std::size_t split;  // index where g(a) and g(b) part
        std::vector<Piece> pieces;
    };
    using Intervals = std::vector<std::pair<double, double>>;

    static constexpr double kPad = 1e-12;
    static constexpr double kSettledWidth = 1e-9;
    static constexpr std::size_t kIterationCap = 5000;
    static constexpr std::size_t kIntervalCap = 2'000'000;

    double length(const EdgePath& p) const {
        double s = 0.0;
        for (EdgeId e : p) s += len_[e];
        return s;
    }

    EdgePath image(const EdgePath& p) const {
        EdgePath out;
        for (EdgeId e : p) out.insert(out.end(), g_.image(e).begin(), g_.image(e).end());
        return out;
    }

    std::vector<EdgeId> continuations(EdgeId last) const {
        std::vector<EdgeId> out;
        for (EdgeId x : g_.domain().directions_at(g_.domain().term(last))) {
            if (x != reverse(last) && gs_.legal(Turn::of(reverse(last), x))) out.push_back(x);
        }
        return out;
    }

    // cmax: grow the leg whose image is still a prefix of the other until the images part.
    bool max_prefix(LegDynamicsReport& out) {
        std::vector<std::pair<EdgePath, EdgePath>> stack;
        for (const Turn& t : gs_.illegal_turns) stack.push_back({{t.first}, {t.second}});
        std::size_t visited = 0;
        while (!stack.empty()) {
            auto [a, b] = std::move(stack.back());
            stack.pop_back();
            if (++visited > 20 * cap_) {
                out.limit = "common image prefixes did not close up";
                return false;
            }
            auto ga = image(a), gb = image(b);
            std::size_t j = 0;
            while (j < ga.size() && j < gb.size() && ga[j] == gb[j]) ++j;
            if (j < ga.size() && j < gb.size()) {
                out.max_prefix = std::max(out.max_prefix, length(EdgePath(ga.begin(), ga.begin() + static_cast<std::ptrdiff_t>(j))));
                continue;
            }
            bool grow_a = ga.size() <= gb.size();
            EdgePath& leg = grow_a ? a : b;
            for (EdgeId x : continuations(leg.back())) {
                EdgePath longer = leg;
                longer.push_back(x);
                stack.push_back(grow_a ? std::make_pair(longer, b) : std::make_pair(a, longer));
            }
        }
        return true;
    }

    static std::vector<EdgeId> key(const EdgePath& a, const EdgePath& b) {
        std::vector<EdgeId> k;
        k.reserve(a.size() + b.size() + 1);
        k.push_back(static_cast<EdgeId>(a.size()));
        k.insert(k.end(), a.begin(), a.end());
        k.insert(k.end(), b.begin(), b.end());
        return k;
    }

    // Cells under one illegal turn, grown by extending whichever leg hull ends first.
    bool enumerate(EdgePath a, EdgePath b) {
        struct Frame {
            EdgePath a, b;
        };
        std::vector<Frame> stack{{std::move(a), std::move(b)}};
        while (!stack.empty()) {
            Frame f = std::move(stack.back());
            stack.pop_back();
            const double la = length(f.a), lb = length(f.b);
            const double lo = std::max(la - len_[f.a.back()], lb - len_[f.b.back()]);
            const double hi = std::min({la, lb, bound_});
            if (lo >= bound_) continue;
            auto ga = image(f.a), gb = image(f.b);
            std::size_t j = 0;
            while (j < ga.size() && j < gb.size() && ga[j] == gb[j]) ++j;
            if (j < ga.size() && j < gb.size()) {
                // The split is settled for every extension of these hulls.
                if (gs_.legal(Turn::of(ga[j], gb[j]))) continue;
                const double c = length(EdgePath(ga.begin(), ga.begin() + static_cast<std::ptrdiff_t>(j)));
                const double top = (bound_ + c) / lambda_;
                if (lo >= top) continue;
                const double from = std::max(lo, c / lambda_), to = std::min(hi, top);
                if (from < to) {
                    if (cells_.size() >= cap_) return false;
                    index_[key(f.a, f.b)] = static_cast<int>(cells_.size());
                    cells_.push_back({f.a, f.b, from, to, c, j, {}});
                }
            }
            const bool grow_a = la <= lb + 1e-15 * std::max(1.0, lb);
            const bool grow_b = lb <= la + 1e-15 * std::max(1.0, la);
            std::vector<EdgePath> as{f.a}, bs{f.b};
            if (grow_a) {
                as.clear();
                for (EdgeId x : continuations(f.a.back())) {
                    as.push_back(f.a);
                    as.back().push_back(x);
                }
            }
            if (grow_b) {
                bs.clear();
                for (EdgeId x : continuations(f.b.back())) {
                    bs.push_back(f.b);
                    bs.back().push_back(x);
                }
            }
            for (const auto& na : as)
                for (const auto& nb : bs) stack.push_back({na, nb});
        }
        return true;
    }

    static std::vector<double> cumulative(const std::vector<double>& len, const EdgePath& p) {
        std::vector<double> out;
        double s = 0.0;
        for (EdgeId e : p) out.push_back(s += len[e]);
        return out;
    }

    void link(Cell& cell) {
        auto ga = image(cell.a), gb = image(cell.b);
        EdgePath ra(ga.begin() + static_cast<std::ptrdiff_t>(cell.split), ga.end());
        EdgePath rb(gb.begin() + static_cast<std::ptrdiff_t>(cell.split), gb.end());
        auto ca = cumulative(len_, ra), cb = cumulative(len_, rb);
        const double u0 = lambda_ * cell.lo - cell.c, u1 = lambda_ * cell.hi - cell.c;
        std::vector<double> cuts{u0, u1};
        for (double x : ca)
            if (x > u0 && x < u1) cuts.push_back(x);
        for (double x : cb)
            if (x > u0 && x < u1) cuts.push_back(x);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double s0 = cuts[i], s1 = cuts[i + 1];
            auto ka = std::lower_bound(ca.begin(), ca.end(), s1 - 1e-13) - ca.begin();
            auto kb = std::lower_bound(cb.begin(), cb.end(), s1 - 1e-13) - cb.begin();
            if (ka >= static_cast<std::ptrdiff_t>(ra.size()) || kb >= static_cast<std::ptrdiff_t>(rb.size())) continue;
            EdgePath na(ra.begin(), ra.begin() + ka + 1), nb(rb.begin(), rb.begin() + kb + 1);
            const bool flip = nb.front() < na.front();
            auto it = index_.find(flip ? key(nb, na) : key(na, nb));
            if (it == index_.end()) continue;  // pruned: that cell escapes at once
            cell.pieces.push_back({(s0 + cell.c) / lambda_, (s1 + cell.c) / lambda_, it->second, flip});
        }
    }

    static void merge(Intervals& v) {
        std::sort(v.begin(), v.end());
        Intervals out;
        for (auto& iv : v) {
            if (!out.empty() && iv.first <= out.back().second) {
                out.back().second = std::max(out.back().second, iv.second);
            } else {
                out.push_back(iv);
            }
        }
        v.swap(out);
    }

    void refine(LegDynamicsReport& out) {
        std::vector<Intervals> live(cells_.size());
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            for (const auto& p : cells_[i].pieces) live[i].push_back({p.lo, p.hi});
            merge(live[i]);
        }
        for (std::size_t it = 1; it <= kIterationCap; ++it) {
            out.iterations = it;
            std::vector<Intervals> next(cells_.size());
            std::size_t total = 0;
            double widest = 0.0;
            for (std::size_t i = 0; i < cells_.size(); ++i) {
                const Cell& cell = cells_[i];
                for (const auto& p : cell.pieces) {
                    for (const auto& [u, v] : live[i]) {
                        const double x0 = std::max(u, p.lo), x1 = std::min(v, p.hi);
                        if (x0 > x1) continue;
                        const double y0 = lambda_ * x0 - cell.c, y1 = lambda_ * x1 - cell.c;
                        const auto& dest = live[static_cast<std::size_t>(p.target)];
                        auto first = std::lower_bound(dest.begin(), dest.end(), std::make_pair(y0, y0),
                                                      [](const auto& l, const auto& r) { return l.second < r.first; });
                        for (auto d = first; d != dest.end() && d->first <= y1; ++d) {
                            const double z0 = std::max(y0, d->first), z1 = std::min(y1, d->second);
                            if (z0 > z1) continue;
                            next[i].push_back({(z0 + cell.c) / lambda_ - kPad, (z1 + cell.c) / lambda_ + kPad});
                        }
                    }
                }
                merge(next[i]);
                total += next[i].size();
                for (auto& [u, v] : next[i]) widest = std::max(widest, v - u);
            }
            live.swap(next);
            if (total == 0) {
                out.settled = true;
                return;
            }
            if (total > kIntervalCap) {
                out.limit = "surviving leg intervals exceeded " + std::to_string(kIntervalCap);
                return;
            }
            if (widest < kSettledWidth) break;
        }
        orbits(live, out);
    }

    // Every survivor is now a short interval; follow midpoints, then solve each cycle exactly
    // and check the solution against the cell boundaries.
    void orbits(const std::vector<Intervals>& live, LegDynamicsReport& out) {
        std::vector<std::pair<int, std::size_t>> nodes;
        std::map<std::pair<int, std::size_t>, std::size_t> id;
        for (std::size_t i = 0; i < live.size(); ++i)
            for (std::size_t k = 0; k < live[i].size(); ++k) {
                id[{static_cast<int>(i), k}] = nodes.size();
                nodes.push_back({static_cast<int>(i), k});
            }
        const std::size_t none = nodes.size();
        std::vector<std::size_t> succ(nodes.size(), none);
        auto piece_at = [&](int cell, double l) -> const Piece* {
            for (const auto& p : cells_[static_cast<std::size_t>(cell)].pieces) {
                if (l >= p.lo - 1e-9 && l <= p.hi + 1e-9) return &p;
            }
            return nullptr;
        };
        for (std::size_t n = 0; n < nodes.size(); ++n) {
            auto [cell, k] = nodes[n];
            const auto& iv = live[static_cast<std::size_t>(cell)][k];
            const double m = 0.5 * (iv.first + iv.second);
            const Piece* p = piece_at(cell, m);
            if (!p) continue;
            const double y = lambda_ * m - cells_[static_cast<std::size_t>(cell)].c;
            const auto& dest = live[static_cast<std::size_t>(p->target)];
            for (std::size_t d = 0; d < dest.size(); ++d) {
                if (y >= dest[d].first - 1e-7 && y <= dest[d].second + 1e-7) {
                    succ[n] = id[{p->target, d}];
                    break;
                }
            }
        }
        std::vector<int> state(nodes.size(), 0);
        std::vector<long long> periods;
        bool unresolved = false;
        for (std::size_t s = 0; s < nodes.size(); ++s) {
            std::vector<std::size_t> trail;
            std::size_t n = s;
            while (n != none && state[n] == 0) {
                state[n] = 1;
                trail.push_back(n);
                n = succ[n];
            }
            if (n != none && state[n] == 1) {
                auto from = std::find(trail.begin(), trail.end(), n);
                std::vector<std::size_t> cycle(from, trail.end());
                auto period = verify(cycle, nodes, live);
                if (period) {
                    periods.push_back(*period);
                } else {
                    unresolved = true;
                }
            }
            for (auto t : trail) state[t] = 2;
        }
        std::sort(periods.begin(), periods.end());
        periods.erase(std::unique(periods.begin(), periods.end()), periods.end());
        out.periods = periods;
        if (periods.empty() && unresolved) {
            out.limit = "surviving leg intervals without a verified periodic orbit";
            return;
        }
        if (periods.empty()) {
            out.limit = "surviving leg intervals that never close up";
            return;
        }
        out.settled = true;
    }

    std::optional<long long> verify(const std::vector<std::size_t>& cycle, const std::vector<std::pair<int, std::size_t>>& nodes,
                                    const std::vector<Intervals>& live) const {
        const std::size_t q = cycle.size();
        std::vector<double> cs;
        for (auto n : cycle) cs.push_back(cells_[static_cast<std::size_t>(nodes[n].first)].c);
        double acc = 0.0;
        for (std::size_t i = 0; i < q; ++i) acc = acc * lambda_ + cs[i];
        const double l0 = acc / (std::pow(lambda_, static_cast<double>(q)) - 1.0);
        double l = l0;
        int flips = 0;
        for (std::size_t i = 0; i < q; ++i) {
            auto [cell, k] = nodes[cycle[i]];
            const auto& iv = live[static_cast<std::size_t>(cell)][k];
            if (l < iv.first - 1e-8 || l > iv.second + 1e-8) return std::nullopt;
            const Piece* hit = nullptr;
            for (const auto& p : cells_[static_cast<std::size_t>(cell)].pieces) {
                if (l >= p.lo - 1e-9 && l <= p.hi + 1e-9) hit = &p;
            }
            if (!hit || hit->target != nodes[cycle[(i + 1) % q]].first) return std::nullopt;
            flips += hit->flip ? 1 : 0;
            l = lambda_ * l - cs[i];
        }
        if (std::abs(l - l0) > 1e-7) return std::nullopt;
        return static_cast<long long>(q) * (flips % 2 ? 2 : 1);
    }

    const GraphMap& g_;
    GateStructure gs_;
    std::size_t cap_;
    double lambda_ = 0.0;
    double bound_ = 0.0;
    std::vector<double> len_;
    std::vector<Cell> cells_;
    std::map<std::vector<EdgeId>, int> index_;
};

}  // namespace detail

inline LegDynamicsReport leg_dynamics(const GraphMap& g, std::size_t cell_cap = kLegDynamicsCellCap) {
    require_train_track(g, "leg_dynamics");
    if (matrix_class(transition_matrix(g)) != MatrixClass::primitive) {
        throw PreconditionError("leg_dynamics: transition matrix is not primitive");
    }
    return detail::LegDynamics(g, cell_cap).run();
}

}  // namespace lonetrack
