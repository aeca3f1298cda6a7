#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "axes.hpp"
#include "errors.hpp"
#include "folds.hpp"
#include "graph.hpp"
#include "io.hpp"
#include "isomorphism.hpp"
#include "nielsen.hpp"
#include "spectral.hpp"
#include "traintrack.hpp"
#include "whitehead.hpp"

namespace lonetrack {

inline constexpr int kReportSchemaVersion = 1;

enum ExitCode : int { kExitOk = 0, kExitNegative = 1, kExitUnknown = 2, kExitInputError = 3 };

struct CliOptions {
    int bound = kDefaultNielsenBound;
    std::string flavor = "ideal";
    bool assert_fully_irreducible = false;
    int periods = 1;
    int samples = 8;
    int max_power = 12;
    std::size_t max_cells = kLegDynamicsCellCap;  // leg dynamics cap
    std::optional<GraphMapDocument> second;  // conjugate-power
};

struct CliResult {
    nlohmann::ordered_json report;
    std::string text;
    int exit_code = kExitOk;
    std::string dot;  // whitehead
    std::string csv;  // fold-line
};

namespace cli_detail {

using Json = nlohmann::ordered_json;

// Floats are rounded to 12 significant digits before they reach the JSON writer.
inline double round12(double x) {
    if (!std::isfinite(x)) return x;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::strtod(buf, nullptr);
}

inline std::string fmt12(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline Json half(HalfInt h) { return h.str(); }

inline Json turn_json(const MarkedGraph& G, const Turn& t) { return Json::array({G.label(t.first), G.label(t.second)}); }

inline Json path_json(const MarkedGraph& G, std::span<const EdgeId> p) { return path_string(G, p); }

inline Json graph_json(const MarkedGraph& G) {
    Json out;
    Json vs = Json::array();
    for (std::size_t v = 0; v < G.vertex_count(); ++v) vs.push_back(G.vertex_name(static_cast<VertexId>(v)));
    out["vertices"] = vs;
    Json es = Json::array();
    for (std::size_t k = 0; k < G.edge_count(); ++k) {
        EdgeId e = static_cast<EdgeId>(2 * k);
        Json edge;
        edge["label"] = G.edge_name(static_cast<int>(k));
        edge["from"] = G.vertex_name(G.init(e));
        edge["to"] = G.vertex_name(G.term(e));
        if (G.has_lengths()) edge["length"] = round12(G.length(e));
        es.push_back(edge);
    }
    out["edges"] = es;
    return out;
}

inline Json map_json(const GraphMap& g) {
    Json out = Json::object();
    for (std::size_t k = 0; k < g.domain().edge_count(); ++k) {
        out[g.domain().edge_name(static_cast<int>(k))] = path_json(g.codomain(), g.image(static_cast<EdgeId>(2 * k)));
    }
    return out;
}

inline Json whitehead_json(const WhiteheadGraph& w) {
    Json out;
    out["flavor"] = to_string(w.flavor);
    out["vertices"] = w.labels;
    Json es = Json::array();
    for (auto [a, b] : w.edges) es.push_back(Json::array({w.labels[a], w.labels[b]}));
    out["edges"] = es;
    Json comps = Json::array();
    for (const auto& c : w.components()) {
        Json labels = Json::array();
        for (int v : c) labels.push_back(w.labels[v]);
        comps.push_back(labels);
    }
    out["components"] = comps;
    Json cuts = Json::array();
    for (int v : cut_vertices(w)) cuts.push_back(w.labels[v]);
    out["cut_vertices"] = cuts;
    return out;
}

inline Json fold_sequence_json(const FoldSequence& seq) {
    Json out;
    if (seq.lambda) out["lambda"] = round12(*seq.lambda);
    out["fold_count"] = seq.fold_count();
    Json moves = Json::array();
    for (const auto& m : seq.moves) {
        const MarkedGraph& src = m.map.domain();
        Json j;
        j["kind"] = to_string(m.kind);
        switch (m.kind) {
            case MoveKind::subdivide:
                j["direction"] = src.label(m.edge);
                j["position"] = m.position;
                break;
            case MoveKind::fold:
                j["turn"] = Json::array({src.label(m.edge), src.label(m.other)});
                j["segment_image"] = path_json(*seq.graphs.front(), m.image);
                j["image_edges"] = m.position;
                break;
            case MoveKind::homeomorphism:
                j["edge_map"] = map_json(m.map);
                break;
        }
        if (seq.lambda && m.kind != MoveKind::homeomorphism) j["amount"] = round12(m.amount);
        j["target"] = graph_json(m.map.codomain());
        moves.push_back(j);
    }
    out["moves"] = moves;
    return out;
}

inline Json signature_json(const AxisSignature& s) {
    Json out;
    out["word"] = s.word;
    out["repetitions"] = s.repetitions;
    out["lambda"] = round12(s.lambda);
    out["period"] = round12(s.period);
    return out;
}

inline Json nielsen_json(const PeriodicNielsenReport& r) {
    Json out;
    out["base_exponent"] = r.base_exponent;
    out["powers_searched"] = r.powers_searched;
    out["leg_bound"] = r.base.search_bound;
    if (r.dynamics) {
        Json dyn;
        dyn["settled"] = r.dynamics->settled;
        dyn["periods"] = r.dynamics->periods;
        dyn["cells"] = r.dynamics->cells;
        dyn["max_prefix"] = round12(r.dynamics->max_prefix);
        dyn["leg_length_bound"] = round12(r.dynamics->leg_bound);
        out["leg_dynamics"] = dyn;
    }
    out["stability"] = to_string(periodic_stability(r));
    if (r.found_at) out["found_at_power"] = *r.found_at;
    const NielsenPathReport& shown = r.found ? *r.found : r.base;
    Json paths = Json::array();
    for (const auto& np : shown.paths) paths.push_back(path_json(shown.searched_map.domain(), np.path));
    out["paths"] = paths;
    out["exhaustive"] = r.complete;
    if (!r.limit.empty()) out["limit"] = r.limit;
    if (shown.oracle_length) {
        out["oracle_length"] = *shown.oracle_length;
        out["oracle_agrees"] = *shown.oracle_agrees;
    }
    return out;
}

inline Json lone_axis_json(const LoneAxisReport& r) {
    Json out;
    out["overall"] = to_string(r.overall);
    out["reason"] = r.reason;
    out["rank"] = r.rank;
    out["fully_irreducible_asserted"] = r.fully_irreducible_asserted;
    out["irreducibility_criterion"] = r.irreducibility_criterion;
    out["train_track"] = true;
    out["matrix_class"] = to_string(r.matrix);
    out["lambda"] = round12(r.lambda);
    out["rotationless_exponent"] = r.rotationless_exponent;
    out["illegal_turns"] = r.illegal_turns;
    Json np;
    np["stability"] = to_string(r.nielsen);
    np["paths"] = r.nielsen_paths;
    np["leg_bound"] = r.nielsen_bound;
    np["periods"] = r.nielsen_periods;
    np["powers_searched"] = r.nielsen_powers_searched;
    if (r.nielsen_found_at) np["found_at_power"] = *r.nielsen_found_at;
    if (r.oracle_agrees) np["oracle_agrees"] = *r.oracle_agrees;
    out["nielsen"] = np;
    if (r.index) {
        Json idx;
        idx["value"] = half(*r.index);
        idx["source"] = r.index_source;
        Json list = Json::array();
        for (HalfInt h : r.index_list) list.push_back(half(h));
        idx["list"] = list;
        if (r.gate_index) idx["gate_index_sum"] = half(*r.gate_index);
        idx["target"] = half(HalfInt::from_twice(3 - 2 * static_cast<long long>(r.rank)));
        idx["condition"] = *r.index_condition;
        out["index"] = idx;
    }
    if (r.ideal_graph) {
        out["ideal_whitehead_graph"] = whitehead_json(*r.ideal_graph);
        out["cut_vertex_condition"] = *r.cut_vertex_condition;
    }
    if (r.unique_illegal_turn_check) out["unique_illegal_turn"] = *r.unique_illegal_turn_check;
    return out;
}

inline std::string yes_no(bool b) { return b ? "yes" : "no"; }

inline GraphMap rotationless_power_of(const GraphMap& g) {
    return power(g, static_cast<int>(periodic_structure(g).rotationless_exponent));
}

inline CliResult run_check(const GraphMapDocument& doc) {
    CliResult res;
    const GraphMap& g = doc.map;
    auto verdict = is_train_track(g);
    auto gs = gates(g);
    Json& r = res.report;
    r["train_track"] = verdict.train_track;
    if (!verdict.train_track) {
        r["reason"] = verdict.reason;
        r["witness_edge"] = g.domain().label(*verdict.edge);
        r["witness_turn"] = turn_json(g.domain(), *verdict.turn);
    }
    r["gates"] = gs.gates.size();
    r["illegal_turns"] = gs.illegal_turns.size();
    res.text = "train track: " + yes_no(verdict.train_track) + "\n";
    if (!verdict.train_track) res.text += "  " + verdict.reason + "\n";
    res.text += "gates: " + std::to_string(gs.gates.size()) + ", illegal turns: " + std::to_string(gs.illegal_turns.size()) + "\n";
    res.exit_code = verdict.train_track ? kExitOk : kExitNegative;
    return res;
}

inline CliResult run_spectral(const GraphMapDocument& doc) {
    CliResult res;
    const GraphMap& g = doc.map;
    auto m = transition_matrix(g);
    auto cls = matrix_class(m);
    Json& r = res.report;
    Json rows = Json::array();
    for (std::size_t f = 0; f < m.size(); ++f) {
        Json row = Json::array();
        for (std::size_t e = 0; e < m.size(); ++e) row.push_back(m(f, e));
        rows.push_back(row);
    }
    r["matrix"] = rows;
    r["matrix_class"] = to_string(cls);
    res.text = "transition matrix: " + to_string(cls) + "\n";
    if (cls == MatrixClass::reducible) {
        res.exit_code = kExitNegative;
        return res;
    }
    auto pf = pf_data(m);
    r["lambda"] = round12(pf.lambda);
    Json lengths = Json::object();
    for (std::size_t k = 0; k < g.domain().edge_count(); ++k) lengths[g.domain().edge_name(static_cast<int>(k))] = round12(pf.edge_lengths[k]);
    r["eigenmetric"] = lengths;
    r["residual"] = round12(pf.residual);
    r["iterations"] = pf.iterations;
    res.text += "lambda: " + fmt12(pf.lambda) + "\neigenmetric:";
    for (std::size_t k = 0; k < g.domain().edge_count(); ++k) {
        res.text += " " + g.domain().edge_name(static_cast<int>(k)) + "=" + fmt12(pf.edge_lengths[k]);
    }
    res.text += "\n";
    return res;
}

inline CliResult run_gates(const GraphMapDocument& doc) {
    CliResult res;
    const GraphMap& g = doc.map;
    const MarkedGraph& G = g.domain();
    auto gs = gates(g);
    auto ps = periodic_structure(g);
    Json& r = res.report;
    Json vertices = Json::array();
    for (std::size_t v = 0; v < G.vertex_count(); ++v) {
        Json vj;
        vj["vertex"] = G.vertex_name(static_cast<VertexId>(v));
        vj["period"] = ps.vertex_period[v];
        Json gl = Json::array();
        for (std::size_t k = 0; k < gs.gates.size(); ++k) {
            if (gs.gate_vertex[k] != static_cast<VertexId>(v)) continue;
            Json members = Json::array();
            for (EdgeId d : gs.gates[k]) members.push_back(G.label(d));
            gl.push_back(members);
        }
        vj["gates"] = gl;
        Json periodic = Json::array();
        for (EdgeId d : G.directions_at(static_cast<VertexId>(v))) {
            if (ps.direction_period[d] > 0) periodic.push_back(G.label(d));
        }
        vj["periodic_directions"] = periodic;
        vertices.push_back(vj);
    }
    r["vertices"] = vertices;
    Json illegal = Json::array();
    for (const Turn& t : gs.illegal_turns) illegal.push_back(turn_json(G, t));
    r["illegal_turns"] = illegal;
    Json principal = Json::array();
    for (VertexId v : ps.principal) principal.push_back(G.vertex_name(v));
    r["principal_vertices"] = principal;
    r["rotationless_exponent"] = ps.rotationless_exponent;
    r["gate_index_sum"] = half(gate_index_sum(g));
    Json taken = Json::array();
    for (const Turn& t : taken_turns(g)) taken.push_back(turn_json(G, t));
    r["taken_turns"] = taken;
    std::ostringstream text;
    text << "gates: " << gs.gates.size() << "\n";
    for (std::size_t k = 0; k < gs.gates.size(); ++k) {
        text << "  " << G.vertex_name(gs.gate_vertex[k]) << ": {";
        for (std::size_t i = 0; i < gs.gates[k].size(); ++i) text << (i ? ", " : "") << G.label(gs.gates[k][i]);
        text << "}\n";
    }
    text << "illegal turns: " << gs.illegal_turns.size() << "\n";
    for (const Turn& t : gs.illegal_turns) text << "  " << turn_string(G, t) << "\n";
    text << "rotationless exponent: " << ps.rotationless_exponent << "\n";
    text << "GI: " << gate_index_sum(g) << "\n";
    res.text = text.str();
    return res;
}

inline CliResult run_pnp(const GraphMapDocument& doc, const CliOptions& opt) {
    CliResult res;
    auto search = find_periodic_nielsen_paths(doc.map, opt.bound, opt.max_cells);
    res.report = nielsen_json(search);
    auto stability = periodic_stability(search);
    std::ostringstream text;
    text << "periodic Nielsen paths: " << to_string(stability) << "\n";
    text << "powers searched:";
    for (auto k : search.powers_searched) text << " " << k;
    text << " (leg bound " << opt.bound << ")\n";
    if (search.dynamics && search.dynamics->settled) {
        text << "leg dynamics: " << search.dynamics->cells << " cells, periods:";
        if (search.dynamics->periods.empty()) text << " none";
        for (auto p : search.dynamics->periods) text << " " << p;
        text << "\n";
    }
    if (search.found) {
        text << "found at power " << *search.found_at << ":\n";
        for (const auto& np : search.found->paths) text << "  " << path_string(search.found->searched_map.domain(), np.path) << "\n";
    }
    if (!search.limit.empty()) text << "limit: " << search.limit << "\n";
    res.text = text.str();
    res.exit_code = stability == Stability::fully_stable ? kExitOk : stability == Stability::not_fully_stable ? kExitNegative : kExitUnknown;
    return res;
}

inline CliResult run_whitehead(const GraphMapDocument& doc, const CliOptions& opt) {
    CliResult res;
    const GraphMap& g = doc.map;
    const std::string name = doc.name.empty() ? "whitehead" : doc.name;
    Json& r = res.report;
    r["flavor"] = opt.flavor;
    std::vector<WhiteheadGraph> graphs;
    std::vector<std::string> names;
    if (opt.flavor == "local") {
        for (std::size_t v = 0; v < g.domain().vertex_count(); ++v) {
            graphs.push_back(local_whitehead_graph(g, static_cast<VertexId>(v)));
            names.push_back(name + ":" + g.domain().vertex_name(static_cast<VertexId>(v)));
        }
    } else if (opt.flavor == "stable") {
        require_train_track(g, "whitehead");
        GraphMap p = rotationless_power_of(g);
        auto ps = periodic_structure(p);
        for (std::size_t v = 0; v < p.domain().vertex_count(); ++v) {
            if (ps.vertex_period[v] == 0) continue;
            graphs.push_back(stable_whitehead_graph(p, static_cast<VertexId>(v)));
            names.push_back(name + ":" + p.domain().vertex_name(static_cast<VertexId>(v)));
        }
    } else if (opt.flavor == "ideal") {
        auto search = find_periodic_nielsen_paths(g, opt.bound, opt.max_cells);
        auto stability = periodic_stability(search);
        r["nielsen"] = nielsen_json(search);
        if (stability != Stability::fully_stable) {
            r["supported"] = false;
            r["reason"] = stability == Stability::not_fully_stable ? "representative has periodic Nielsen paths"
                                                                   : "periodic Nielsen path search inconclusive";
            res.text = "ideal Whitehead graph: " + r["reason"].get<std::string>() + "\n";
            res.exit_code = stability == Stability::not_fully_stable ? kExitNegative : kExitUnknown;
            return res;
        }
        r["supported"] = true;
        graphs.push_back(ideal_whitehead_graph(rotationless_power_of(g), search.base));
        names.push_back(name);
    } else {
        throw InputError("flavor", "unknown Whitehead flavor '" + opt.flavor + "' (local, stable, ideal)");
    }
    Json list = Json::array();
    std::ostringstream text;
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        Json j = whitehead_json(graphs[i]);
        j["name"] = names[i];
        list.push_back(j);
        res.dot += to_dot(graphs[i], names[i]);
        text << names[i] << " (" << to_string(graphs[i].flavor) << "): " << graphs[i].vertex_count() << " vertices, "
             << graphs[i].edges.size() << " edges, " << graphs[i].components().size() << " component(s), "
             << cut_vertices(graphs[i]).size() << " cut vertex(es)\n";
    }
    r["graphs"] = list;
    res.text = text.str();
    return res;
}

inline CliResult run_index(const GraphMapDocument& doc, const CliOptions& opt) {
    CliResult res;
    const GraphMap& g = doc.map;
    auto search = find_periodic_nielsen_paths(g, opt.bound, opt.max_cells);
    auto stability = periodic_stability(search);
    Json& r = res.report;
    r["rank"] = g.domain().rank();
    r["nielsen"] = nielsen_json(search);
    if (stability == Stability::unknown_at_bound) {
        r["index"] = nullptr;
        res.text = "index: unknown (periodic Nielsen path search inconclusive)\n";
        res.exit_code = kExitUnknown;
        return res;
    }
    if (stability == Stability::not_fully_stable) {
        HalfInt i = HalfInt::integer(1 - g.domain().rank());
        r["index"] = half(i);
        r["source"] = "nielsen-paths";
        r["index_list"] = Json::array({half(i)});
        res.text = "index: " + i.str() + " (implied by Nielsen paths: 1 - r)\n";
        return res;
    }
    auto idx = index_report(rotationless_power_of(g), search.base);
    r["index"] = half(idx.index_sum);
    r["source"] = "gates";
    Json list = Json::array();
    for (HalfInt h : idx.index_list) list.push_back(half(h));
    r["index_list"] = list;
    r["gate_index_sum"] = half(idx.gate_index);
    r["within_bounds"] = idx.within_bounds;
    std::ostringstream text;
    text << "index: " << idx.index_sum << " (list:";
    for (HalfInt h : idx.index_list) text << " " << h;
    text << ")\nGI: " << idx.gate_index << "\n1 - r <= i < 0: " << yes_no(idx.within_bounds) << "\n";
    res.text = text.str();
    return res;
}

inline CliResult run_lone_axis(const GraphMapDocument& doc, const CliOptions& opt) {
    CliResult res;
    const bool asserted = opt.assert_fully_irreducible || doc.fully_irreducible_asserted;
    auto rep = lone_axis_decision(doc.map, opt.bound, asserted, opt.max_cells);
    res.report = lone_axis_json(rep);
    std::ostringstream text;
    text << "overall: " << to_string(rep.overall) << " (" << rep.reason << ")\n";
    text << "lambda: " << fmt12(rep.lambda) << ", rotationless exponent: " << rep.rotationless_exponent << "\n";
    text << "periodic Nielsen paths: " << to_string(rep.nielsen) << "\n";
    if (rep.index) {
        text << "index: " << *rep.index << " [" << rep.index_source << "], 3/2 - r = " << HalfInt::from_twice(3 - 2 * static_cast<long long>(rep.rank))
             << ": " << yes_no(*rep.index_condition) << "\n";
    }
    if (rep.ideal_graph) {
        text << "ideal Whitehead graph: " << rep.ideal_graph->vertex_count() << " vertices, " << rep.ideal_graph->edges.size()
             << " edges, cut vertices: " << *rep.cut_vertex_count << "\n";
    }
    if (rep.unique_illegal_turn_check) text << "unique illegal turn: " << yes_no(*rep.unique_illegal_turn_check) << "\n";
    res.text = text.str();
    switch (rep.overall) {
        case LoneAxisVerdict::lone_axis:
        case LoneAxisVerdict::conditional: res.exit_code = kExitOk; break;
        case LoneAxisVerdict::not_lone_axis: res.exit_code = kExitNegative; break;
        case LoneAxisVerdict::unknown: res.exit_code = kExitUnknown; break;
    }
    return res;
}

inline CliResult run_fold_line(const GraphMapDocument& doc, const CliOptions& opt) {
    CliResult res;
    auto line = fold_line(doc.map, opt.periods, opt.samples);
    Json& r = res.report;
    r["period"] = round12(line.period);
    r["periods"] = opt.periods;
    r["samples_per_period"] = opt.samples;
    Json samples = Json::array();
    for (const auto& s : line.samples) {
        Json j;
        j["step"] = s.step;
        j["t"] = round12(s.t);
        j["graph"] = graph_json(s.graph);
        samples.push_back(j);
    }
    r["samples"] = samples;
    // Periodicity: sample j against sample j + M, up to isometry.
    bool periodic = true;
    for (std::size_t j = 0; opt.samples > 0 && j + opt.samples < line.samples.size(); ++j) {
        periodic = periodic && are_isomorphic(line.samples[j].graph, line.samples[j + opt.samples].graph, true, 1e-8).has_value();
    }
    r["periodic"] = periodic;
    r["decomposition"] = fold_sequence_json(line.decompositions.front());
    res.csv = fold_line_csv(line);
    std::ostringstream text;
    text << "period log(lambda): " << fmt12(line.period) << "\n";
    text << "samples: " << line.samples.size() << " over " << opt.periods << " period(s)\n";
    text << "folds per period: " << line.decompositions.front().fold_count() << "\n";
    text << "periodic within 1e-8: " << yes_no(periodic) << "\n";
    res.text = text.str();
    res.exit_code = periodic ? kExitOk : kExitNegative;
    return res;
}

inline CliResult run_signature(const GraphMapDocument& doc, const CliOptions& opt) {
    CliResult res;
    try {
        auto sig = axis_signature(doc.map, opt.bound);
        res.report["defined"] = true;
        res.report["signature"] = signature_json(sig);
        res.text = "signature: " + std::to_string(sig.word.size()) + " fold record(s), repeated " + std::to_string(sig.repetitions) +
                   " time(s) per period, lambda " + fmt12(sig.lambda) + "\n";
        for (const auto& w : sig.word) res.text += "  " + w + "\n";
    } catch (const PreconditionError& e) {
        res.report["defined"] = false;
        res.report["reason"] = e.what();
        res.text = std::string("signature undefined: ") + e.what() + "\n";
        res.exit_code = kExitNegative;
    }
    return res;
}

inline CliResult run_conjugate_power(const GraphMapDocument& doc, const CliOptions& opt) {
    if (!opt.second) throw InputError("arguments", "conjugate-power needs a second document");
    CliResult res;
    auto c = conjugate_power_check(doc.map, opt.second->map, opt.max_power, opt.bound);
    Json& r = res.report;
    r["verdict"] = to_string(c.verdict);
    if (c.verdict == ConjugacyVerdict::conjugate_powers) {
        r["k"] = c.k;
        r["l"] = c.l;
    }
    r["reason"] = c.reason;
    r["max_power"] = opt.max_power;
    r["completeness"] = "unproven: equal signatures are sufficient; a mismatch is reported as not-detected";
    if (c.first) r["first_signature"] = signature_json(*c.first);
    if (c.second) r["second_signature"] = signature_json(*c.second);
    res.text = "verdict: " + to_string(c.verdict);
    if (c.verdict == ConjugacyVerdict::conjugate_powers) res.text += " (k=" + std::to_string(c.k) + ", l=" + std::to_string(c.l) + ")";
    res.text += "\n  " + c.reason + "\n";
    res.exit_code = c.verdict == ConjugacyVerdict::conjugate_powers ? kExitOk : kExitNegative;
    return res;
}

}  // namespace cli_detail

inline const std::vector<std::string>& subcommand_names() {
    static const std::vector<std::string> names{"check", "spectral", "gates", "pnp", "whitehead", "index",
                                                "lone-axis", "fold-line", "signature", "conjugate-power"};
    return names;
}

// Runs one subcommand on a parsed document. Failures are folded into the report and the
// exit code: input and precondition errors give 3, exhausted search budgets give 2.
inline CliResult run_subcommand(const std::string& name, const CliOptions& opt, const GraphMapDocument& doc) {
    using namespace cli_detail;
    CliResult res;
    try {
        if (name == "check") {
            res = run_check(doc);
        } else if (name == "spectral") {
            res = run_spectral(doc);
        } else if (name == "gates") {
            res = run_gates(doc);
        } else if (name == "pnp") {
            res = run_pnp(doc, opt);
        } else if (name == "whitehead") {
            res = run_whitehead(doc, opt);
        } else if (name == "index") {
            res = run_index(doc, opt);
        } else if (name == "lone-axis") {
            res = run_lone_axis(doc, opt);
        } else if (name == "fold-line") {
            res = run_fold_line(doc, opt);
        } else if (name == "signature") {
            res = run_signature(doc, opt);
        } else if (name == "conjugate-power") {
            res = run_conjugate_power(doc, opt);
        } else {
            throw InputError("subcommand", "unknown subcommand '" + name + "'");
        }
    } catch (const UnknownAtBound& e) {
        res = {};
        res.report["error"] = {{"kind", "unknown-at-bound"}, {"message", e.what()}};
        res.text = std::string("unknown at bound: ") + e.what() + "\n";
        res.exit_code = kExitUnknown;
    } catch (const StageError& e) {
        res = {};
        res.report["error"] = {{"kind", "stage"}, {"stage", e.stage()}, {"message", e.what()}};
        res.text = std::string("error: ") + e.what() + "\n";
        res.exit_code = kExitInputError;
    } catch (const InputError& e) {
        res = {};
        res.report["error"] = {{"kind", "input"}, {"check", e.check()}, {"message", e.what()}};
        res.text = std::string("error: ") + e.what() + "\n";
        res.exit_code = kExitInputError;
    } catch (const PreconditionError& e) {
        res = {};
        res.report["error"] = {{"kind", "precondition"}, {"message", e.what()}};
        res.text = std::string("error: ") + e.what() + "\n";
        res.exit_code = kExitInputError;
    } catch (const Error& e) {
        res = {};
        res.report["error"] = {{"kind", "internal"}, {"message", e.what()}};
        res.text = std::string("internal error: ") + e.what() + "\n";
        res.exit_code = kExitInputError;
    }
    Json wrapped;
    wrapped["schema_version"] = kReportSchemaVersion;
    wrapped["subcommand"] = name;
    wrapped["input"] = doc.name;
    wrapped["exit_code"] = res.exit_code;
    for (auto& [k, v] : res.report.items()) wrapped[k] = v;
    res.report = std::move(wrapped);
    return res;
}

}  // namespace lonetrack
