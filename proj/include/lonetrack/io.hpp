#pragma once

#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "rational.hpp"

namespace lonetrack {

struct GraphMapDocument {
    std::string name;
    std::shared_ptr<const MarkedGraph> graph;
    GraphMap map;
    bool fully_irreducible_asserted = false;

    friend bool operator==(const GraphMapDocument& a, const GraphMapDocument& b) {
        return a.name == b.name && a.fully_irreducible_asserted == b.fully_irreducible_asserted && *a.graph == *b.graph &&
               a.map == b.map;
    }
};

namespace detail {

struct Token {
    std::string text;
    int column = 0;
};

inline std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        if (line[i] == ' ' || line[i] == '\t' || line[i] == '\r') {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        out.push_back({std::string(line.substr(start, i - start)), static_cast<int>(start) + 1});
    }
    return out;
}

inline bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
    if (!alpha(s[0])) return false;
    for (char c : s) {
        if (!alpha(c) && !(c >= '0' && c <= '9')) return false;
    }
    return true;
}

}  // namespace detail

// Line-oriented format:
//   name H                  (optional)
//   graph
//   vertex v0
//   edge a v0 v0
//   map
//   a -> b c'
//   lengths                 (optional)
//   length a 1/3
//   assert fully-irreducible  (optional)
// '#' starts a comment.
inline GraphMapDocument parse_document(std::string_view text) {
    enum class Section { none, graph, map, lengths };
    Section section = Section::none;
    std::string name;
    bool asserted = false;
    auto graph = std::make_shared<MarkedGraph>();
    std::map<std::string, VertexId> vertices;
    std::map<std::string, int> edges;
    struct Rule {
        std::vector<detail::Token> word;
        int line;
    };
    std::map<int, Rule> rules;
    std::map<int, std::pair<Rational, int>> lengths;
    bool saw_graph = false, saw_map = false, saw_lengths = false;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        auto tok = detail::tokenize(line);
        if (tok.empty()) continue;
        auto fail = [&](const std::string& check, const std::string& msg, int column) -> void {
            throw InputError(check, msg, line_no, column);
        };
        const std::string& head = tok[0].text;

        if (head == "graph" || head == "map" || head == "lengths") {
            if (tok.size() != 1) fail("syntax", "section header takes no arguments", tok[1].column);
            bool& seen = head == "graph" ? saw_graph : head == "map" ? saw_map : saw_lengths;
            if (seen) fail("syntax", "section '" + head + "' repeated", tok[0].column);
            if (head != "graph" && !saw_graph) fail("syntax", "section '" + head + "' before 'graph'", tok[0].column);
            seen = true;
            section = head == "graph" ? Section::graph : head == "map" ? Section::map : Section::lengths;
            continue;
        }
        if (head == "name") {
            if (tok.size() != 2) fail("syntax", "expected 'name <identifier>'", tok[0].column);
            if (!name.empty()) fail("syntax", "name given twice", tok[0].column);
            name = tok[1].text;
            continue;
        }
        if (head == "assert") {
            if (tok.size() != 2 || tok[1].text != "fully-irreducible") fail("syntax", "expected 'assert fully-irreducible'", tok[0].column);
            asserted = true;
            continue;
        }
        if (head == "vertex") {
            if (section != Section::graph) fail("syntax", "'vertex' outside the graph section", tok[0].column);
            if (tok.size() != 2) fail("syntax", "expected 'vertex <name>'", tok[0].column);
            if (!detail::is_identifier(tok[1].text)) fail("syntax", "bad vertex name '" + tok[1].text + "'", tok[1].column);
            if (vertices.count(tok[1].text)) fail("duplicate-label", "vertex " + tok[1].text + " repeated", tok[1].column);
            vertices[tok[1].text] = graph->add_vertex(tok[1].text);
            continue;
        }
        if (head == "edge") {
            if (section != Section::graph) fail("syntax", "'edge' outside the graph section", tok[0].column);
            if (tok.size() != 4) fail("syntax", "expected 'edge <label> <from> <to>'", tok[0].column);
            if (!detail::is_identifier(tok[1].text)) fail("syntax", "bad edge label '" + tok[1].text + "'", tok[1].column);
            if (edges.count(tok[1].text) || vertices.count(tok[1].text)) fail("duplicate-label", "label " + tok[1].text + " repeated", tok[1].column);
            for (int i : {2, 3}) {
                if (!vertices.count(tok[i].text)) fail("dangling-endpoint", "unknown vertex '" + tok[i].text + "'", tok[i].column);
            }
            EdgeId e = graph->add_edge(tok[1].text, vertices[tok[2].text], vertices[tok[3].text]);
            edges[tok[1].text] = pair_of(e);
            continue;
        }
        if (head == "length") {
            if (section != Section::lengths) fail("syntax", "'length' outside the lengths section", tok[0].column);
            if (tok.size() != 3) fail("syntax", "expected 'length <label> <value>'", tok[0].column);
            auto it = edges.find(tok[1].text);
            if (it == edges.end()) fail("unknown-edge", "unknown edge '" + tok[1].text + "'", tok[1].column);
            if (lengths.count(it->second)) fail("duplicate-length", "length of " + tok[1].text + " given twice", tok[1].column);
            auto value = Rational::parse(tok[2].text);
            if (!value) fail("syntax", "bad length '" + tok[2].text + "'", tok[2].column);
            if (*value <= Rational(0)) fail("lengths", "length of " + tok[1].text + " is not positive", tok[2].column);
            lengths.emplace(it->second, std::make_pair(*value, line_no));
            continue;
        }
        if (section == Section::map) {
            if (tok.size() < 2 || tok[1].text != "->") fail("syntax", "expected '<label> -> <word>'", tok[0].column);
            auto it = edges.find(head);
            if (it == edges.end()) fail("unknown-edge", "unknown edge '" + head + "'", tok[0].column);
            if (rules.count(it->second)) fail("duplicate-image", "image of " + head + " given twice", tok[0].column);
            if (tok.size() == 2) fail("empty-image", "edge " + head + " has empty image", tok[1].column);
            rules[it->second] = {std::vector<detail::Token>(tok.begin() + 2, tok.end()), line_no};
            continue;
        }
        fail("syntax", "unexpected '" + head + "'", tok[0].column);
    }

    if (!saw_graph) throw InputError("syntax", "missing 'graph' section");
    if (!saw_map) throw InputError("syntax", "missing 'map' section");
    std::vector<EdgePath> images(graph->edge_count());
    for (std::size_t k = 0; k < graph->edge_count(); ++k) {
        auto it = rules.find(static_cast<int>(k));
        if (it == rules.end()) throw InputError("missing-image", "no image for edge " + graph->edge_name(static_cast<int>(k)));
        EdgePath path;
        for (const auto& t : it->second.word) {
            auto e = graph->find_edge(t.text);
            if (!e) throw InputError("unknown-edge", "unknown edge '" + t.text + "'", it->second.line, t.column);
            if (!path.empty() && graph->term(path.back()) != graph->init(*e)) {
                throw InputError("dangling-image", "image of " + graph->edge_name(static_cast<int>(k)) + " is not a path at '" + t.text + "'",
                                 it->second.line, t.column);
            }
            if (!path.empty() && path.back() == reverse(*e)) {
                throw InputError("non-tight-image", "image of " + graph->edge_name(static_cast<int>(k)) + " backtracks at '" + t.text + "'",
                                 it->second.line, t.column);
            }
            path.push_back(*e);
        }
        images[k] = std::move(path);
    }
    if (saw_lengths) {
        std::vector<Rational> exact;
        for (std::size_t k = 0; k < graph->edge_count(); ++k) {
            auto it = lengths.find(static_cast<int>(k));
            if (it == lengths.end()) throw InputError("lengths", "no length for edge " + graph->edge_name(static_cast<int>(k)));
            exact.push_back(it->second.first);
        }
        graph->set_exact_lengths(exact);
    }
    graph->validate();
    std::shared_ptr<const MarkedGraph> frozen = graph;
    return GraphMapDocument{name, frozen, GraphMap::self_map(frozen, images), asserted};
}

inline std::string serialize_document(const GraphMapDocument& doc) {
    std::ostringstream out;
    const MarkedGraph& G = *doc.graph;
    if (!doc.name.empty()) out << "name " << doc.name << "\n";
    out << "graph\n";
    for (std::size_t v = 0; v < G.vertex_count(); ++v) out << "vertex " << G.vertex_name(static_cast<VertexId>(v)) << "\n";
    for (std::size_t k = 0; k < G.edge_count(); ++k) {
        EdgeId e = static_cast<EdgeId>(2 * k);
        out << "edge " << G.edge_name(static_cast<int>(k)) << " " << G.vertex_name(G.init(e)) << " " << G.vertex_name(G.term(e)) << "\n";
    }
    out << "map\n";
    for (std::size_t k = 0; k < G.edge_count(); ++k) {
        out << G.edge_name(static_cast<int>(k)) << " -> " << path_string(G, doc.map.image(static_cast<EdgeId>(2 * k))) << "\n";
    }
    if (G.has_lengths()) {
        out << "lengths\n";
        for (std::size_t k = 0; k < G.edge_count(); ++k) {
            EdgeId e = static_cast<EdgeId>(2 * k);
            out << "length " << G.edge_name(static_cast<int>(k)) << " ";
            if (const auto& exact = G.exact_length(e)) {
                out << exact->str();
            } else {
                // Decimal with at most 15 fractional digits, which the parser reads exactly.
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.15f", G.length(e));
                out << buf;
            }
            out << "\n";
        }
    }
    if (doc.fully_irreducible_asserted) out << "assert fully-irreducible\n";
    return out.str();
}

}  // namespace lonetrack
