#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "lonetrack/graph.hpp"

namespace fixtures {

using namespace lonetrack;

inline std::shared_ptr<MarkedGraph> rose(const std::vector<std::string>& names) {
    auto g = std::make_shared<MarkedGraph>();
    g->add_vertex("v0");
    for (const auto& n : names) g->add_edge(n, 0, 0);
    return g;
}

// Words over a rose: letters are edge names, a trailing ' inverts.
inline EdgePath word(const MarkedGraph& g, const std::string& text) {
    EdgePath out;
    std::string token;
    auto flush = [&] {
        if (!token.empty()) out.push_back(*g.find_edge(token));
        token.clear();
    };
    for (char c : text) {
        if (c == ' ') {
            flush();
        } else {
            token += c;
        }
    }
    flush();
    return out;
}

inline GraphMap rose_map(const std::vector<std::string>& names, const std::vector<std::string>& images) {
    auto g = rose(names);
    std::vector<EdgePath> imgs;
    for (const auto& w : images) imgs.push_back(word(*g, w));
    return GraphMap::self_map(g, imgs);
}

// a -> a b, b -> a
inline GraphMap fibonacci() { return rose_map({"a", "b"}, {"a b", "a"}); }

// a -> b, b -> c, c -> a b
inline GraphMap tribonacci_like() { return rose_map({"a", "b", "c"}, {"b", "c", "a b"}); }

inline GraphMap tribonacci_relabeled() { return rose_map({"x", "y", "z"}, {"y", "z", "x y"}); }

// Random positive automorphism of the rank-r rose: a composition of elementary positive
// transvections and permutations. Images are positive words, so every such map is a train
// track map.
inline GraphMap random_positive_automorphism(int rank, std::mt19937& rng, int steps = 6) {
    std::vector<std::string> names;
    for (int i = 0; i < rank; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
    auto g = rose(names);
    std::vector<EdgePath> current;
    for (int i = 0; i < rank; ++i) current.push_back({2 * i});
    std::uniform_int_distribution<int> pick(0, rank - 1), kind(0, 2);
    for (int s = 0; s < steps; ++s) {
        int i = pick(rng), j = pick(rng);
        int k = kind(rng);
        if (k == 2) {
            std::swap(current[i], current[j]);
            continue;
        }
        if (i == j) j = (i + 1) % rank;
        // Precompose with a_i -> a_i a_j or a_i -> a_j a_i: substitute in the image of a_i.
        EdgePath next;
        if (k == 0) {
            next = current[i];
            next.insert(next.end(), current[j].begin(), current[j].end());
        } else {
            next = current[j];
            next.insert(next.end(), current[i].begin(), current[i].end());
        }
        current[i] = next;
    }
    return GraphMap::self_map(g, current);
}

}  // namespace fixtures
