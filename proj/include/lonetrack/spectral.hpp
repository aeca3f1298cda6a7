#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"

namespace lonetrack {

// Square nonnegative integer matrix indexed by edge pairs. Entry (f, e) counts how
// often the image of e crosses f in either orientation.
class TransitionMatrix {
public:
    TransitionMatrix() = default;
    explicit TransitionMatrix(std::size_t n) : n_(n), data_(n * n, 0) {}
    TransitionMatrix(std::size_t n, std::vector<std::int64_t> row_major) : n_(n), data_(std::move(row_major)) {
        if (data_.size() != n * n) throw PreconditionError("TransitionMatrix: wrong number of entries");
        for (auto x : data_) {
            if (x < 0) throw PreconditionError("TransitionMatrix: negative entry");
        }
    }

    std::size_t size() const noexcept { return n_; }
    std::int64_t operator()(std::size_t row, std::size_t col) const { return data_[row * n_ + col]; }
    std::int64_t& operator()(std::size_t row, std::size_t col) { return data_[row * n_ + col]; }

    friend TransitionMatrix operator*(const TransitionMatrix& a, const TransitionMatrix& b) {
        TransitionMatrix c(a.n_);
        for (std::size_t i = 0; i < a.n_; ++i)
            for (std::size_t k = 0; k < a.n_; ++k) {
                auto aik = a(i, k);
                if (!aik) continue;
                for (std::size_t j = 0; j < a.n_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }
    friend bool operator==(const TransitionMatrix&, const TransitionMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<std::int64_t> data_;
};

inline TransitionMatrix transition_matrix(const GraphMap& g) {
    if (!g.is_self_map()) throw PreconditionError("transition_matrix: map is not a self-map");
    const std::size_t n = g.domain().edge_count();
    TransitionMatrix m(n);
    for (std::size_t e = 0; e < n; ++e) {
        for (EdgeId f : g.image(static_cast<EdgeId>(2 * e))) ++m(static_cast<std::size_t>(pair_of(f)), e);
    }
    return m;
}

enum class MatrixClass { reducible, irreducible_imprimitive, primitive };

inline std::string to_string(MatrixClass c) {
    switch (c) {
        case MatrixClass::reducible: return "reducible";
        case MatrixClass::irreducible_imprimitive: return "irreducible-imprimitive";
        case MatrixClass::primitive: return "primitive";
    }
    return "?";
}

// Irreducible iff the support digraph is strongly connected; primitive iff some power
// up to Wielandt's bound (n-1)^2 + 1 is strictly positive.
inline MatrixClass matrix_class(const TransitionMatrix& m) {
    const std::size_t n = m.size();
    if (n == 0) return MatrixClass::reducible;
    auto reach = [&](bool transpose) {
        std::vector<char> seen(n, 0);
        std::vector<std::size_t> stack{0};
        seen[0] = 1;
        std::size_t count = 1;
        while (!stack.empty()) {
            auto i = stack.back();
            stack.pop_back();
            for (std::size_t j = 0; j < n; ++j) {
                auto entry = transpose ? m(j, i) : m(i, j);
                if (entry > 0 && !seen[j]) {
                    seen[j] = 1;
                    ++count;
                    stack.push_back(j);
                }
            }
        }
        return count == n;
    };
    if (!reach(false) || !reach(true)) return MatrixClass::reducible;

    std::vector<char> support(n * n), current(n * n);
    for (std::size_t i = 0; i < n * n; ++i) support[i] = current[i] = m(i / n, i % n) > 0;
    const std::size_t bound = (n - 1) * (n - 1) + 1;
    for (std::size_t k = 1; k <= bound; ++k) {
        bool positive = true;
        for (char c : current) positive = positive && c;
        if (positive) return MatrixClass::primitive;
        std::vector<char> next(n * n, 0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t l = 0; l < n; ++l) {
                if (!current[i * n + l]) continue;
                for (std::size_t j = 0; j < n; ++j) next[i * n + j] |= support[l * n + j];
            }
        current.swap(next);
    }
    return MatrixClass::irreducible_imprimitive;
}

struct PFData {
    double lambda = 0.0;
    std::vector<double> edge_lengths;  // positive, summing to 1, indexed by edge pair
    double residual = 0.0;             // max |(M^T l)_e - lambda l_e|
    std::size_t iterations = 0;
};

inline constexpr std::size_t kPowerIterationCap = 1'000'000;
inline constexpr double kPowerIterationTolerance = 1e-13;

// Perron-Frobenius eigenpair of M^T by power iteration from the uniform vector.
// Imprimitive input is iterated on I + M^T, which has the same eigenvector and is
// primitive; lambda is recovered by subtracting the shift.
inline PFData pf_data(const TransitionMatrix& m) {
    const auto cls = matrix_class(m);
    if (cls == MatrixClass::reducible) throw PreconditionError("pf_data: matrix is reducible");
    const std::size_t n = m.size();
    const double shift = cls == MatrixClass::primitive ? 0.0 : 1.0;

    std::vector<double> x(n, 1.0 / static_cast<double>(n)), y(n);
    double estimate = 0.0;
    PFData out;
    for (std::size_t it = 1; it <= kPowerIterationCap; ++it) {
        for (std::size_t e = 0; e < n; ++e) {
            double s = shift * x[e];
            for (std::size_t f = 0; f < n; ++f) s += static_cast<double>(m(f, e)) * x[f];
            y[e] = s;
        }
        double total = 0.0;
        for (double v : y) total += v;
        // x sums to one, so the new total is the Collatz-Wielandt average.
        double next_estimate = total - shift;
        double change = 0.0;
        for (std::size_t e = 0; e < n; ++e) {
            y[e] /= total;
            change = std::max(change, std::abs(y[e] - x[e]));
        }
        x.swap(y);
        bool settled = std::abs(next_estimate - estimate) <= kPowerIterationTolerance * std::abs(next_estimate) &&
                       change <= kPowerIterationTolerance;
        estimate = next_estimate;
        out.iterations = it;
        if (settled) break;
        if (it == kPowerIterationCap) throw Error("pf_data: power iteration did not converge");
    }
    out.lambda = estimate;
    out.edge_lengths = x;
    for (std::size_t e = 0; e < n; ++e) {
        double s = 0.0;
        for (std::size_t f = 0; f < n; ++f) s += static_cast<double>(m(f, e)) * x[f];
        out.residual = std::max(out.residual, std::abs(s - out.lambda * x[e]));
    }
    return out;
}

// Domain graph metrized by the Perron-Frobenius lengths, so that every edge image
// has length lambda times the edge.
inline MarkedGraph eigenmetric(const GraphMap& g) {
    auto pf = pf_data(transition_matrix(g));
    MarkedGraph out = g.domain();
    out.set_lengths(pf.edge_lengths);
    return out;
}

// The same map with the domain and codomain replaced by the eigenmetric graph.
inline GraphMap with_eigenmetric(const GraphMap& g) {
    auto graph = std::make_shared<const MarkedGraph>(eigenmetric(g));
    return GraphMap(graph, graph, g.vertex_map(), g.positive_images());
}

}  // namespace lonetrack
