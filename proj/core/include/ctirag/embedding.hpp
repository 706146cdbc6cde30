#pragma once

#include <cstddef>
#include <vector>

namespace ctirag {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
    bool is_zero() const;
    double norm() const;
};

// Cosine similarity: dot(a,b) / (|a| * |b|). Throws DimensionMismatch when
// dims differ and ZeroVector when either norm is zero. Result lies in
// [-1, 1] up to floating-point rounding.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Returns a copy scaled to unit L2 norm. Throws ZeroVector on zero input.
EmbeddingVector l2_normalized(const EmbeddingVector& v);

double dot(const EmbeddingVector& a, const EmbeddingVector& b);

} // namespace ctirag
