#include "ctirag/embedding.hpp"

#include "ctirag/errors.hpp"

#include <cmath>

namespace ctirag {

bool EmbeddingVector::is_zero() const {
    for (double v : values)
        if (v != 0.0) return false;
    return true;
}

double EmbeddingVector::norm() const {
    double sum = 0.0;
    for (double v : values) sum += v * v;
    return std::sqrt(sum);
}

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim())
        raise(ErrorCode::dimension_mismatch,
              "dot: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    double sum = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) sum += a.values[i] * b.values[i];
    return sum;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim())
        raise(ErrorCode::dimension_mismatch,
              "cosine: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    double na = a.norm();
    double nb = b.norm();
    if (na == 0.0 || nb == 0.0) raise(ErrorCode::zero_vector, "cosine over zero vector");
    return dot(a, b) / (na * nb);
}

EmbeddingVector l2_normalized(const EmbeddingVector& v) {
    double n = v.norm();
    if (n == 0.0) raise(ErrorCode::zero_vector, "cannot normalize zero vector");
    EmbeddingVector out;
    out.values.reserve(v.values.size());
    for (double x : v.values) out.values.push_back(x / n);
    return out;
}

} // namespace ctirag
