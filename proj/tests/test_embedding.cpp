#include "ctirag/embedding.hpp"

#include "ctirag/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ctirag;

namespace {
EmbeddingVector vec(std::initializer_list<double> values) { return EmbeddingVector{values}; }
} // namespace

TEST_CASE("cosine similarity spec cases") {
    CHECK(cosine_similarity(vec({0.6, 0.8}), vec({0.6, 0.8})) == doctest::Approx(1.0));
    CHECK(cosine_similarity(vec({1, 0}), vec({0, 1})) == doctest::Approx(0.0));
    CHECK(std::abs(cosine_similarity(vec({1, 2, 2}), vec({2, 1, 2})) - 8.0 / 9.0) < 1e-12);
}

TEST_CASE("cosine similarity error cases") {
    CHECK_THROWS_AS(cosine_similarity(vec({1, 2}), vec({1, 2, 3})), Error);
    CHECK_THROWS_AS(cosine_similarity(vec({0, 0}), vec({1, 2})), Error);
    CHECK_THROWS_AS(l2_normalized(vec({0, 0, 0})), Error);
}

TEST_CASE("cosine similarity properties over random vectors") {
    std::mt19937 rng(1234);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        std::size_t dim = 2 + rng() % 64;
        EmbeddingVector a, b;
        for (std::size_t i = 0; i < dim; ++i) {
            a.values.push_back(gauss(rng));
            b.values.push_back(gauss(rng));
        }
        if (a.is_zero() || b.is_zero()) continue;
        double ab = cosine_similarity(a, b);
        double ba = cosine_similarity(b, a);
        CHECK(ab == ba); // term order is identical
        CHECK(std::abs(ab) <= 1.0 + 1e-9);

        double alpha = 0.25 + (rng() % 1000) / 250.0;
        EmbeddingVector scaled = a;
        for (double& v : scaled.values) v *= alpha;
        CHECK(std::abs(cosine_similarity(scaled, b) - ab) < 1e-9);
    }
}

TEST_CASE("normalized vectors score by plain dot product") {
    std::mt19937 rng(99);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        EmbeddingVector a, b;
        for (int i = 0; i < 32; ++i) {
            a.values.push_back(gauss(rng));
            b.values.push_back(gauss(rng));
        }
        EmbeddingVector na = l2_normalized(a), nb = l2_normalized(b);
        CHECK(std::abs(na.norm() - 1.0) < 1e-6);
        CHECK(std::abs(dot(na, nb) - cosine_similarity(a, b)) < 1e-7);
    }
}
