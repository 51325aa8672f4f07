#include <gtest/gtest.h>

#include <cmath>

#include "mapp/geometry.hpp"

namespace mapp {
namespace {

double norm(const Vector& v) {
    double s = 0;
    for (float x : v) s += double(x) * x;
    return std::sqrt(s);
}

TEST(Distances, CosineAndEuclidean) {
    const Vector a{1, 0, 0}, b{0, 2, 0}, c{-3, 0, 0};
    EXPECT_NEAR(cosine_distance(a, b), 1.0, 1e-12);
    EXPECT_NEAR(cosine_distance(a, c), 2.0, 1e-12);
    EXPECT_NEAR(cosine_distance(a, a), 0.0, 1e-12);
    EXPECT_NEAR(euclidean_distance(a, b), std::sqrt(5.0), 1e-12);
}

TEST(Grids, DefaultValues) {
    const auto eps = default_epsilons();
    ASSERT_EQ(eps.size(), 10u);
    EXPECT_EQ(eps.front(), 0.0);
    EXPECT_NEAR(eps.back(), 1.8, 1e-12);
    const auto alphas = default_alphas();
    ASSERT_EQ(alphas.size(), 20u);
    EXPECT_EQ(alphas[0], 0.0);
    EXPECT_EQ(alphas[1], 0.1);
    EXPECT_EQ(alphas[2], 0.15);
    EXPECT_EQ(alphas[9], 0.5);
    EXPECT_EQ(alphas[19], 1.0);
}

TEST(Directions, UnitLengthAndDeterministic) {
    const auto a = sample_directions(50, 16, 3);
    const auto b = sample_directions(50, 16, 3);
    ASSERT_EQ(a.size(), 50u);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, sample_directions(50, 16, 4));
    for (const auto& v : a) EXPECT_NEAR(norm(v), 1.0, 1e-6);
    EXPECT_THROW(sample_directions(1, 1, 0), GeometryError);
}

TEST(Directions, MeanIsNearZero) {
    const auto dirs = sample_directions(4000, 8, 9);
    for (std::size_t i = 0; i < 8; ++i) {
        double m = 0;
        for (const auto& v : dirs) m += v[i];
        EXPECT_NEAR(m / 4000.0, 0.0, 0.02);
    }
}

TEST(Perturb, HitsTheRequestedCosineDistance) {
    const Vector z{3, -1, 2, 0.5f, 1};
    for (const auto& w : sample_directions(10, 5, 1)) {
        for (double eps : default_epsilons()) {
            const auto p = perturb(z, w, eps);
            EXPECT_NEAR(cosine_distance(z, p), eps, 1e-5);
            EXPECT_NEAR(norm(p), norm(z), 1e-5 * norm(z));
            EXPECT_LT(plane_residual(p, z, w), 1e-5 * norm(z));
            const auto u = perturb(z, w, eps, MagnitudePolicy::unit);
            EXPECT_NEAR(norm(u), 1.0, 1e-6);
        }
    }
}

TEST(Perturb, ZeroEpsilonIsExactCopy) {
    const Vector z{0.1f, 0.2f, 0.3f};
    EXPECT_EQ(perturb(z, Vector{1, 0, 0}, 0.0), z);
}

TEST(Perturb, RejectsDegenerateInput) {
    const Vector z{1, 0, 0};
    EXPECT_THROW(perturb(z, Vector{2, 0, 0}, 0.5), GeometryError);
    EXPECT_THROW(perturb(Vector{0, 0, 0}, Vector{1, 0, 0}, 0.5), GeometryError);
    EXPECT_THROW(perturb(z, Vector{0, 1, 0}, 2.0), GeometryError);
    EXPECT_THROW(perturb(z, Vector{0, 1}, 0.5), GeometryError);
}

TEST(Interpolate, EndpointsAndMidpoint) {
    const Vector a{0.1f, 0.7f, -0.3f}, b{1.3f, -2.2f, 0.9f};
    EXPECT_EQ(interpolate(a, b, 0.0), a);
    EXPECT_EQ(interpolate(a, b, 1.0), b);
    const auto mid = interpolate(a, b, 0.5);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(mid[i], (a[i] + b[i]) / 2, 1e-6);
    EXPECT_LT(plane_residual(interpolate(a, b, 0.35), a, b), 1e-6);
    EXPECT_THROW(interpolate(a, b, 1.5), GeometryError);
}

TEST(PlaneResidual, MeasuresOutOfPlaneComponent) {
    EXPECT_NEAR(plane_residual(Vector{1, 2, 3}, Vector{1, 0, 0}, Vector{1, 1, 0}), 3.0, 1e-9);
}

TEST(MagnitudePolicy, ParseRoundTrip) {
    EXPECT_EQ(parse_magnitude_policy("unit"), MagnitudePolicy::unit);
    EXPECT_EQ(to_string(parse_magnitude_policy("rescale")), "rescale");
    EXPECT_THROW(parse_magnitude_policy("other"), Error);
}

}  // namespace
}  // namespace mapp
