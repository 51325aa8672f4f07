#pragma once

// Navigation in the input space: random directions, perturbation at an
// exact cosine distance, and linear interpolation.

#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mapp/errors.hpp"
#include "mapp/matrix.hpp"
#include "mapp/rng.hpp"

namespace mapp {

enum class MagnitudePolicy { rescale, unit };

inline MagnitudePolicy parse_magnitude_policy(const std::string& s) {
    if (s == "rescale") return MagnitudePolicy::rescale;
    if (s == "unit") return MagnitudePolicy::unit;
    throw ValidationError("magnitude-policy", "expected 'rescale' or 'unit', got '" + s + "'");
}

inline std::string to_string(MagnitudePolicy p) { return p == MagnitudePolicy::rescale ? "rescale" : "unit"; }

inline std::vector<double> default_epsilons() { return {0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8}; }

inline std::vector<double> default_alphas() {
    std::vector<double> a{0, 0.1};
    for (int k = 3; k <= 20; ++k) a.push_back(k / 20.0);
    return a;
}

namespace detail {

inline double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * double(b[i]);
    return s;
}

inline double norm(std::span<const float> a) { return std::sqrt(dot(a, a)); }

}  // namespace detail

/// 1 - cos(a, b), in [0, 2].
inline double cosine_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw GeometryError("vectors differ in dimensionality");
    const double na = detail::norm(a), nb = detail::norm(b);
    if (na == 0 || nb == 0) throw GeometryError("cosine distance of a zero vector");
    return 1.0 - detail::dot(a, b) / (na * nb);
}

inline double euclidean_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw GeometryError("vectors differ in dimensionality");
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
    return std::sqrt(s);
}

/// n unit vectors drawn uniformly from the sphere in R^d (normalized
/// standard Gaussian draws).
inline std::vector<Vector> sample_directions(std::size_t n, std::size_t d, std::uint64_t seed) {
    if (d < 2) throw GeometryError("directions need d >= 2");
    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vector> out;
    out.reserve(n);
    std::vector<double> g(d);
    while (out.size() < n) {
        double sq = 0;
        for (auto& x : g) {
            x = gauss(rng);
            sq += x * x;
        }
        if (sq == 0) continue;
        const double inv = 1.0 / std::sqrt(sq);
        Vector v(d);
        for (std::size_t i = 0; i < d; ++i) v[i] = static_cast<float>(g[i] * inv);
        out.push_back(std::move(v));
    }
    return out;
}

/// Point at cosine distance eps from z on the great circle through z
/// towards w. Under the rescale policy the result has z's norm.
inline Vector perturb(std::span<const float> z, std::span<const float> w, double eps,
                      MagnitudePolicy policy = MagnitudePolicy::rescale) {
    if (!(eps >= 0 && eps < 2)) throw GeometryError("epsilon must lie in [0, 2)");
    if (z.size() != w.size()) throw GeometryError("vectors differ in dimensionality");
    const double nz = detail::norm(z);
    if (nz == 0) throw GeometryError("cannot perturb the zero vector");
    if (eps == 0) {
        if (policy == MagnitudePolicy::rescale) return {z.begin(), z.end()};
        Vector v(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) v[i] = static_cast<float>(z[i] / nz);
        return v;
    }
    const auto d = z.size();
    std::vector<double> zh(d), u(d);
    for (std::size_t i = 0; i < d; ++i) zh[i] = z[i] / nz;
    double wz = 0;
    for (std::size_t i = 0; i < d; ++i) wz += double(w[i]) * zh[i];
    double nu = 0;
    for (std::size_t i = 0; i < d; ++i) {
        u[i] = double(w[i]) - wz * zh[i];
        nu += u[i] * u[i];
    }
    nu = std::sqrt(nu);
    const double nw = detail::norm(w);
    if (nw == 0 || nu <= 1e-9 * nw) throw GeometryError("direction is parallel to the vector");
    const double c = 1.0 - eps, s = std::sqrt(std::max(0.0, 1.0 - c * c));
    const double scale = policy == MagnitudePolicy::rescale ? nz : 1.0;
    Vector v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = static_cast<float>((c * zh[i] + s * u[i] / nu) * scale);
    return v;
}

/// (1 - alpha) z1 + alpha z2; the endpoints return exact copies.
inline Vector interpolate(std::span<const float> z1, std::span<const float> z2, double alpha) {
    if (!(alpha >= 0 && alpha <= 1)) throw GeometryError("alpha must lie in [0, 1]");
    if (z1.size() != z2.size()) throw GeometryError("vectors differ in dimensionality");
    if (alpha == 0) return {z1.begin(), z1.end()};
    if (alpha == 1) return {z2.begin(), z2.end()};
    Vector v(z1.size());
    for (std::size_t i = 0; i < z1.size(); ++i)
        v[i] = static_cast<float>((1.0 - alpha) * double(z1[i]) + alpha * double(z2[i]));
    return v;
}

/// Norm of the component of v outside span{a, b}, via Gram-Schmidt.
inline double plane_residual(std::span<const float> v, std::span<const float> a, std::span<const float> b) {
    const auto d = v.size();
    std::vector<double> e1(d), e2(d), r(v.begin(), v.end());
    const double na = detail::norm(a);
    for (std::size_t i = 0; i < d; ++i) e1[i] = a[i] / na;
    double be1 = 0;
    for (std::size_t i = 0; i < d; ++i) be1 += b[i] * e1[i];
    double n2 = 0;
    for (std::size_t i = 0; i < d; ++i) {
        e2[i] = b[i] - be1 * e1[i];
        n2 += e2[i] * e2[i];
    }
    n2 = std::sqrt(n2);
    for (auto& x : e2) x /= n2;
    double p1 = 0, p2 = 0;
    for (std::size_t i = 0; i < d; ++i) p1 += r[i] * e1[i], p2 += r[i] * e2[i];
    double res = 0;
    for (std::size_t i = 0; i < d; ++i) {
        r[i] -= p1 * e1[i] + p2 * e2[i];
        res += r[i] * r[i];
    }
    return std::sqrt(res);
}

}  // namespace mapp
