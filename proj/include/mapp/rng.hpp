#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace mapp {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_label(std::string_view label) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : label) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// Stream seed derived from (master seed, purpose label, item id, index).
/// Adding items never shifts another item's stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::string_view item = {},
                                 std::uint64_t index = 0) {
    std::uint64_t s = splitmix64(master ^ splitmix64(hash_label(label)));
    s = splitmix64(s ^ hash_label(item));
    return splitmix64(s ^ splitmix64(index + 0x632be59bd9b4e019ull));
}

inline void fill_gaussian(Rng& rng, std::span<float> out, double mean, double stddev) {
    std::normal_distribution<double> dist(mean, stddev);
    for (auto& v : out) v = static_cast<float>(dist(rng));
}

}  // namespace mapp
