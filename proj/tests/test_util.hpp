#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "mapp/mlm.hpp"
#include "mapp/model.hpp"
#include "mapp/rng.hpp"

namespace mapp::testing {

inline Vocabulary synthetic_vocab(std::size_t size) {
    std::vector<std::string> tokens(std::begin(kSpecialTokens), std::end(kSpecialTokens));
    for (std::size_t i = tokens.size(); i < size; ++i) tokens.push_back("w" + std::to_string(i));
    return Vocabulary(std::move(tokens));
}

/// Untrained model with a synthetic vocabulary "w5".."w{V-1}".
inline ModelBundle random_bundle(ModelConfig cfg, std::uint64_t seed, double stddev = 0.3) {
    return ModelBundle(cfg, random_weights(cfg, seed, stddev), synthetic_vocab(cfg.vocab_size),
                       TokenizerMode::closed_whitespace);
}

inline ModelConfig small_config() {
    ModelConfig cfg;
    cfg.num_layers = 2;
    cfg.hidden_dim = 32;
    cfg.num_heads = 4;
    cfg.ffn_dim = 64;
    cfg.vocab_size = 64;
    cfg.max_positions = 16;
    return cfg;
}

inline ProbeInput sample_input(const ModelBundle& bundle, std::size_t words, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_int_distribution<TokenId> pick(kNumSpecial, static_cast<TokenId>(bundle.config().vocab_size - 1));
    ProbeInput in;
    in.ids.push_back(Vocabulary::cls());
    for (std::size_t i = 0; i < words; ++i) in.ids.push_back(pick(rng));
    in.ids.push_back(Vocabulary::sep());
    in.focus = 2;
    in.cue = 3;
    return in;
}

inline Vector random_vector(std::size_t d, std::uint64_t seed, double stddev) {
    Vector v(d);
    Rng rng(seed);
    fill_gaussian(rng, v, 0.0, stddev);
    return v;
}

/// Test-side embedding composition with a double-precision override row.
inline EncoderTrace<double> compose_in_double(const ModelBundle& bundle, const ProbeInput& in,
                                              const std::vector<double>& z) {
    const auto& w = bundle.weights();
    const auto d = bundle.config().hidden_dim;
    EncoderTrace<double> trace;
    trace.embed_sum.resize(in.ids.size(), d);
    for (std::size_t t = 0; t < in.ids.size(); ++t)
        for (std::size_t i = 0; i < d; ++i) {
            const double tok = t == in.focus ? z[i] : double(w.word_embeddings(in.ids[t], i));
            trace.embed_sum(t, i) = tok + double(w.position_embeddings(t, i)) + double(w.segment_embeddings(0, i));
        }
    kernels::layer_norm(w.embedding_norm, double(bundle.config().layernorm_epsilon), trace.embed_sum, trace.embedded,
                        trace.embed_norm);
    encode(bundle, trace);
    return trace;
}

/// Worst relative error |analytic - fd| / max(|analytic|, 1e-8) of the
/// reconstruction-loss input gradient over `trials` x `coords` random
/// coordinates. The oracle is a central finite difference (step 1e-3) on
/// the double-precision instantiation of the same kernels.
inline double worst_gradient_error(const ModelBundle& bundle, int trials, int coords, std::uint64_t seed) {
    const auto layer = default_layer(bundle);
    const auto d = bundle.config().hidden_dim;
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> coord(0, d - 1);
    double worst = 0;
    for (int trial = 0; trial < trials; ++trial) {
        const auto in = sample_input(bundle, 5, seed + 100 + trial);
        const auto z = random_vector(d, seed + 200 + trial, 0.5);
        const auto target = random_vector(d, seed + 300 + trial, 1.0);
        const auto analytic = reconstruction_loss<double>(bundle, in, z, target, layer);
        for (int c = 0; c < coords; ++c) {
            const auto i = coord(rng);
            auto loss_at = [&](double delta) {
                std::vector<double> zd(z.begin(), z.end());
                zd[i] += delta;
                const auto trace = compose_in_double(bundle, in, zd);
                double l = 0;
                for (std::size_t k = 0; k < d; ++k) {
                    const double r = trace.hidden(layer)(in.focus, k) - target[k];
                    l += r * r;
                }
                return l;
            };
            const double h = 1e-3;
            const double fd = (loss_at(h) - loss_at(-h)) / (2 * h);
            const double a = analytic.gradient[i];
            worst = std::max(worst, std::abs(a - fd) / std::max(std::abs(a), 1e-8));
        }
    }
    return worst;
}

}  // namespace mapp::testing
