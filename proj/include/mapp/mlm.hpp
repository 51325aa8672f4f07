#pragma once

// Inference-level operations over a loaded bundle: forward results,
// contextual vectors, masked top-k prediction and the input gradient of
// the reconstruction loss.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mapp/encoder.hpp"
#include "mapp/errors.hpp"
#include "mapp/model.hpp"

namespace mapp {

struct ForwardResult {
    /// hidden[layer][k] is the d-vector at positions_of_interest[k]; layer 0 is the embedding output.
    std::vector<std::vector<Vector>> hidden;
    /// logits[k] is the V-vector at positions_of_interest[k].
    std::vector<Vector> logits;
};

/// Input matrix (embedding-layer output) for a token sequence.
inline Matrix<float> compose_inputs(const ModelBundle& bundle, const std::vector<TokenId>& ids,
                                    const std::optional<EmbeddingOverride>& ov = std::nullopt) {
    EncoderTrace<float> trace;
    compose_inputs(bundle, ids, ov, trace);
    return std::move(trace.embedded);
}

/// Runs the encoder stack and MLM head on an already composed input matrix.
inline ForwardResult forward(const ModelBundle& bundle, const Matrix<float>& inputs,
                             const std::vector<std::size_t>& positions_of_interest) {
    const auto& cfg = bundle.config();
    if (inputs.rows() > cfg.max_positions)
        throw LengthError("sequence length " + std::to_string(inputs.rows()) + " exceeds max_positions");
    if (inputs.cols() != cfg.hidden_dim) throw PositionError("input matrix has wrong width");
    for (auto p : positions_of_interest)
        if (p >= inputs.rows()) throw PositionError("position of interest outside sequence");
    EncoderTrace<float> trace;
    trace.embedded = inputs;
    encode(bundle, trace);
    ForwardResult result;
    result.hidden.resize(cfg.num_layers + 1);
    for (std::size_t l = 0; l <= cfg.num_layers; ++l)
        for (auto p : positions_of_interest) {
            const auto row = trace.hidden(l).row(p);
            result.hidden[l].emplace_back(row.begin(), row.end());
        }
    HeadTrace<float> head;
    for (auto p : positions_of_interest) {
        mlm_head<float>(bundle, trace.hidden(cfg.num_layers).row(p), head);
        result.logits.emplace_back(head.logits.begin(), head.logits.end());
    }
    return result;
}

/// Numerically stable softmax accumulated in double.
inline std::vector<double> softmax(std::span<const float> logits) {
    const float mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double z = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) z += p[i] = std::exp(double(logits[i]) - double(mx));
    for (auto& v : p) v /= z;
    return p;
}

/// One sentence ready for probing: framed ids with focus and cue positions.
struct ProbeInput {
    std::vector<TokenId> ids;
    std::size_t focus = 0;
    std::size_t cue = 0;
};

inline std::size_t default_layer(const ModelBundle& bundle) { return bundle.config().num_layers; }

inline void check_layer(const ModelBundle& bundle, std::size_t layer) {
    if (layer > bundle.config().num_layers)
        throw PositionError("layer " + std::to_string(layer) + " out of range (model has " +
                            std::to_string(bundle.config().num_layers) + " layers)");
}

/// Hidden state at the focus position of the unmodified sentence.
inline Vector contextual_vector(const ModelBundle& bundle, const ProbeInput& in, std::size_t layer) {
    check_layer(bundle, layer);
    if (in.focus >= in.ids.size()) throw PositionError("focus position outside sequence");
    const auto trace = run_encoder<float>(bundle, in.ids);
    const auto row = trace.hidden(layer).row(in.focus);
    return {row.begin(), row.end()};
}

struct RankedWord {
    TokenId id;
    std::string word;
    double probability;
};

/// Top-k non-special vocabulary words by probability, ties broken by id.
inline std::vector<RankedWord> top_k(const Vocabulary& vocab, std::span<const float> logits, std::size_t k) {
    const auto p = softmax(logits);
    std::vector<TokenId> order;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (!Vocabulary::is_special(static_cast<TokenId>(i))) order.push_back(static_cast<TokenId>(i));
    k = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](TokenId a, TokenId b) { return p[a] != p[b] ? p[a] > p[b] : a < b; });
    std::vector<RankedWord> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back({order[i], vocab.token(order[i]), p[order[i]]});
    return out;
}

/// Replaces the cue with [MASK], optionally overrides the focus row, and
/// ranks fillers at the cue slot.
inline std::vector<RankedWord> masked_topk(const ModelBundle& bundle, const ProbeInput& in,
                                           std::optional<std::span<const float>> focus_override, std::size_t k) {
    if (k == 0) throw ValidationError("", "k must be at least 1");
    if (in.cue >= in.ids.size()) throw PositionError("cue position outside sequence");
    auto ids = in.ids;
    ids[in.cue] = Vocabulary::mask();
    std::optional<EmbeddingOverride> ov;
    if (focus_override) ov = EmbeddingOverride{in.focus, *focus_override};
    const auto trace = run_encoder<float>(bundle, ids, ov);
    HeadTrace<float> head;
    mlm_head<float>(bundle, trace.hidden(bundle.config().num_layers).row(in.cue), head);
    return top_k(bundle.vocab(), head.logits, k);
}

/// Reconstruction loss and its gradient with respect to the focus row.
template <typename Real = float>
struct LossAndGradient {
    double loss = 0;
    std::vector<Real> gradient;
};

/// ||h_layer(z)[focus] - target||^2 and d/dz, with model weights fixed.
template <typename Real = float>
LossAndGradient<Real> reconstruction_loss(const ModelBundle& bundle, const ProbeInput& in, std::span<const float> z,
                                          std::span<const float> target, std::size_t layer, bool with_gradient = true) {
    check_layer(bundle, layer);
    const auto d = bundle.config().hidden_dim;
    if (target.size() != d) throw PositionError("target has wrong dimensionality");
    auto trace = run_encoder<Real>(bundle, in.ids, EmbeddingOverride{in.focus, z});
    const auto h = trace.hidden(layer).row(in.focus);
    LossAndGradient<Real> out;
    Matrix<Real> d_hidden(in.ids.size(), d);
    for (std::size_t i = 0; i < d; ++i) {
        const Real r = h[i] - Real(target[i]);
        out.loss += double(r) * double(r);
        d_hidden(in.focus, i) = Real(2) * r;
    }
    if (!with_gradient) return out;
    const auto d_sum = encoder_backward(bundle, trace, layer, std::move(d_hidden), nullptr);
    const auto g = d_sum.row(in.focus);
    out.gradient.assign(g.begin(), g.end());
    return out;
}

inline Vector input_gradient(const ModelBundle& bundle, const ProbeInput& in, std::span<const float> z,
                             std::span<const float> target, std::size_t layer) {
    auto r = reconstruction_loss<float>(bundle, in, z, target, layer);
    return std::move(r.gradient);
}

}  // namespace mapp
