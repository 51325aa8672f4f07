#pragma once

// Transformer encoder + MLM head with hand-written reverse mode.
//
// All kernels are templated on the activation scalar `Real`; weights are
// always f32. The production path runs with Real = float, the gradient
// oracle tests also instantiate Real = double over the same weights.

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "mapp/errors.hpp"
#include "mapp/matrix.hpp"
#include "mapp/model.hpp"

namespace mapp {

/// Replacement for the token-embedding row at one position.
struct EmbeddingOverride {
    std::size_t position;
    std::span<const float> vector;
};

namespace kernels {

template <typename Real>
Real gelu(Real x) {
    return Real(0.5) * x * (Real(1) + std::erf(x * Real(std::numbers::sqrt2 / 2)));
}

template <typename Real>
Real gelu_grad(Real x) {
    const Real cdf = Real(0.5) * (Real(1) + std::erf(x * Real(std::numbers::sqrt2 / 2)));
    const Real pdf = std::exp(Real(-0.5) * x * x) * Real(std::numbers::inv_sqrtpi / std::numbers::sqrt2);
    return cdf + x * pdf;
}

/// out[t] = W in[t] + b, W is out x in.
template <typename Real>
void dense(const DenseWeights& w, const Matrix<Real>& in, Matrix<Real>& out) {
    const auto rows = in.rows(), n_in = w.weight.cols(), n_out = w.weight.rows();
    out.resize(rows, n_out);
    for (std::size_t t = 0; t < rows; ++t) {
        const auto x = in.row(t);
        auto y = out.row(t);
        for (std::size_t o = 0; o < n_out; ++o) {
            const auto wr = w.weight.row(o);
            Real acc = w.bias[o];
            for (std::size_t i = 0; i < n_in; ++i) acc += x[i] * Real(wr[i]);
            y[o] = acc;
        }
    }
}

/// Backward of `dense`. Accumulates into d_in (must be sized) and, when
/// given, into the weight gradients.
template <typename Real>
void dense_backward(const DenseWeights& w, const Matrix<Real>& in, const Matrix<Real>& d_out,
                    Matrix<Real>& d_in, DenseWeights* grad) {
    const auto rows = in.rows(), n_in = w.weight.cols(), n_out = w.weight.rows();
    for (std::size_t t = 0; t < rows; ++t) {
        const auto dy = d_out.row(t);
        auto dx = d_in.row(t);
        for (std::size_t o = 0; o < n_out; ++o) {
            const Real g = dy[o];
            if (g == Real(0)) continue;
            const auto wr = w.weight.row(o);
            for (std::size_t i = 0; i < n_in; ++i) dx[i] += g * Real(wr[i]);
        }
    }
    if (!grad) return;
    for (std::size_t t = 0; t < rows; ++t) {
        const auto x = in.row(t);
        const auto dy = d_out.row(t);
        for (std::size_t o = 0; o < n_out; ++o) {
            const Real g = dy[o];
            grad->bias[o] += static_cast<float>(g);
            auto gr = grad->weight.row(o);
            for (std::size_t i = 0; i < n_in; ++i) gr[i] += static_cast<float>(g * x[i]);
        }
    }
}

template <typename Real>
struct NormTrace {
    Matrix<Real> normalized;  // x-hat
    std::vector<Real> rstd;
};

template <typename Real>
void layer_norm(const LayerNormWeights& w, Real eps, const Matrix<Real>& in, Matrix<Real>& out,
                NormTrace<Real>& trace) {
    const auto rows = in.rows(), d = in.cols();
    out.resize(rows, d);
    trace.normalized.resize(rows, d);
    trace.rstd.assign(rows, Real(0));
    for (std::size_t t = 0; t < rows; ++t) {
        const auto x = in.row(t);
        Real mean = 0;
        for (auto v : x) mean += v;
        mean /= Real(d);
        Real var = 0;
        for (auto v : x) var += (v - mean) * (v - mean);
        var /= Real(d);
        const Real rstd = Real(1) / std::sqrt(var + eps);
        trace.rstd[t] = rstd;
        auto xh = trace.normalized.row(t);
        auto y = out.row(t);
        for (std::size_t i = 0; i < d; ++i) {
            xh[i] = (x[i] - mean) * rstd;
            y[i] = xh[i] * Real(w.gain[i]) + Real(w.bias[i]);
        }
    }
}

/// Writes (not accumulates) d_in.
template <typename Real>
void layer_norm_backward(const LayerNormWeights& w, const NormTrace<Real>& trace, const Matrix<Real>& d_out,
                         Matrix<Real>& d_in, LayerNormWeights* grad) {
    const auto rows = d_out.rows(), d = d_out.cols();
    d_in.resize(rows, d);
    std::vector<Real> dxh(d);
    for (std::size_t t = 0; t < rows; ++t) {
        const auto dy = d_out.row(t);
        const auto xh = trace.normalized.row(t);
        Real mean_dxh = 0, mean_dxh_xh = 0;
        for (std::size_t i = 0; i < d; ++i) {
            dxh[i] = dy[i] * Real(w.gain[i]);
            mean_dxh += dxh[i];
            mean_dxh_xh += dxh[i] * xh[i];
            if (grad) {
                grad->gain[i] += static_cast<float>(dy[i] * xh[i]);
                grad->bias[i] += static_cast<float>(dy[i]);
            }
        }
        mean_dxh /= Real(d);
        mean_dxh_xh /= Real(d);
        auto dx = d_in.row(t);
        for (std::size_t i = 0; i < d; ++i) dx[i] = trace.rstd[t] * (dxh[i] - mean_dxh - xh[i] * mean_dxh_xh);
    }
}

}  // namespace kernels

template <typename Real>
struct LayerTrace {
    Matrix<Real> input, q, k, v, context, attn_sum, attn_out, ffn_pre, ffn_act, ffn_sum, output;
    std::vector<Matrix<Real>> probs;  // per head, T x T
    kernels::NormTrace<Real> attn_norm, ffn_norm;
};

/// Everything the backward pass needs from one forward pass.
template <typename Real>
struct EncoderTrace {
    Matrix<Real> embed_sum;  // token + position + segment, before normalization
    kernels::NormTrace<Real> embed_norm;
    Matrix<Real> embedded;   // embedding-layer output (hidden state 0)
    std::vector<LayerTrace<Real>> layers;

    std::size_t length() const { return embedded.rows(); }
    /// Hidden state `layer` (0 = embedding output, L = final encoder output).
    const Matrix<Real>& hidden(std::size_t layer) const {
        return layer == 0 ? embedded : layers[layer - 1].output;
    }
};

/// Checks an override against the sequence framing.
inline void check_override(const std::vector<TokenId>& ids, const EmbeddingOverride& ov, std::size_t d) {
    if (ov.position >= ids.size()) throw PositionError("override position outside sequence");
    const auto id = ids[ov.position];
    if (id == Vocabulary::cls() || id == Vocabulary::sep() || id == Vocabulary::pad())
        throw PositionError("override position " + std::to_string(ov.position) + " holds a framing token");
    if (ov.vector.size() != d) throw PositionError("override vector has wrong dimensionality");
}

/// Embedding layer: row i = LayerNorm(tok_i + pos_i + seg_0), with the
/// token row at the override position replaced.
template <typename Real>
void compose_inputs(const ModelBundle& bundle, const std::vector<TokenId>& ids,
                    const std::optional<EmbeddingOverride>& ov, EncoderTrace<Real>& trace) {
    const auto& cfg = bundle.config();
    const auto& w = bundle.weights();
    const auto T = ids.size(), d = cfg.hidden_dim;
    if (T > cfg.max_positions)
        throw LengthError("sequence length " + std::to_string(T) + " exceeds max_positions " +
                          std::to_string(cfg.max_positions));
    if (ov) check_override(ids, *ov, d);
    trace.embed_sum.resize(T, d);
    for (std::size_t t = 0; t < T; ++t) {
        if (ids[t] < 0 || static_cast<std::size_t>(ids[t]) >= cfg.vocab_size)
            throw PositionError("token id out of range at position " + std::to_string(t));
        const auto tok = (ov && ov->position == t) ? ov->vector : w.word_embeddings.row(static_cast<std::size_t>(ids[t]));
        const auto pos = w.position_embeddings.row(t);
        const auto seg = w.segment_embeddings.row(0);
        auto row = trace.embed_sum.row(t);
        for (std::size_t i = 0; i < d; ++i) row[i] = Real(tok[i]) + Real(pos[i]) + Real(seg[i]);
    }
    kernels::layer_norm(w.embedding_norm, Real(cfg.layernorm_epsilon), trace.embed_sum, trace.embedded,
                        trace.embed_norm);
}

template <typename Real>
void encoder_layer(const ModelConfig& cfg, const EncoderLayerWeights& w, const Matrix<Real>& x,
                   LayerTrace<Real>& tr) {
    using namespace kernels;
    const auto T = x.rows(), d = cfg.hidden_dim, H = cfg.num_heads, dh = cfg.head_dim();
    const Real scale = Real(1) / std::sqrt(Real(dh));
    const Real eps = cfg.layernorm_epsilon;
    tr.input = x;
    dense(w.query, x, tr.q);
    dense(w.key, x, tr.k);
    dense(w.value, x, tr.v);
    tr.probs.assign(H, Matrix<Real>(T, T));
    tr.context.resize(T, d);
    for (std::size_t h = 0; h < H; ++h) {
        const auto off = h * dh;
        auto& P = tr.probs[h];
        for (std::size_t i = 0; i < T; ++i) {
            Real mx = -std::numeric_limits<Real>::infinity();
            for (std::size_t j = 0; j < T; ++j) {
                Real s = 0;
                for (std::size_t c = 0; c < dh; ++c) s += tr.q(i, off + c) * tr.k(j, off + c);
                P(i, j) = s * scale;
                mx = std::max(mx, P(i, j));
            }
            Real z = 0;
            for (std::size_t j = 0; j < T; ++j) {
                P(i, j) = std::exp(P(i, j) - mx);
                z += P(i, j);
            }
            for (std::size_t j = 0; j < T; ++j) P(i, j) /= z;
            for (std::size_t c = 0; c < dh; ++c) {
                Real acc = 0;
                for (std::size_t j = 0; j < T; ++j) acc += P(i, j) * tr.v(j, off + c);
                tr.context(i, off + c) = acc;
            }
        }
    }
    dense(w.attention_output, tr.context, tr.attn_sum);
    for (std::size_t i = 0; i < tr.attn_sum.size(); ++i) tr.attn_sum.flat()[i] += x.flat()[i];
    layer_norm(w.attention_norm, eps, tr.attn_sum, tr.attn_out, tr.attn_norm);
    dense(w.ffn_in, tr.attn_out, tr.ffn_pre);
    tr.ffn_act.resize(T, cfg.ffn_dim);
    for (std::size_t i = 0; i < tr.ffn_pre.size(); ++i) tr.ffn_act.flat()[i] = gelu(tr.ffn_pre.flat()[i]);
    dense(w.ffn_out, tr.ffn_act, tr.ffn_sum);
    for (std::size_t i = 0; i < tr.ffn_sum.size(); ++i) tr.ffn_sum.flat()[i] += tr.attn_out.flat()[i];
    layer_norm(w.ffn_norm, eps, tr.ffn_sum, tr.output, tr.ffn_norm);
}

/// Runs the encoder stack over composed inputs (trace.embedded).
template <typename Real>
void encode(const ModelBundle& bundle, EncoderTrace<Real>& trace) {
    const auto& cfg = bundle.config();
    trace.layers.resize(cfg.num_layers);
    const Matrix<Real>* x = &trace.embedded;
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        encoder_layer(cfg, bundle.weights().layers[l], *x, trace.layers[l]);
        x = &trace.layers[l].output;
    }
}

template <typename Real>
EncoderTrace<Real> run_encoder(const ModelBundle& bundle, const std::vector<TokenId>& ids,
                               const std::optional<EmbeddingOverride>& ov = std::nullopt) {
    EncoderTrace<Real> trace;
    compose_inputs(bundle, ids, ov, trace);
    encode(bundle, trace);
    return trace;
}

/// Backward of one encoder layer; returns d(input).
template <typename Real>
Matrix<Real> encoder_layer_backward(const ModelConfig& cfg, const EncoderLayerWeights& w, const LayerTrace<Real>& tr,
                                    const Matrix<Real>& d_output, EncoderLayerWeights* grad) {
    using namespace kernels;
    const auto T = tr.input.rows(), d = cfg.hidden_dim, H = cfg.num_heads, dh = cfg.head_dim();
    const Real scale = Real(1) / std::sqrt(Real(dh));

    Matrix<Real> d_ffn_sum;
    layer_norm_backward(w.ffn_norm, tr.ffn_norm, d_output, d_ffn_sum, grad ? &grad->ffn_norm : nullptr);
    // residual: d_attn_out gets d_ffn_sum directly
    Matrix<Real> d_attn_out = d_ffn_sum;
    Matrix<Real> d_ffn_act(T, cfg.ffn_dim);
    dense_backward(w.ffn_out, tr.ffn_act, d_ffn_sum, d_ffn_act, grad ? &grad->ffn_out : nullptr);
    for (std::size_t i = 0; i < d_ffn_act.size(); ++i) d_ffn_act.flat()[i] *= gelu_grad(tr.ffn_pre.flat()[i]);
    dense_backward(w.ffn_in, tr.attn_out, d_ffn_act, d_attn_out, grad ? &grad->ffn_in : nullptr);

    Matrix<Real> d_attn_sum;
    layer_norm_backward(w.attention_norm, tr.attn_norm, d_attn_out, d_attn_sum, grad ? &grad->attention_norm : nullptr);
    Matrix<Real> d_input = d_attn_sum;  // residual
    Matrix<Real> d_context(T, d);
    dense_backward(w.attention_output, tr.context, d_attn_sum, d_context, grad ? &grad->attention_output : nullptr);

    Matrix<Real> dq(T, d), dk(T, d), dv(T, d);
    std::vector<Real> dp(T);
    for (std::size_t h = 0; h < H; ++h) {
        const auto off = h * dh;
        const auto& P = tr.probs[h];
        for (std::size_t i = 0; i < T; ++i) {
            Real dot = 0;
            for (std::size_t j = 0; j < T; ++j) {
                Real g = 0;
                for (std::size_t c = 0; c < dh; ++c) g += d_context(i, off + c) * tr.v(j, off + c);
                dp[j] = g;
                dot += g * P(i, j);
            }
            for (std::size_t j = 0; j < T; ++j) {
                const Real pij = P(i, j);
                for (std::size_t c = 0; c < dh; ++c) dv(j, off + c) += pij * d_context(i, off + c);
                const Real ds = pij * (dp[j] - dot) * scale;
                if (ds == Real(0)) continue;
                for (std::size_t c = 0; c < dh; ++c) {
                    dq(i, off + c) += ds * tr.k(j, off + c);
                    dk(j, off + c) += ds * tr.q(i, off + c);
                }
            }
        }
    }
    dense_backward(w.query, tr.input, dq, d_input, grad ? &grad->query : nullptr);
    dense_backward(w.key, tr.input, dk, d_input, grad ? &grad->key : nullptr);
    dense_backward(w.value, tr.input, dv, d_input, grad ? &grad->value : nullptr);
    return d_input;
}

/// Propagates d(hidden state at layer `from_layer`) back to d(embed_sum),
/// the pre-normalization sum whose override row equals d(override vector).
/// Optionally accumulates every weight gradient except the embedding
/// lookups, which the caller scatters from the returned matrix.
template <typename Real>
Matrix<Real> encoder_backward(const ModelBundle& bundle, const EncoderTrace<Real>& trace, std::size_t from_layer,
                              Matrix<Real> d_hidden, ModelWeights* grad) {
    const auto& cfg = bundle.config();
    const auto& w = bundle.weights();
    for (std::size_t l = from_layer; l-- > 0;)
        d_hidden = encoder_layer_backward(cfg, w.layers[l], trace.layers[l], d_hidden, grad ? &grad->layers[l] : nullptr);
    Matrix<Real> d_sum;
    kernels::layer_norm_backward(w.embedding_norm, trace.embed_norm, d_hidden, d_sum,
                                 grad ? &grad->embedding_norm : nullptr);
    return d_sum;
}

/// MLM head trace for one position.
template <typename Real>
struct HeadTrace {
    Matrix<Real> input, pre, act, out;  // 1 x d each
    kernels::NormTrace<Real> norm;
    std::vector<Real> logits;  // V
};

/// dense + GELU + layernorm + vocabulary projection with bias.
template <typename Real>
void mlm_head(const ModelBundle& bundle, std::span<const Real> hidden, HeadTrace<Real>& tr) {
    const auto& cfg = bundle.config();
    const auto& w = bundle.weights();
    const auto d = cfg.hidden_dim, V = cfg.vocab_size;
    tr.input.resize(1, d);
    std::copy(hidden.begin(), hidden.end(), tr.input.row(0).begin());
    kernels::dense(w.head_transform, tr.input, tr.pre);
    tr.act.resize(1, d);
    for (std::size_t i = 0; i < d; ++i) tr.act(0, i) = kernels::gelu(tr.pre(0, i));
    kernels::layer_norm(w.head_norm, Real(cfg.layernorm_epsilon), tr.act, tr.out, tr.norm);
    tr.logits.assign(V, Real(0));
    const auto o = tr.out.row(0);
    for (std::size_t v = 0; v < V; ++v) {
        const auto wr = w.decoder_weight.row(v);
        Real acc = w.decoder_bias[v];
        for (std::size_t i = 0; i < d; ++i) acc += o[i] * Real(wr[i]);
        tr.logits[v] = acc;
    }
}

/// Backward of the head given d(logits); returns d(hidden) for the position.
template <typename Real>
std::vector<Real> mlm_head_backward(const ModelBundle& bundle, const HeadTrace<Real>& tr,
                                    std::span<const Real> d_logits, ModelWeights* grad) {
    const auto& cfg = bundle.config();
    const auto& w = bundle.weights();
    const auto d = cfg.hidden_dim, V = cfg.vocab_size;
    Matrix<Real> d_out(1, d);
    const auto o = tr.out.row(0);
    for (std::size_t v = 0; v < V; ++v) {
        const Real g = d_logits[v];
        if (g == Real(0)) continue;
        const auto wr = w.decoder_weight.row(v);
        for (std::size_t i = 0; i < d; ++i) d_out(0, i) += g * Real(wr[i]);
        if (grad) {
            grad->decoder_bias[v] += static_cast<float>(g);
            auto gr = grad->decoder_weight.row(v);
            for (std::size_t i = 0; i < d; ++i) gr[i] += static_cast<float>(g * o[i]);
        }
    }
    Matrix<Real> d_act;
    kernels::layer_norm_backward(w.head_norm, tr.norm, d_out, d_act, grad ? &grad->head_norm : nullptr);
    for (std::size_t i = 0; i < d; ++i) d_act(0, i) *= kernels::gelu_grad(tr.pre(0, i));
    Matrix<Real> d_in(1, d);
    kernels::dense_backward(w.head_transform, tr.input, d_act, d_in, grad ? &grad->head_transform : nullptr);
    return {d_in.row(0).begin(), d_in.row(0).end()};
}

}  // namespace mapp
