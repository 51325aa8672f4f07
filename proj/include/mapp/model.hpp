#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mapp/archive.hpp"
#include "mapp/errors.hpp"
#include "mapp/matrix.hpp"
#include "mapp/rng.hpp"
#include "mapp/tokenizer.hpp"

namespace mapp {

enum class Activation { gelu };

struct ModelConfig {
    std::size_t num_layers = 2;
    std::size_t hidden_dim = 32;
    std::size_t num_heads = 4;
    std::size_t ffn_dim = 64;
    std::size_t vocab_size = 64;
    std::size_t max_positions = 16;
    std::size_t segment_count = 1;
    float layernorm_epsilon = 1e-12f;
    Activation activation = Activation::gelu;
    bool head_tied = true;

    std::size_t head_dim() const { return hidden_dim / num_heads; }

    void validate() const {
        if (num_heads == 0 || hidden_dim % num_heads != 0)
            throw ValidationError("config", "hidden_dim must be divisible by num_heads");
        if (vocab_size < kNumSpecial + 1)
            throw ValidationError("config", "vocab_size must be at least 6");
        if (num_layers == 0 || ffn_dim == 0 || max_positions < 3 || segment_count == 0)
            throw ValidationError("config", "degenerate model dimensions");
    }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct LayerNormWeights {
    Vector gain;
    Vector bias;
};

struct DenseWeights {
    Matrix<float> weight;  // out x in
    Vector bias;           // out
};

struct EncoderLayerWeights {
    DenseWeights query, key, value, attention_output;
    LayerNormWeights attention_norm;
    DenseWeights ffn_in, ffn_out;
    LayerNormWeights ffn_norm;
};

/// Every trainable tensor of the encoder + MLM head.
struct ModelWeights {
    Matrix<float> word_embeddings;      // V x d
    Matrix<float> position_embeddings;  // P x d
    Matrix<float> segment_embeddings;   // S x d
    LayerNormWeights embedding_norm;
    std::vector<EncoderLayerWeights> layers;
    DenseWeights head_transform;
    LayerNormWeights head_norm;
    Matrix<float> decoder_weight;  // V x d (equal to word_embeddings when tied)
    Vector decoder_bias;           // V

    /// Allocates zero tensors with the shapes implied by `cfg`.
    static ModelWeights zeros(const ModelConfig& cfg) {
        const auto d = cfg.hidden_dim, V = cfg.vocab_size, f = cfg.ffn_dim;
        auto dense = [](std::size_t out, std::size_t in) {
            return DenseWeights{Matrix<float>(out, in), Vector(out, 0.0f)};
        };
        auto norm = [d] { return LayerNormWeights{Vector(d, 0.0f), Vector(d, 0.0f)}; };
        ModelWeights w;
        w.word_embeddings = Matrix<float>(V, d);
        w.position_embeddings = Matrix<float>(cfg.max_positions, d);
        w.segment_embeddings = Matrix<float>(cfg.segment_count, d);
        w.embedding_norm = norm();
        for (std::size_t l = 0; l < cfg.num_layers; ++l) {
            w.layers.push_back(EncoderLayerWeights{dense(d, d), dense(d, d), dense(d, d), dense(d, d),
                                                   norm(), dense(f, d), dense(d, f), norm()});
        }
        w.head_transform = dense(d, d);
        w.head_norm = norm();
        w.decoder_weight = Matrix<float>(V, d);
        w.decoder_bias = Vector(V, 0.0f);
        return w;
    }
};

/// Visits every tensor with its canonical archive name and shape. The
/// visitor receives a mutable or const span depending on `W`.
template <typename W, typename Fn>
    requires std::same_as<std::remove_const_t<W>, ModelWeights>
void for_each_tensor(W& w, Fn&& fn) {
    auto mat = [&](const std::string& name, auto& m) {
        fn(name, std::vector<std::uint64_t>{m.rows(), m.cols()}, m.flat());
    };
    auto vec = [&](const std::string& name, auto& v) {
        fn(name, std::vector<std::uint64_t>{v.size()}, std::span(v));
    };
    auto dense = [&](const std::string& prefix, auto& dw) {
        mat(prefix + ".weight", dw.weight);
        vec(prefix + ".bias", dw.bias);
    };
    auto norm = [&](const std::string& prefix, auto& nw) {
        vec(prefix + ".gain", nw.gain);
        vec(prefix + ".bias", nw.bias);
    };
    mat("embeddings.word", w.word_embeddings);
    mat("embeddings.position", w.position_embeddings);
    mat("embeddings.segment", w.segment_embeddings);
    norm("embeddings.norm", w.embedding_norm);
    for (std::size_t l = 0; l < w.layers.size(); ++l) {
        auto& layer = w.layers[l];
        const std::string p = "encoder." + std::to_string(l) + ".";
        dense(p + "attention.query", layer.query);
        dense(p + "attention.key", layer.key);
        dense(p + "attention.value", layer.value);
        dense(p + "attention.output", layer.attention_output);
        norm(p + "attention.norm", layer.attention_norm);
        dense(p + "ffn.in", layer.ffn_in);
        dense(p + "ffn.out", layer.ffn_out);
        norm(p + "ffn.norm", layer.ffn_norm);
    }
    dense("head.transform", w.head_transform);
    norm("head.norm", w.head_norm);
    mat("head.decoder.weight", w.decoder_weight);
    vec("head.decoder.bias", w.decoder_bias);
}

/// FNV-1a over the raw weight bytes; used to prove weights were not touched.
inline std::uint64_t weight_checksum(const ModelWeights& w) {
    std::uint64_t h = 1469598103934665603ull;
    for_each_tensor(w, [&](const std::string&, const auto&, std::span<const float> values) {
        const auto* p = reinterpret_cast<const unsigned char*>(values.data());
        for (std::size_t i = 0; i < values.size_bytes(); ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    });
    return h;
}

/// Gaussian weights (layernorm gains 1, biases 0); decoder tied to the
/// word embeddings when the config says so.
inline ModelWeights random_weights(const ModelConfig& cfg, std::uint64_t seed, double stddev = 0.02) {
    auto w = ModelWeights::zeros(cfg);
    Rng rng(seed);
    for_each_tensor(w, [&](const std::string& name, const auto&, std::span<float> values) {
        if (name.ends_with(".gain")) {
            std::fill(values.begin(), values.end(), 1.0f);
        } else if (!name.ends_with(".bias")) {
            fill_gaussian(rng, values, 0.0, stddev);
        }
    });
    if (cfg.head_tied) w.decoder_weight = w.word_embeddings;
    return w;
}

inline constexpr const char* kConfigHeadsTensor = "config.num_heads";
inline constexpr const char* kConfigEpsilonTensor = "config.layernorm_epsilon";

/// Immutable loaded model. Shared read-only across worker threads.
class ModelBundle {
public:
    ModelBundle(ModelConfig config, ModelWeights weights, Vocabulary vocab, TokenizerMode mode)
        : config_(config), weights_(std::move(weights)), vocab_(std::move(vocab)), mode_(mode) {
        config_.validate();
        if (vocab_.size() != config_.vocab_size)
            throw SchemaError("embeddings.word", "row count " + std::to_string(config_.vocab_size) +
                                                     " does not match vocabulary size " +
                                                     std::to_string(vocab_.size()));
        if (weights_.word_embeddings.rows() != config_.vocab_size ||
            weights_.word_embeddings.cols() != config_.hidden_dim)
            throw SchemaError("embeddings.word", "shape does not match config");
        if (weights_.position_embeddings.rows() != config_.max_positions)
            throw SchemaError("embeddings.position", "shape does not match config");
    }

    const ModelConfig& config() const noexcept { return config_; }
    const ModelWeights& weights() const noexcept { return weights_; }
    const Vocabulary& vocab() const noexcept { return vocab_; }
    TokenizerMode tokenizer_mode() const noexcept { return mode_; }

    std::span<const float> static_embedding(TokenId id) const {
        return weights_.word_embeddings.row(static_cast<std::size_t>(id));
    }

    TokenSequence tokenize(std::string_view text) const { return mapp::tokenize(vocab_, mode_, text); }
    TokenSequence tokenize_words(const std::vector<std::string>& words) const {
        return mapp::tokenize_words(vocab_, mode_, words);
    }

private:
    ModelConfig config_;
    ModelWeights weights_;
    Vocabulary vocab_;
    TokenizerMode mode_;
};

inline TensorArchive to_archive(const ModelConfig& cfg, const ModelWeights& weights) {
    TensorArchive archive;
    for_each_tensor(weights, [&](const std::string& name, std::vector<std::uint64_t> dims,
                                 std::span<const float> values) {
        archive.add(name, std::move(dims), std::vector<float>(values.begin(), values.end()));
    });
    archive.add(kConfigHeadsTensor, {1}, {static_cast<float>(cfg.num_heads)});
    archive.add(kConfigEpsilonTensor, {1}, {cfg.layernorm_epsilon});
    return archive;
}

namespace detail {

inline const TensorEntry& require(const TensorArchive& archive, const std::string& name) {
    const auto* e = archive.find(name);
    if (!e) throw SchemaError(name, "required tensor missing");
    return *e;
}

inline std::string dims_string(const std::vector<std::uint64_t>& dims) {
    std::string s = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
    return s + "]";
}

}  // namespace detail

/// Infers the configuration from tensor shapes. The head count (not
/// recoverable from shapes) and layernorm epsilon come from the two
/// `config.*` scalar tensors.
inline ModelConfig infer_config(const TensorArchive& archive) {
    ModelConfig cfg;
    const auto& word = detail::require(archive, "embeddings.word");
    if (word.dims.size() != 2) throw SchemaError("embeddings.word", "expected rank 2");
    cfg.vocab_size = word.dims[0];
    cfg.hidden_dim = word.dims[1];
    const auto& pos = detail::require(archive, "embeddings.position");
    if (pos.dims.size() != 2) throw SchemaError("embeddings.position", "expected rank 2");
    cfg.max_positions = pos.dims[0];
    const auto& seg = detail::require(archive, "embeddings.segment");
    if (seg.dims.size() != 2) throw SchemaError("embeddings.segment", "expected rank 2");
    cfg.segment_count = seg.dims[0];
    cfg.num_layers = 0;
    while (archive.contains("encoder." + std::to_string(cfg.num_layers) + ".attention.query.weight"))
        ++cfg.num_layers;
    if (cfg.num_layers == 0) throw SchemaError("encoder.0.attention.query.weight", "required tensor missing");
    const auto& ffn = detail::require(archive, "encoder.0.ffn.in.weight");
    if (ffn.dims.size() != 2) throw SchemaError("encoder.0.ffn.in.weight", "expected rank 2");
    cfg.ffn_dim = ffn.dims[0];
    const auto& heads = detail::require(archive, kConfigHeadsTensor);
    if (heads.values.size() != 1) throw SchemaError(kConfigHeadsTensor, "expected a single value");
    cfg.num_heads = static_cast<std::size_t>(heads.values[0]);
    const auto& eps = detail::require(archive, kConfigEpsilonTensor);
    if (eps.values.size() != 1) throw SchemaError(kConfigEpsilonTensor, "expected a single value");
    cfg.layernorm_epsilon = eps.values[0];
    return cfg;
}

/// Builds weights from an archive, checking every canonical tensor's shape.
inline ModelWeights weights_from_archive(const TensorArchive& archive, const ModelConfig& cfg) {
    auto weights = ModelWeights::zeros(cfg);
    for_each_tensor(weights, [&](const std::string& name, const std::vector<std::uint64_t>& dims,
                                 std::span<float> values) {
        const auto& e = detail::require(archive, name);
        if (e.dims != dims)
            throw SchemaError(name, "shape " + detail::dims_string(e.dims) + " expected " +
                                        detail::dims_string(dims));
        std::copy(e.values.begin(), e.values.end(), values.begin());
    });
    return weights;
}

inline ModelBundle bundle_from_archive(const TensorArchive& archive, Vocabulary vocab, TokenizerMode mode) {
    auto cfg = infer_config(archive);
    cfg.validate();
    auto weights = weights_from_archive(archive, cfg);
    cfg.head_tied = weights.decoder_weight == weights.word_embeddings;
    return ModelBundle(cfg, std::move(weights), std::move(vocab), mode);
}

/// Loads archive + vocabulary. Toy vocabularies (no "##" pieces) get the
/// closed whitespace tokenizer unless a mode is given.
inline ModelBundle load_archive(const std::filesystem::path& archive_path,
                                const std::filesystem::path& vocab_path,
                                std::optional<TokenizerMode> mode = std::nullopt) {
    auto archive = read_archive(archive_path);
    auto vocab = read_vocabulary(vocab_path);
    if (!mode) {
        mode = TokenizerMode::closed_whitespace;
        for (const auto& t : vocab.tokens())
            if (t.starts_with("##")) {
                mode = TokenizerMode::wordpiece;
                break;
            }
    }
    return bundle_from_archive(archive, std::move(vocab), *mode);
}

inline void save_bundle(const ModelBundle& bundle, const std::filesystem::path& archive_path,
                        const std::filesystem::path& vocab_path) {
    write_archive(archive_path, to_archive(bundle.config(), bundle.weights()));
    write_vocabulary(vocab_path, bundle.vocab());
}

}  // namespace mapp
