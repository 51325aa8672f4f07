#pragma once

// Masked-LM training of a small encoder on a closed-vocabulary corpus.
// Exists so that every probing experiment can run at desk scale without
// pretrained weights.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "mapp/encoder.hpp"
#include "mapp/errors.hpp"
#include "mapp/model.hpp"
#include "mapp/optim.hpp"
#include "mapp/rng.hpp"

namespace mapp {

using Sentence = std::vector<std::string>;

struct TrainParams {
    std::size_t max_steps = 4000;
    std::size_t batch_size = 32;
    double learning_rate = 3e-3;
    double mask_rate = 0.15;
    double replace_with_mask = 0.8;
    double replace_with_random = 0.1;
    double init_stddev = 0.02;
    std::size_t eval_every = 250;
    /// Evaluations without improvement (by more than min_delta) before stopping.
    std::size_t patience = 4;
    double min_delta = 1e-3;
    /// Sentences used for the held-out masked accuracy; defaults to a
    /// deterministic sample of `holdout_size` corpus sentences.
    std::vector<Sentence> holdout;
    std::size_t holdout_size = 256;
    std::function<void(std::size_t step, double loss, double accuracy)> on_eval;
};

struct TrainReport {
    std::size_t steps = 0;
    double final_loss = 0;
    double heldout_accuracy = 0;
    bool converged = false;
};

class TrainingError : public Error {
public:
    TrainingError(const std::string& what, TrainReport report) : Error(what), report_(report) {}
    const TrainReport& report() const noexcept { return report_; }

private:
    TrainReport report_;
};

/// Special tokens followed by corpus words in first-appearance order,
/// padded with "[unusedN]" up to `vocab_size`.
inline Vocabulary corpus_vocabulary(const std::vector<Sentence>& corpus, std::size_t vocab_size) {
    std::vector<std::string> tokens(std::begin(kSpecialTokens), std::end(kSpecialTokens));
    std::unordered_set<std::string> seen(tokens.begin(), tokens.end());
    for (const auto& s : corpus)
        for (const auto& w : s)
            if (seen.insert(w).second) tokens.push_back(w);
    if (tokens.size() > vocab_size)
        throw ValidationError("vocabulary", "corpus needs " + std::to_string(tokens.size()) +
                                                " tokens but vocab_size is " + std::to_string(vocab_size));
    for (std::size_t i = 0; tokens.size() < vocab_size; ++i) tokens.push_back("[unused" + std::to_string(i) + "]");
    return Vocabulary(std::move(tokens));
}

namespace detail {

inline std::vector<TokenId> frame(const Vocabulary& vocab, const Sentence& s) {
    std::vector<TokenId> ids{Vocabulary::cls()};
    for (const auto& w : s) {
        auto id = vocab.find(w);
        if (!id) throw VocabularyError(w);
        ids.push_back(*id);
    }
    ids.push_back(Vocabulary::sep());
    return ids;
}

struct MaskedExample {
    std::vector<TokenId> input;
    std::vector<std::pair<std::size_t, TokenId>> targets;  // position, original id
};

inline MaskedExample mask_sentence(const std::vector<TokenId>& ids, const TrainParams& p, std::size_t vocab_size,
                                   Rng& rng) {
    MaskedExample ex{ids, {}};
    const std::size_t words = ids.size() - 2;
    const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(p.mask_rate * double(words))));
    std::vector<std::size_t> positions(words);
    for (std::size_t i = 0; i < words; ++i) positions[i] = i + 1;
    for (std::size_t i = 0; i < count && i < words; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, words - 1);
        std::swap(positions[i], positions[pick(rng)]);
    }
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<TokenId> random_word(kNumSpecial, static_cast<TokenId>(vocab_size - 1));
    for (std::size_t i = 0; i < count && i < words; ++i) {
        const auto pos = positions[i];
        ex.targets.emplace_back(pos, ids[pos]);
        const double r = coin(rng);
        if (r < p.replace_with_mask) {
            ex.input[pos] = Vocabulary::mask();
        } else if (r < p.replace_with_mask + p.replace_with_random) {
            ex.input[pos] = random_word(rng);
        }
    }
    return ex;
}

inline std::vector<std::span<float>> tensor_spans(ModelWeights& w) {
    std::vector<std::span<float>> spans;
    for_each_tensor(w, [&](const std::string&, const auto&, std::span<float> v) { spans.push_back(v); });
    return spans;
}

}  // namespace detail

/// Fraction of positions predicted exactly when each non-framing position
/// is masked in turn.
inline double heldout_masked_accuracy(const ModelBundle& bundle, const std::vector<Sentence>& sentences) {
    std::size_t hits = 0, total = 0;
    HeadTrace<float> head;
    for (const auto& s : sentences) {
        const auto ids = detail::frame(bundle.vocab(), s);
        for (std::size_t pos = 1; pos + 1 < ids.size(); ++pos) {
            auto masked = ids;
            masked[pos] = Vocabulary::mask();
            const auto trace = run_encoder<float>(bundle, masked);
            mlm_head<float>(bundle, trace.hidden(bundle.config().num_layers).row(pos), head);
            TokenId best = kNumSpecial;
            for (std::size_t v = kNumSpecial; v < head.logits.size(); ++v)
                if (head.logits[v] > head.logits[static_cast<std::size_t>(best)]) best = static_cast<TokenId>(v);
            hits += best == ids[pos];
            ++total;
        }
    }
    return total ? double(hits) / double(total) : 0.0;
}

struct TrainResult {
    ModelBundle bundle;
    TrainReport report;
};

/// Trains until the held-out masked accuracy stops improving or max_steps
/// is reached. Deterministic for a given seed.
inline TrainResult train_toy(const std::vector<Sentence>& corpus, ModelConfig cfg, const TrainParams& params,
                             std::uint64_t seed) {
    if (corpus.empty()) throw ValidationError("corpus", "empty training corpus");
    auto vocab = corpus_vocabulary(corpus, cfg.vocab_size);
    std::size_t longest = 0;
    for (const auto& s : corpus) longest = std::max(longest, s.size() + 2);
    if (longest > cfg.max_positions)
        throw ValidationError("corpus", "sentence longer than max_positions");
    std::vector<std::vector<TokenId>> framed;
    framed.reserve(corpus.size());
    for (const auto& s : corpus) framed.push_back(detail::frame(vocab, s));

    auto weights = random_weights(cfg, derive_seed(seed, "init"), params.init_stddev);
    auto holdout = params.holdout;
    if (holdout.empty()) {
        Rng pick(derive_seed(seed, "holdout"));
        std::uniform_int_distribution<std::size_t> any(0, corpus.size() - 1);
        for (std::size_t i = 0; i < std::min(params.holdout_size, corpus.size()); ++i) holdout.push_back(corpus[any(pick)]);
    }
    Adam adam(AdamConfig{params.learning_rate});
    Rng rng(derive_seed(seed, "batches"));
    std::uniform_int_distribution<std::size_t> pick_sentence(0, framed.size() - 1);

    TrainReport report;
    double best_accuracy = -1;
    std::size_t stale = 0;
    double loss_window = 0;
    std::size_t window_count = 0;

    for (std::size_t step = 1; step <= params.max_steps; ++step) {
        // Built per step so the forward pass sees the current weights; the
        // bundle copy is cheap at toy scale.
        const ModelBundle model(cfg, weights, vocab, TokenizerMode::closed_whitespace);
        std::vector<detail::MaskedExample> batch;
        std::size_t targets = 0;
        for (std::size_t b = 0; b < params.batch_size; ++b) {
            batch.push_back(detail::mask_sentence(framed[pick_sentence(rng)], params, cfg.vocab_size, rng));
            targets += batch.back().targets.size();
        }
        auto grad = ModelWeights::zeros(cfg);
        double loss = 0;
        HeadTrace<float> head;
        for (const auto& ex : batch) {
            auto trace = run_encoder<float>(model, ex.input);
            Matrix<float> d_hidden(ex.input.size(), cfg.hidden_dim);
            for (const auto& [pos, target] : ex.targets) {
                mlm_head<float>(model, trace.hidden(cfg.num_layers).row(pos), head);
                const float mx = *std::max_element(head.logits.begin(), head.logits.end());
                double z = 0;
                for (auto l : head.logits) z += std::exp(double(l - mx));
                std::vector<float> d_logits(cfg.vocab_size);
                for (std::size_t v = 0; v < cfg.vocab_size; ++v) {
                    const double p = std::exp(double(head.logits[v] - mx)) / z;
                    d_logits[v] = static_cast<float>((p - (TokenId(v) == target ? 1.0 : 0.0)) / double(targets));
                }
                loss -= (double(head.logits[static_cast<std::size_t>(target)] - mx) - std::log(z)) / double(targets);
                const auto dh = mlm_head_backward<float>(model, head, d_logits, &grad);
                auto row = d_hidden.row(pos);
                for (std::size_t i = 0; i < cfg.hidden_dim; ++i) row[i] += dh[i];
            }
            const auto d_sum = encoder_backward(model, trace, cfg.num_layers, std::move(d_hidden), &grad);
            for (std::size_t t = 0; t < ex.input.size(); ++t) {
                const auto g = d_sum.row(t);
                auto gw = grad.word_embeddings.row(static_cast<std::size_t>(ex.input[t]));
                auto gp = grad.position_embeddings.row(t);
                auto gs = grad.segment_embeddings.row(0);
                for (std::size_t i = 0; i < cfg.hidden_dim; ++i) {
                    gw[i] += g[i];
                    gp[i] += g[i];
                    gs[i] += g[i];
                }
            }
        }
        if (cfg.head_tied)
            for (std::size_t i = 0; i < grad.word_embeddings.size(); ++i)
                grad.word_embeddings.flat()[i] += grad.decoder_weight.flat()[i];

        auto params_spans = detail::tensor_spans(weights);
        auto grad_spans = detail::tensor_spans(grad);
        adam.begin_step();
        for (std::size_t b = 0; b < params_spans.size(); ++b) {
            if (cfg.head_tied && params_spans[b].data() == weights.decoder_weight.data()) continue;
            adam.update(b, params_spans[b], std::span<const float>(grad_spans[b]));
        }
        if (cfg.head_tied) weights.decoder_weight = weights.word_embeddings;

        loss_window += loss;
        ++window_count;
        report.steps = step;
        if (step % params.eval_every == 0 || step == params.max_steps) {
            const ModelBundle current(cfg, weights, vocab, TokenizerMode::closed_whitespace);
            report.heldout_accuracy = heldout_masked_accuracy(current, holdout);
            report.final_loss = loss_window / double(window_count);
            loss_window = 0;
            window_count = 0;
            if (params.on_eval) params.on_eval(step, report.final_loss, report.heldout_accuracy);
            if (report.heldout_accuracy > best_accuracy + params.min_delta) {
                best_accuracy = report.heldout_accuracy;
                stale = 0;
            } else if (++stale >= params.patience) {
                report.converged = true;
                break;
            }
        }
    }
    return {ModelBundle(cfg, std::move(weights), std::move(vocab), TokenizerMode::closed_whitespace), report};
}

}  // namespace mapp
