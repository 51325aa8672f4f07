#pragma once

// Pseudoword induction: find an input vector z whose contextual vector at
// the focus position matches the original word's, by Adam over z alone.

#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "mapp/dataset.hpp"
#include "mapp/errors.hpp"
#include "mapp/mlm.hpp"
#include "mapp/model.hpp"
#include "mapp/optim.hpp"
#include "mapp/rng.hpp"

namespace mapp {

struct InductionConfig {
    std::size_t num_inits = 5;
    std::size_t max_steps = 2000;
    AdamConfig adam{};
    /// Stop once the loss improved by less than this fraction over `stop_window` steps.
    double stop_tolerance = 1e-6;
    std::size_t stop_window = 50;
    std::size_t decode_check_k = 1;
    /// Reject pseudowords that fail the decode check instead of only recording it.
    bool strict_decode = false;
    /// Hidden layer matched by the loss; defaults to the final layer.
    std::optional<std::size_t> layer;
    /// Replaces the random initialization of every restart (used to start at z_t).
    std::optional<Vector> init;
    std::uint64_t seed = 0;
};

struct Pseudoword {
    Vector vector;
    std::vector<std::string> source_ids;
    std::string focus_word;
    std::string sense_id;
    double final_loss = 0;
    std::vector<double> init_losses;
    /// Mean squared norm of the matched contextual vectors.
    double target_norm_sq = 0;
    std::size_t decode_rank = 0;
    std::size_t steps_used = 0;
};

class DecodeCheckError : public InductionError {
public:
    DecodeCheckError(const std::string& what, Pseudoword pw) : InductionError(what), pseudoword_(std::move(pw)) {}
    const Pseudoword& pseudoword() const noexcept { return pseudoword_; }

private:
    Pseudoword pseudoword_;
};

struct EmbeddingStats {
    double mean = 0, stddev = 0;
};

inline EmbeddingStats embedding_stats(const ModelBundle& bundle) {
    const auto flat = bundle.weights().word_embeddings.flat();
    double sum = 0, sq = 0;
    for (float v : flat) sum += v;
    const double mean = sum / double(flat.size());
    for (float v : flat) sq += (v - mean) * (v - mean);
    return {mean, std::sqrt(sq / double(flat.size()))};
}

/// 1-based rank of the focus token when z replaces its embedding in the
/// unmasked sentence and the head is applied at the focus position.
inline std::size_t decode_rank(const ModelBundle& bundle, const ProbeInput& in, std::span<const float> z) {
    const auto trace = run_encoder<float>(bundle, in.ids, EmbeddingOverride{in.focus, z});
    HeadTrace<float> head;
    mlm_head<float>(bundle, trace.hidden(bundle.config().num_layers).row(in.focus), head);
    const auto target = in.ids[in.focus];
    const float pt = head.logits[static_cast<std::size_t>(target)];
    std::size_t rank = 1;
    for (std::size_t v = 0; v < head.logits.size(); ++v) {
        const auto id = static_cast<TokenId>(v);
        if (id == target || Vocabulary::is_special(id)) continue;
        if (head.logits[v] > pt || (head.logits[v] == pt && id < target)) ++rank;
    }
    return rank;
}

inline std::size_t decode_check(const ModelBundle& bundle, const ProbeItem& item, std::span<const float> z) {
    return decode_rank(bundle, probe_input(bundle, item), z);
}

namespace detail {

struct Objective {
    const ModelBundle& bundle;
    std::vector<ProbeInput> inputs;
    std::vector<Vector> targets;
    std::size_t layer;

    LossAndGradient<float> operator()(std::span<const float> z, bool with_gradient) const {
        LossAndGradient<float> total;
        const double n = double(inputs.size());
        if (with_gradient) total.gradient.assign(z.size(), 0.0f);
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            auto r = reconstruction_loss<float>(bundle, inputs[i], z, targets[i], layer, with_gradient);
            total.loss += r.loss / n;
            if (with_gradient)
                for (std::size_t k = 0; k < z.size(); ++k) total.gradient[k] += static_cast<float>(r.gradient[k] / n);
        }
        return total;
    }
};

struct RestartResult {
    Vector z;
    double loss = std::numeric_limits<double>::infinity();
    std::size_t steps = 0;
};

inline RestartResult run_restart(const Objective& objective, Vector z, const InductionConfig& cfg) {
    Adam adam(cfg.adam);
    std::vector<double> history;
    RestartResult best{z, objective(z, false).loss, 0};
    if (!std::isfinite(best.loss)) best.loss = std::numeric_limits<double>::infinity();
    for (std::size_t step = 0; step < cfg.max_steps; ++step) {
        const auto eval = objective(z, true);
        if (!std::isfinite(eval.loss)) break;
        if (eval.loss < best.loss) best = {z, eval.loss, step};
        history.push_back(eval.loss);
        if (history.size() > cfg.stop_window) {
            const double old = history[history.size() - 1 - cfg.stop_window];
            if (old <= 0 || (old - eval.loss) / old < cfg.stop_tolerance) {
                best.steps = step;
                return best;
            }
        }
        adam.begin_step();
        adam.update(0, std::span<float>(z), std::span<const float>(eval.gradient));
    }
    const double last = objective(z, false).loss;
    if (std::isfinite(last) && last < best.loss) best = {z, last, cfg.max_steps};
    best.steps = cfg.max_steps;
    return best;
}

inline std::string join_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) out += (out.empty() ? "" : "+") + id;
    return out;
}

}  // namespace detail

/// Minimizes the mean reconstruction loss over `items` (one item gives the
/// single-sentence objective). Restart r of a run draws its initialization
/// from derive_seed(cfg.seed, "induce", <joined item ids>, r).
inline Pseudoword induce_aggregate(const ModelBundle& bundle, const std::vector<ProbeItem>& items,
                                   const InductionConfig& cfg) {
    if (items.empty()) throw ValidationError("", "induction needs at least one item");
    if (cfg.num_inits == 0) throw ValidationError("", "num_inits must be at least 1");
    for (const auto& i : items) {
        if (i.focus_word != items.front().focus_word)
            throw ValidationError(i.id, "items of one pseudoword must share the focus word");
        if (i.sense_id != items.front().sense_id)
            throw ValidationError(i.id, "items of one pseudoword must share the sense id");
    }
    const auto layer = cfg.layer.value_or(default_layer(bundle));
    check_layer(bundle, layer);
    const auto d = bundle.config().hidden_dim;
    if (cfg.init && cfg.init->size() != d) throw ValidationError("", "init vector has wrong dimensionality");

    detail::Objective objective{bundle, {}, {}, layer};
    Pseudoword pw;
    pw.focus_word = items.front().focus_word;
    pw.sense_id = items.front().sense_id;
    for (const auto& i : items) {
        objective.inputs.push_back(probe_input(bundle, i));
        objective.targets.push_back(contextual_vector(bundle, objective.inputs.back(), layer));
        double sq = 0;
        for (float v : objective.targets.back()) sq += double(v) * v;
        pw.target_norm_sq += sq / double(items.size());
        pw.source_ids.push_back(i.id);
    }

    const auto stats = embedding_stats(bundle);
    const auto key = detail::join_ids(pw.source_ids);
    detail::RestartResult best;
    bool any_finite = false;
    for (std::size_t r = 0; r < cfg.num_inits; ++r) {
        Vector z(d);
        if (cfg.init) {
            z = *cfg.init;
        } else {
            Rng rng(derive_seed(cfg.seed, "induce", key, r));
            fill_gaussian(rng, z, stats.mean, stats.stddev);
        }
        auto result = detail::run_restart(objective, std::move(z), cfg);
        pw.init_losses.push_back(result.loss);
        if (std::isfinite(result.loss)) any_finite = true;
        if (result.loss < best.loss) best = std::move(result);  // strict: lowest index wins ties
    }
    if (!any_finite) throw InductionError(key + ": every restart produced a non-finite loss");
    pw.vector = std::move(best.z);
    pw.final_loss = best.loss;
    pw.steps_used = best.steps;
    pw.decode_rank = decode_rank(bundle, objective.inputs.front(), pw.vector);
    if (cfg.strict_decode && pw.decode_rank > cfg.decode_check_k)
        throw DecodeCheckError(key + ": pseudoword decodes '" + pw.focus_word + "' at rank " +
                                   std::to_string(pw.decode_rank),
                               pw);
    return pw;
}

inline Pseudoword induce(const ModelBundle& bundle, const ProbeItem& item, const InductionConfig& cfg) {
    return induce_aggregate(bundle, {item}, cfg);
}

/// Arithmetic mean of individually induced vectors.
inline Vector posthoc_average(const std::vector<Vector>& vectors) {
    if (vectors.empty()) throw ValidationError("", "post hoc average of an empty list");
    const auto d = vectors.front().size();
    std::vector<double> acc(d, 0.0);
    for (const auto& v : vectors) {
        if (v.size() != d) throw ValidationError("", "vectors differ in dimensionality");
        for (std::size_t i = 0; i < d; ++i) acc[i] += v[i];
    }
    Vector out(d);
    for (std::size_t i = 0; i < d; ++i) out[i] = static_cast<float>(acc[i] / double(vectors.size()));
    return out;
}

inline Vector posthoc_average(const std::vector<Pseudoword>& pseudowords) {
    std::vector<Vector> vs;
    for (const auto& p : pseudowords) vs.push_back(p.vector);
    return posthoc_average(vs);
}

}  // namespace mapp
