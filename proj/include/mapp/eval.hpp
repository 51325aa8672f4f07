#pragma once

// Scoring of masked predictions against sense lexicons, grouping into
// metric tables, baselines and distance summaries.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "mapp/dataset.hpp"
#include "mapp/geometry.hpp"
#include "mapp/induction.hpp"
#include "mapp/mlm.hpp"
#include "mapp/rng.hpp"

namespace mapp {

/// Fixed-precision decimal used everywhere a real number lands in a report.
inline std::string format_real(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

struct PredictionSet {
    std::string item_id;
    /// vanilla, mapp, perturbed, interpolated, aggregate, posthoc, random.
    std::string condition;
    std::optional<double> epsilon;
    std::optional<std::size_t> direction;
    std::optional<double> alpha;
    std::vector<RankedWord> words;

    std::size_t k() const noexcept { return words.size(); }
};

inline nlohmann::json prediction_to_json(const PredictionSet& p) {
    nlohmann::json words = nlohmann::json::array();
    for (const auto& w : p.words) words.push_back({{"word", w.word}, {"id", w.id}, {"p", format_real(w.probability, 8)}});
    nlohmann::json j{{"item", p.item_id}, {"condition", p.condition}, {"predictions", words}};
    if (p.epsilon) j["epsilon"] = format_real(*p.epsilon, 2);
    if (p.direction) j["direction"] = *p.direction;
    if (p.alpha) j["alpha"] = format_real(*p.alpha, 2);
    return j;
}

/// Number of the top-k words that belong to the lexicon.
inline std::pair<std::size_t, std::size_t> sense_match(const PredictionSet& preds, const SenseLexicon& lexicon,
                                                       std::size_t k) {
    if (k > preds.words.size()) throw ValidationError(preds.item_id, "k exceeds the number of predictions");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < k; ++i) hits += lexicon.contains(preds.words[i].word);
    return {hits, k};
}

/// Whether the original cue word is among the top-k predictions.
inline bool word_match(const PredictionSet& preds, const std::string& cue_word, std::size_t k) {
    if (k > preds.words.size()) throw ValidationError(preds.item_id, "k exceeds the number of predictions");
    const auto cue = lowercase(cue_word);
    for (std::size_t i = 0; i < k; ++i)
        if (lowercase(preds.words[i].word) == cue) return true;
    return false;
}

enum class SenseCode { A, B, neither };

inline std::vector<SenseCode> code_interpolation(const PredictionSet& preds, const SenseLexicon& a,
                                                 const SenseLexicon& b) {
    std::vector<SenseCode> codes;
    for (const auto& w : preds.words)
        codes.push_back(a.contains(w.word) ? SenseCode::A : b.contains(w.word) ? SenseCode::B : SenseCode::neither);
    return codes;
}

/// One scored observation: `hits` of `total` predictions for an item under a
/// condition at cutoff k.
struct ScoredRow {
    std::string condition;
    std::string item_id;
    std::string pos;
    std::optional<double> epsilon;
    std::optional<double> alpha;
    std::string code;  // interpolation coding (A, B, neither); empty otherwise
    std::size_t k = 1;
    std::size_t hits = 0;
    std::size_t total = 0;
};

struct MetricRow {
    std::string condition;
    std::string group;
    std::size_t k = 1;
    std::size_t numerator = 0;
    std::size_t denominator = 0;

    double accuracy() const { return denominator ? double(numerator) / double(denominator) : 0.0; }
};

enum class Grouping { all, pos, per_epsilon, epsilon_bins, per_alpha };

struct EpsilonBin {
    double lo, hi;
    std::string label() const { return "[" + format_real(lo, 1) + "," + format_real(hi, 1) + "]"; }
};

inline std::vector<EpsilonBin> epsilon_bins() { return {{0.0, 0.4}, {0.6, 1.0}, {1.2, 1.8}}; }

inline std::optional<std::string> bin_label(double eps) {
    for (const auto& b : epsilon_bins())
        if (eps >= b.lo - 1e-9 && eps <= b.hi + 1e-9) return b.label();
    return std::nullopt;
}

/// Sums hits and totals per (condition, group, k). Output order is sorted
/// by those keys, so it does not depend on input order.
inline std::vector<MetricRow> aggregate(const std::vector<ScoredRow>& rows, Grouping scheme) {
    std::map<std::tuple<std::string, std::string, std::size_t>, MetricRow> acc;
    auto add = [&](const ScoredRow& r, const std::string& group) {
        auto& m = acc[{r.condition, group, r.k}];
        m.condition = r.condition;
        m.group = group;
        m.k = r.k;
        m.numerator += r.hits;
        m.denominator += r.total;
    };
    for (const auto& r : rows) {
        const std::string suffix = r.code.empty() ? "" : ";code=" + r.code;
        switch (scheme) {
            case Grouping::all: add(r, "all" + suffix); break;
            case Grouping::pos:
                add(r, "all" + suffix);
                if (!r.pos.empty()) add(r, r.pos + suffix);
                break;
            case Grouping::per_epsilon:
                if (r.epsilon) add(r, "eps=" + format_real(*r.epsilon, 2) + suffix);
                break;
            case Grouping::epsilon_bins:
                if (r.epsilon)
                    if (auto label = bin_label(*r.epsilon)) add(r, "bin=" + *label + suffix);
                break;
            case Grouping::per_alpha:
                if (r.alpha) add(r, "alpha=" + format_real(*r.alpha, 2) + suffix);
                break;
        }
    }
    std::vector<MetricRow> out;
    for (auto& [key, row] : acc) out.push_back(row);
    return out;
}

inline const MetricRow* find_metric(const std::vector<MetricRow>& rows, const std::string& condition,
                                    const std::string& group, std::size_t k) {
    for (const auto& r : rows)
        if (r.condition == condition && r.group == group && r.k == k) return &r;
    return nullptr;
}

inline void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
    out << "condition,group,k,numerator,denominator,accuracy\n";
    for (const auto& r : rows)
        out << r.condition << ',' << '"' << r.group << '"' << ',' << r.k << ',' << r.numerator << ','
            << r.denominator << ',' << format_real(r.accuracy()) << '\n';
}

/// Sense-match @1 when the focus embedding is replaced by draws from the
/// Gaussian matched to the embedding table.
inline MetricRow random_baseline(const ModelBundle& bundle, const std::vector<ProbeItem>& items,
                                 const LexiconSet& lexicons, std::size_t n_draws, std::uint64_t seed,
                                 std::vector<PredictionSet>* predictions = nullptr) {
    if (n_draws == 0) throw ValidationError("", "random baseline needs at least one draw");
    const auto stats = embedding_stats(bundle);
    MetricRow row{"random", "all", 1, 0, 0};
    Vector z(bundle.config().hidden_dim);
    for (const auto& item : items) {
        const auto in = probe_input(bundle, item);
        const auto& lex = lexicon_for(lexicons, item);
        for (std::size_t d = 0; d < n_draws; ++d) {
            Rng rng(derive_seed(seed, "random-baseline", item.id, d));
            fill_gaussian(rng, z, stats.mean, stats.stddev);
            PredictionSet p{item.id, "random", std::nullopt, d, std::nullopt,
                            masked_topk(bundle, in, std::span<const float>(z), 1)};
            row.numerator += sense_match(p, lex, 1).first;
            ++row.denominator;
            if (predictions) predictions->push_back(std::move(p));
        }
    }
    return row;
}

struct DistanceRow {
    std::string item_id;
    double euclidean = 0;
    double cosine = 0;
};

struct Summary {
    double min = 0, median = 0, max = 0;
};

inline Summary summarize(std::vector<double> v) {
    if (v.empty()) return {};
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    const double median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    return {v.front(), median, v.back()};
}

struct DistanceReport {
    std::vector<DistanceRow> rows;  // sorted by item id
    Summary euclidean, cosine;
};

/// Distances between each pseudoword and the static embedding of its focus word.
inline DistanceReport distance_report(const std::vector<Pseudoword>& pseudowords, const ModelBundle& bundle) {
    DistanceReport report;
    for (const auto& pw : pseudowords) {
        const auto id = bundle.vocab().find(pw.focus_word);
        if (!id) throw VocabularyError(pw.focus_word);
        const auto zt = bundle.static_embedding(*id);
        const auto key = pw.source_ids.empty() ? pw.focus_word : detail::join_ids(pw.source_ids);
        report.rows.push_back({key, euclidean_distance(pw.vector, zt), cosine_distance(pw.vector, zt)});
    }
    std::sort(report.rows.begin(), report.rows.end(),
              [](const auto& a, const auto& b) { return a.item_id < b.item_id; });
    std::vector<double> e, c;
    for (const auto& r : report.rows) e.push_back(r.euclidean), c.push_back(r.cosine);
    report.euclidean = summarize(e);
    report.cosine = summarize(c);
    return report;
}

inline nlohmann::json summary_json(const Summary& s) {
    return {{"min", format_real(s.min)}, {"median", format_real(s.median)}, {"max", format_real(s.max)}};
}

inline void write_distance_csv(std::ostream& out, const DistanceReport& report) {
    out << "item,euclidean,cosine\n";
    for (const auto& r : report.rows)
        out << r.item_id << ',' << format_real(r.euclidean) << ',' << format_real(r.cosine) << '\n';
}

}  // namespace mapp
