#pragma once

// The four experiment families plus baselines, as deterministic batch runs
// over a bounded worker pool. Every report is written in item order, so
// output bytes do not depend on scheduling.

#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "mapp/dataset.hpp"
#include "mapp/eval.hpp"
#include "mapp/geometry.hpp"
#include "mapp/induction.hpp"
#include "mapp/pseudoword_store.hpp"
#include "mapp/svg.hpp"

namespace mapp {

struct RunConfig {
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 0;
    InductionConfig induction{};
    std::vector<double> epsilons = default_epsilons();
    std::vector<double> alphas = default_alphas();
    /// Cutoffs for sense-match tables.
    std::vector<std::size_t> ks{1, 5};
    /// Cutoffs for word-match (original cue recovered) tables.
    std::vector<std::size_t> word_ks{1, 5, 20};
    std::size_t num_directions = 10;
    MagnitudePolicy magnitude_policy = MagnitudePolicy::rescale;
    std::size_t baseline_draws = 100;
    std::size_t workers = 1;
    /// Pseudoword store; defaults to <out_dir>/pseudowords.jsonl.
    std::optional<std::filesystem::path> store_path;
};

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first
/// exception thrown by any task is rethrown after all threads join.
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

struct Failure {
    std::string item_id;
    std::string reason;
};

struct ExperimentReport {
    std::vector<MetricRow> metrics;
    std::vector<PredictionSet> predictions;
    std::vector<Failure> failures;
    std::vector<Pseudoword> pseudowords;
    std::vector<std::filesystem::path> files;
};

namespace detail {

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Everything that determines an induction result, so a stored pseudoword
/// is reused only for an identical request.
inline std::string induction_key(const ModelBundle& bundle, const InductionConfig& cfg,
                                 const std::vector<std::string>& ids) {
    std::string key = join_ids(ids) + "|model=" + hex64(weight_checksum(bundle.weights())) +
                      "|seed=" + std::to_string(cfg.seed) + "|inits=" + std::to_string(cfg.num_inits) +
                      "|steps=" + std::to_string(cfg.max_steps) +
                      "|layer=" + std::to_string(cfg.layer.value_or(default_layer(bundle))) +
                      "|lr=" + format_real(cfg.adam.learning_rate, 8) + "|tol=" + format_real(cfg.stop_tolerance, 12) +
                      "|window=" + std::to_string(cfg.stop_window);
    if (cfg.init) key += "|init=" + hex64(hash_label({reinterpret_cast<const char*>(cfg.init->data()),
                                                      cfg.init->size() * sizeof(float)}));
    return key;
}

class Session {
public:
    Session(const ModelBundle& bundle, const RunConfig& cfg)
        : bundle_(bundle), cfg_(cfg), store_(cfg.store_path.value_or(cfg.out_dir / "pseudowords.jsonl")) {
        induction_ = cfg.induction;
        induction_.seed = cfg.seed;
    }

    const ModelBundle& bundle() const { return bundle_; }
    const RunConfig& config() const { return cfg_; }

    /// Induces (or reloads) the pseudoword for a set of items. Strict decode
    /// failures are re-checked on reload.
    Pseudoword pseudoword(const std::vector<ProbeItem>& items) {
        std::vector<std::string> ids;
        for (const auto& i : items) ids.push_back(i.id);
        const auto key = induction_key(bundle_, induction_, ids);
        if (auto cached = store_.find(key)) {
            if (induction_.strict_decode && cached->decode_rank > induction_.decode_check_k)
                throw DecodeCheckError(join_ids(ids) + ": stored pseudoword fails the decode check", *cached);
            return *cached;
        }
        auto no_strict = induction_;
        no_strict.strict_decode = false;
        auto pw = induce_aggregate(bundle_, items, no_strict);
        store_.put(key, pw);
        if (induction_.strict_decode && pw.decode_rank > induction_.decode_check_k)
            throw DecodeCheckError(join_ids(ids) + ": pseudoword decodes the focus word at rank " +
                                       std::to_string(pw.decode_rank),
                                   pw);
        return pw;
    }

    std::size_t max_k() const {
        std::size_t k = 1;
        for (auto v : cfg_.ks) k = std::max(k, v);
        for (auto v : cfg_.word_ks) k = std::max(k, v);
        return k;
    }

private:
    const ModelBundle& bundle_;
    const RunConfig& cfg_;
    InductionConfig induction_;
    PseudowordStore store_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text, ExperimentReport& report) {
    svg::write_file(path, text);
    report.files.push_back(path);
}

inline void write_reports(const std::filesystem::path& dir, const std::string& stem, ExperimentReport& report) {
    std::ostringstream m;
    write_metrics_csv(m, report.metrics);
    write_text(dir / (stem + "_metrics.csv"), m.str(), report);
    std::ostringstream p;
    for (const auto& ps : report.predictions) p << prediction_to_json(ps).dump() << '\n';
    write_text(dir / (stem + "_predictions.jsonl"), p.str(), report);
    std::ostringstream f;
    f << "item,reason\n";
    for (const auto& fl : report.failures) f << fl.item_id << ",\"" << fl.reason << "\"\n";
    write_text(dir / (stem + "_failures.csv"), f.str(), report);
}

/// Items of a portion that can be probed with the bundle; the rest become failures.
inline std::vector<ProbeItem> usable(const ModelBundle& bundle, const std::vector<ProbeItem>& items,
                                     std::vector<Failure>& failures) {
    std::vector<ProbeItem> out;
    for (const auto& i : items) {
        try {
            (void)probe_input(bundle, i);
            out.push_back(i);
        } catch (const ValidationError& e) {
            failures.push_back({i.id, e.what()});
        }
    }
    return out;
}

inline void score_sense(const PredictionSet& p, const ProbeItem& item, const SenseLexicon& lex,
                        const std::vector<std::size_t>& ks, std::vector<ScoredRow>& rows,
                        std::optional<double> eps = std::nullopt) {
    for (auto k : ks) {
        if (k > p.words.size()) continue;
        rows.push_back({p.condition, item.id, item.pos, eps, std::nullopt, "", k, sense_match(p, lex, k).first, k});
    }
}

inline void require_items(const std::vector<ProbeItem>& items, const std::string& what) {
    if (items.empty()) throw ValidationError(what, "no usable items; the report would be empty");
}

}  // namespace detail

/// Vanilla versus MaPP masked prediction on the basic portion.
inline ExperimentReport run_specialize(const ModelBundle& bundle, const std::vector<ProbeItem>& all_items,
                                       const LexiconSet& lexicons, const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    ExperimentReport report;
    const auto items = detail::usable(bundle, select_portion(all_items, Portion::basic), report.failures);
    detail::require_items(items, "specialize");
    detail::Session session(bundle, cfg);
    const auto k = session.max_k();

    struct Slot {
        std::optional<PredictionSet> vanilla, mapp;
        std::optional<Pseudoword> pw;
        std::optional<Failure> failure;
    };
    std::vector<Slot> slots(items.size());
    parallel_for(items.size(), cfg.workers, [&](std::size_t i) {
        const auto& item = items[i];
        const auto in = probe_input(bundle, item);
        slots[i].vanilla = PredictionSet{item.id, "vanilla", {}, {}, {}, masked_topk(bundle, in, std::nullopt, k)};
        try {
            auto pw = session.pseudoword({item});
            slots[i].mapp = PredictionSet{item.id, "mapp", {}, {}, {},
                                          masked_topk(bundle, in, std::span<const float>(pw.vector), k)};
            slots[i].pw = std::move(pw);
        } catch (const InductionError& e) {
            slots[i].failure = Failure{item.id, e.what()};
        }
    });

    std::vector<ScoredRow> sense_rows, word_rows;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& item = items[i];
        const auto& lex = lexicon_for(lexicons, item);
        auto& s = slots[i];
        if (s.failure) report.failures.push_back(*s.failure);
        for (auto* p : {&s.vanilla, &s.mapp}) {
            if (!*p) continue;
            detail::score_sense(**p, item, lex, cfg.ks, sense_rows);
            for (auto wk : cfg.word_ks)
                if (wk <= (*p)->words.size())
                    word_rows.push_back({(*p)->condition + "-word", item.id, item.pos, {}, {}, "", wk,
                                         word_match(**p, item.tokens[item.cue_index], wk) ? 1u : 0u, 1});
            report.predictions.push_back(**p);
        }
        if (s.pw) report.pseudowords.push_back(*s.pw);
    }
    report.metrics = aggregate(sense_rows, Grouping::pos);
    for (auto& r : aggregate(word_rows, Grouping::pos)) report.metrics.push_back(r);
    detail::write_reports(cfg.out_dir, "specialize", report);

    if (!report.pseudowords.empty()) {
        const auto dist = distance_report(report.pseudowords, bundle);
        std::ostringstream d;
        write_distance_csv(d, dist);
        detail::write_text(cfg.out_dir / "specialize_distances.csv", d.str(), report);
        nlohmann::json summary{{"items", items.size()},
                               {"failures", report.failures.size()},
                               {"euclidean", summary_json(dist.euclidean)},
                               {"cosine", summary_json(dist.cosine)}};
        detail::write_text(cfg.out_dir / "specialize_summary.json", summary.dump(2) + "\n", report);
    }
    return report;
}

/// Masked prediction with pseudowords moved by cosine distance eps along
/// random great circles.
inline ExperimentReport run_perturb(const ModelBundle& bundle, const std::vector<ProbeItem>& all_items,
                                    const LexiconSet& lexicons, const RunConfig& cfg) {
    for (double e : cfg.epsilons)
        if (!(e >= 0 && e < 2)) throw ValidationError("epsilons", "every epsilon must lie in [0, 2)");
    std::filesystem::create_directories(cfg.out_dir);
    ExperimentReport report;
    const auto items = detail::usable(bundle, select_portion(all_items, Portion::basic), report.failures);
    detail::require_items(items, "perturb");
    detail::Session session(bundle, cfg);
    std::size_t k = 1;
    for (auto v : cfg.ks) k = std::max(k, v);
    const auto d = bundle.config().hidden_dim;

    struct Slot {
        std::vector<PredictionSet> preds;
        std::optional<Failure> failure;
    };
    std::vector<Slot> slots(items.size());
    parallel_for(items.size(), cfg.workers, [&](std::size_t i) {
        const auto& item = items[i];
        const auto in = probe_input(bundle, item);
        try {
            const auto pw = session.pseudoword({item});
            const auto dirs = sample_directions(cfg.num_directions, d, derive_seed(cfg.seed, "directions", item.id));
            for (double eps : cfg.epsilons)
                for (std::size_t j = 0; j < dirs.size(); ++j) {
                    const auto z = perturb(pw.vector, dirs[j], eps, cfg.magnitude_policy);
                    slots[i].preds.push_back({item.id, "perturbed", eps, j, {},
                                              masked_topk(bundle, in, std::span<const float>(z), k)});
                }
        } catch (const Error& e) {
            slots[i].failure = Failure{item.id, e.what()};
        }
    });
    std::vector<ScoredRow> rows;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (slots[i].failure) report.failures.push_back(*slots[i].failure);
        const auto& lex = lexicon_for(lexicons, items[i]);
        for (auto& p : slots[i].preds) {
            detail::score_sense(p, items[i], lex, cfg.ks, rows, p.epsilon);
            report.predictions.push_back(std::move(p));
        }
    }
    report.metrics = aggregate(rows, Grouping::per_epsilon);
    const auto bins = aggregate(rows, Grouping::epsilon_bins);
    for (const auto& r : bins) report.metrics.push_back(r);
    detail::write_reports(cfg.out_dir, "perturb", report);

    std::vector<svg::Series> series;
    for (auto kk : cfg.ks) {
        svg::Series s{"@" + std::to_string(kk), {}};
        for (double eps : cfg.epsilons)
            if (auto m = find_metric(report.metrics, "perturbed", "eps=" + format_real(eps, 2), kk))
                s.points.emplace_back(eps, m->accuracy());
        series.push_back(std::move(s));
    }
    detail::write_text(cfg.out_dir / "perturb_epsilon.svg",
                       svg::line_chart("Sense match vs perturbation", "epsilon (cosine distance)", "accuracy", series),
                       report);
    std::vector<std::pair<std::string, double>> bars;
    for (const auto& b : epsilon_bins())
        if (auto m = find_metric(bins, "perturbed", "bin=" + b.label(), 1)) bars.emplace_back(b.label(), m->accuracy());
    detail::write_text(cfg.out_dir / "perturb_bins.svg",
                       svg::bar_chart("Sense match @1 by epsilon interval", "epsilon interval", "accuracy", bars),
                       report);
    return report;
}

/// Interpolation between the two pseudowords of each minimal pair, coded
/// against both senses' lexicons. Predictions are made in the first
/// member's masked sentence.
inline ExperimentReport run_interpolate(const ModelBundle& bundle, const std::vector<ProbeItem>& all_items,
                                        const LexiconSet& lexicons, const RunConfig& cfg) {
    for (double a : cfg.alphas)
        if (!(a >= 0 && a <= 1)) throw ValidationError("alphas", "every alpha must lie in [0, 1]");
    std::filesystem::create_directories(cfg.out_dir);
    ExperimentReport report;
    const auto items = detail::usable(bundle, select_portion(all_items, Portion::minimal_pairs), report.failures);
    const auto pairs_map = pair_index(items);
    check_pair_lexicons(pairs_map, lexicons);
    std::vector<ItemPair> pairs;
    for (const auto& [pid, p] : pairs_map) pairs.push_back(p);
    if (pairs.empty()) throw ValidationError("interpolate", "no usable minimal pairs; the report would be empty");
    detail::Session session(bundle, cfg);
    std::size_t k = 1;
    for (auto v : cfg.ks) k = std::max(k, v);

    struct Slot {
        std::vector<PredictionSet> preds;
        std::vector<Pseudoword> pws;
        std::optional<Failure> failure;
    };
    std::vector<Slot> slots(pairs.size());
    parallel_for(pairs.size(), cfg.workers, [&](std::size_t i) {
        const auto& pair = pairs[i];
        try {
            const auto za = session.pseudoword({pair.a});
            const auto zb = session.pseudoword({pair.b});
            const auto in = probe_input(bundle, pair.a);
            for (double alpha : cfg.alphas) {
                const auto z = interpolate(za.vector, zb.vector, alpha);
                slots[i].preds.push_back({*pair.a.pair_id, "interpolated", {}, {}, alpha,
                                          masked_topk(bundle, in, std::span<const float>(z), k)});
            }
            slots[i].pws = {za, zb};
        } catch (const Error& e) {
            slots[i].failure = Failure{*pair.a.pair_id, e.what()};
        }
    });
    std::vector<ScoredRow> rows;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (slots[i].failure) report.failures.push_back(*slots[i].failure);
        const auto& la = lexicon_for(lexicons, pairs[i].a);
        const auto& lb = lexicon_for(lexicons, pairs[i].b);
        for (auto& p : slots[i].preds) {
            const auto codes = code_interpolation(p, la, lb);
            for (auto kk : cfg.ks) {
                if (kk > codes.size()) continue;
                std::size_t counts[3] = {0, 0, 0};
                for (std::size_t j = 0; j < kk; ++j) ++counts[static_cast<int>(codes[j])];
                const char* names[3] = {"A", "B", "neither"};
                for (int c = 0; c < 3; ++c)
                    rows.push_back({"interpolated", p.item_id, pairs[i].a.pos, {}, p.alpha, names[c], kk, counts[c], kk});
            }
            report.predictions.push_back(std::move(p));
        }
        for (auto& pw : slots[i].pws) report.pseudowords.push_back(std::move(pw));
    }
    report.metrics = aggregate(rows, Grouping::per_alpha);
    detail::write_reports(cfg.out_dir, "interpolate", report);

    std::vector<svg::Series> layers;
    for (const char* code : {"A", "B", "neither"}) {
        svg::Series s{std::string("sense ") + code, {}};
        if (std::string(code) == "neither") s.name = "neither";
        for (double a : cfg.alphas)
            if (auto m = find_metric(report.metrics, "interpolated",
                                     "alpha=" + format_real(a, 2) + ";code=" + code, 1))
                s.points.emplace_back(a, m->accuracy());
        layers.push_back(std::move(s));
    }
    detail::write_text(cfg.out_dir / "interpolate_top1.svg",
                       svg::stacked_chart("Top-1 sense proportions along the interpolation", "alpha", cfg.alphas,
                                          layers),
                       report);
    return report;
}

/// Transplanting pseudowords to unseen sentences of the same sense:
/// vanilla, post hoc average of single-sentence pseudowords, and one
/// pseudoword induced with the aggregate loss.
inline ExperimentReport run_generalize(const ModelBundle& bundle, const std::vector<ProbeItem>& all_items,
                                       const LexiconSet& lexicons, const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    ExperimentReport report;
    const auto items = detail::usable(bundle, select_portion(all_items, Portion::generalization), report.failures);
    detail::require_items(items, "generalize");
    std::map<std::pair<std::string, std::string>, std::pair<std::vector<ProbeItem>, std::vector<ProbeItem>>> groups;
    for (const auto& i : items) {
        auto& g = groups[{i.focus_word, i.sense_id}];
        (i.split == Split::train ? g.first : g.second).push_back(i);
    }
    std::vector<std::pair<std::vector<ProbeItem>, std::vector<ProbeItem>>> work;
    for (auto& [key, g] : groups)
        if (!g.first.empty() && !g.second.empty()) work.push_back(std::move(g));
    if (work.empty()) throw ValidationError("generalize", "no sense has both train and test items");
    detail::Session session(bundle, cfg);
    std::size_t k = 1;
    for (auto v : cfg.ks) k = std::max(k, v);

    // Per-train-item inductions and per-group aggregate inductions are all
    // independent tasks.
    std::vector<std::vector<ProbeItem>> tasks;
    for (const auto& [train, test] : work) {
        tasks.push_back(train);
        for (const auto& t : train) tasks.push_back({t});
    }
    std::vector<std::optional<Pseudoword>> results(tasks.size());
    std::vector<std::optional<Failure>> task_failures(tasks.size());
    parallel_for(tasks.size(), cfg.workers, [&](std::size_t i) {
        try {
            results[i] = session.pseudoword(tasks[i]);
        } catch (const InductionError& e) {
            task_failures[i] = Failure{detail::join_ids([&] {
                                           std::vector<std::string> ids;
                                           for (const auto& t : tasks[i]) ids.push_back(t.id);
                                           return ids;
                                       }()),
                                       e.what()};
        }
    });
    for (const auto& f : task_failures)
        if (f) report.failures.push_back(*f);

    std::vector<ScoredRow> rows;
    std::size_t cursor = 0;
    for (const auto& [train, test] : work) {
        const auto& agg = results[cursor];
        std::vector<Pseudoword> singles;
        for (std::size_t j = 0; j < train.size(); ++j)
            if (results[cursor + 1 + j]) singles.push_back(*results[cursor + 1 + j]);
        cursor += 1 + train.size();
        std::optional<Vector> posthoc;
        if (!singles.empty()) posthoc = posthoc_average(singles);
        std::set<std::string> used;
        if (agg) used.insert(agg->source_ids.begin(), agg->source_ids.end());
        for (const auto& s : singles) used.insert(s.source_ids.begin(), s.source_ids.end());
        for (const auto& t : test)
            if (used.count(t.id)) throw ValidationError(t.id, "test item used during induction");

        for (const auto& t : test) {
            const auto in = probe_input(bundle, t);
            const auto& lex = lexicon_for(lexicons, t);
            std::vector<PredictionSet> preds{{t.id, "vanilla", {}, {}, {}, masked_topk(bundle, in, std::nullopt, k)}};
            if (posthoc)
                preds.push_back({t.id, "posthoc", {}, {}, {},
                                 masked_topk(bundle, in, std::span<const float>(*posthoc), k)});
            if (agg)
                preds.push_back({t.id, "aggregate", {}, {}, {},
                                 masked_topk(bundle, in, std::span<const float>(agg->vector), k)});
            for (auto& p : preds) {
                detail::score_sense(p, t, lex, cfg.ks, rows);
                report.predictions.push_back(std::move(p));
            }
        }
        if (agg) report.pseudowords.push_back(*agg);
    }
    report.metrics = aggregate(rows, Grouping::pos);
    detail::write_reports(cfg.out_dir, "generalize", report);
    return report;
}

/// Random input vectors in place of the focus embedding.
inline ExperimentReport run_baseline(const ModelBundle& bundle, const std::vector<ProbeItem>& all_items,
                                     const LexiconSet& lexicons, const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    ExperimentReport report;
    const auto items = detail::usable(bundle, select_portion(all_items, Portion::basic), report.failures);
    detail::require_items(items, "baseline");
    // One task per item; each item's draws come from its own streams.
    std::vector<MetricRow> per_item(items.size());
    std::vector<std::vector<PredictionSet>> preds(items.size());
    parallel_for(items.size(), cfg.workers, [&](std::size_t i) {
        per_item[i] = random_baseline(bundle, {items[i]}, lexicons, cfg.baseline_draws, cfg.seed, &preds[i]);
    });
    MetricRow total{"random", "all", 1, 0, 0};
    for (std::size_t i = 0; i < items.size(); ++i) {
        total.numerator += per_item[i].numerator;
        total.denominator += per_item[i].denominator;
        for (auto& p : preds[i]) report.predictions.push_back(std::move(p));
    }
    report.metrics.push_back(total);
    detail::write_reports(cfg.out_dir, "baseline", report);
    return report;
}

/// Induces pseudowords for every usable item of a portion and records
/// their distances to the static embeddings.
inline ExperimentReport run_induce(const ModelBundle& bundle, const std::vector<ProbeItem>& all_items, Portion portion,
                                   const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    ExperimentReport report;
    const auto items = detail::usable(bundle, select_portion(all_items, portion), report.failures);
    detail::require_items(items, "induce");
    detail::Session session(bundle, cfg);
    std::vector<std::optional<Pseudoword>> results(items.size());
    std::vector<std::optional<Failure>> failures(items.size());
    parallel_for(items.size(), cfg.workers, [&](std::size_t i) {
        try {
            results[i] = session.pseudoword({items[i]});
        } catch (const InductionError& e) {
            failures[i] = Failure{items[i].id, e.what()};
        }
    });
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (results[i]) report.pseudowords.push_back(*results[i]);
        if (failures[i]) report.failures.push_back(*failures[i]);
    }
    std::ostringstream rows;
    rows << "item,final_loss,relative_loss,decode_rank,steps_used\n";
    for (const auto& pw : report.pseudowords)
        rows << detail::join_ids(pw.source_ids) << ',' << format_real(pw.final_loss, 9) << ','
             << format_real(pw.target_norm_sq > 0 ? pw.final_loss / pw.target_norm_sq : 0.0, 9) << ','
             << pw.decode_rank << ',' << pw.steps_used << '\n';
    detail::write_text(cfg.out_dir / "induce_losses.csv", rows.str(), report);
    if (!report.pseudowords.empty()) {
        std::ostringstream d;
        write_distance_csv(d, distance_report(report.pseudowords, bundle));
        detail::write_text(cfg.out_dir / "induce_distances.csv", d.str(), report);
    }
    return report;
}

}  // namespace mapp
