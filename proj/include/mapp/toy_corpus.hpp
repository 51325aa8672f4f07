#pragma once

// Synthetic closed-vocabulary corpus with ambiguous relation words whose
// sense is fixed by the word in a cue slot.

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mapp/dataset.hpp"
#include "mapp/errors.hpp"
#include "mapp/rng.hpp"
#include "mapp/train.hpp"

namespace mapp {

struct ToyCorpusSpec {
    /// Ambiguous relation words, each with `senses_per_relation` senses.
    std::size_t num_relations = 2;
    std::size_t senses_per_relation = 2;
    /// Unambiguous relation words, each with a cue class of its own.
    std::size_t num_distractors = 12;
    std::size_t cue_class_size = 8;
    std::size_t subject_class_size = 8;
    /// Whitespace-separated templates; SUBJ, REL and CUE are slots, other
    /// words are literals. REL and CUE must appear exactly once.
    std::vector<std::string> templates{"SUBJ REL CUE ."};
    std::size_t corpus_size = 20000;
    std::size_t items_per_sense = 10;
    std::size_t pairs_per_relation = 10;
    std::size_t generalization_train = 14;
    std::size_t generalization_test = 9;
    std::uint64_t seed = 0;
};

struct ToyData {
    std::vector<Sentence> corpus;
    std::vector<ProbeItem> items;
    LexiconSet lexicons;
};

inline std::string toy_relation(std::size_t r) { return "rel" + std::to_string(r); }
inline std::string toy_distractor(std::size_t r) { return "aux" + std::to_string(r); }
inline std::string toy_sense(std::size_t r, std::size_t s) { return toy_relation(r) + "." + std::to_string(s); }
inline std::string toy_cue(std::size_t r, std::size_t s, std::size_t j) {
    return "c" + std::to_string(r) + "_" + std::to_string(s) + "_" + std::to_string(j);
}
inline std::string toy_distractor_cue(std::size_t r, std::size_t j) {
    return "x" + std::to_string(r) + "_" + std::to_string(j);
}
inline std::string toy_subject(std::size_t j) { return "s" + std::to_string(j); }

namespace detail {

struct ToyTemplate {
    std::vector<std::string> words;
    std::size_t rel = 0, cue = 0;
};

inline std::vector<ToyTemplate> parse_templates(const std::vector<std::string>& templates) {
    if (templates.empty()) throw ValidationError("toy spec", "no templates");
    std::vector<ToyTemplate> out;
    for (const auto& t : templates) {
        ToyTemplate tt;
        std::size_t rels = 0, cues = 0;
        std::stringstream ss(t);
        for (std::string w; ss >> w;) {
            if (w == "REL") ++rels, tt.rel = tt.words.size();
            if (w == "CUE") ++cues, tt.cue = tt.words.size();
            tt.words.push_back(w);
        }
        if (rels != 1 || cues != 1)
            throw ValidationError("toy spec", "template '" + t + "' needs exactly one REL and one CUE slot");
        out.push_back(std::move(tt));
    }
    return out;
}

inline Sentence fill(const ToyTemplate& t, const std::string& subj, const std::string& rel, const std::string& cue) {
    Sentence s = t.words;
    for (auto& w : s) {
        if (w == "SUBJ") w = subj;
        else if (w == "REL") w = rel;
        else if (w == "CUE") w = cue;
    }
    return s;
}

}  // namespace detail

/// Corpus, automatically labeled probe items and one lexicon per sense.
/// Deterministic per spec.seed.
inline ToyData gen_toy(const ToyCorpusSpec& spec) {
    if (spec.num_relations == 0) throw ValidationError("toy spec", "need at least one relation");
    if (spec.senses_per_relation < 2) throw ValidationError("toy spec", "relations need at least two senses");
    if (spec.cue_class_size == 0 || spec.subject_class_size == 0)
        throw ValidationError("toy spec", "class sizes must be positive");
    const auto templates = detail::parse_templates(spec.templates);

    ToyData data;
    for (std::size_t r = 0; r < spec.num_relations; ++r)
        for (std::size_t s = 0; s < spec.senses_per_relation; ++s) {
            SenseLexicon lex{toy_sense(r, s), {}};
            for (std::size_t j = 0; j < spec.cue_class_size; ++j) lex.words.insert(toy_cue(r, s, j));
            data.lexicons.emplace(lex.sense_id, std::move(lex));
        }

    // Relation slots: ambiguous relations first, then distractors. Each
    // sentence draws a relation, then one of its senses, then a cue.
    const std::size_t relations = spec.num_relations + spec.num_distractors;
    Rng corpus_rng(derive_seed(spec.seed, "toy-corpus"));
    std::uniform_int_distribution<std::size_t> pick_rel(0, relations - 1);
    std::uniform_int_distribution<std::size_t> pick_sense(0, spec.senses_per_relation - 1);
    std::uniform_int_distribution<std::size_t> pick_cue(0, spec.cue_class_size - 1);
    std::uniform_int_distribution<std::size_t> pick_subj(0, spec.subject_class_size - 1);
    std::uniform_int_distribution<std::size_t> pick_tpl(0, templates.size() - 1);
    data.corpus.reserve(spec.corpus_size);
    for (std::size_t n = 0; n < spec.corpus_size; ++n) {
        const auto r = pick_rel(corpus_rng);
        const auto& tpl = templates[pick_tpl(corpus_rng)];
        const auto subj = toy_subject(pick_subj(corpus_rng));
        if (r < spec.num_relations) {
            const auto s = pick_sense(corpus_rng);
            data.corpus.push_back(detail::fill(tpl, subj, toy_relation(r), toy_cue(r, s, pick_cue(corpus_rng))));
        } else {
            const auto d = r - spec.num_relations;
            data.corpus.push_back(detail::fill(tpl, subj, toy_distractor(d), toy_distractor_cue(d, pick_cue(corpus_rng))));
        }
    }

    Rng item_rng(derive_seed(spec.seed, "toy-items"));
    auto make_item = [&](std::string id, Portion portion, std::size_t r, std::size_t s, const detail::ToyTemplate& tpl,
                         const std::string& subj, const std::string& cue) {
        ProbeItem item;
        item.id = std::move(id);
        item.portion = portion;
        item.tokens = detail::fill(tpl, subj, toy_relation(r), cue);
        item.focus_index = tpl.rel;
        item.cue_index = tpl.cue;
        item.focus_word = toy_relation(r);
        item.sense_id = toy_sense(r, s);
        item.pos = "relation";
        return item;
    };
    for (std::size_t r = 0; r < spec.num_relations; ++r)
        for (std::size_t s = 0; s < spec.senses_per_relation; ++s)
            for (std::size_t i = 0; i < spec.items_per_sense; ++i) {
                const auto& tpl = templates[pick_tpl(item_rng)];
                data.items.push_back(make_item("basic-" + toy_sense(r, s) + "-" + std::to_string(i), Portion::basic, r,
                                               s, tpl, toy_subject(pick_subj(item_rng)),
                                               toy_cue(r, s, pick_cue(item_rng))));
            }
    for (std::size_t r = 0; r < spec.num_relations; ++r)
        for (std::size_t i = 0; i < spec.pairs_per_relation; ++i) {
            const auto& tpl = templates[pick_tpl(item_rng)];
            const auto subj = toy_subject(pick_subj(item_rng));
            const auto pid = "pair-" + toy_relation(r) + "-" + std::to_string(i);
            for (std::size_t s = 0; s < 2; ++s) {
                auto item = make_item(pid + "-" + std::to_string(s), Portion::minimal_pairs, r, s, tpl, subj,
                                      toy_cue(r, s, pick_cue(item_rng)));
                item.pair_id = pid;
                data.items.push_back(std::move(item));
            }
        }
    const auto per_sense = spec.generalization_train + spec.generalization_test;
    for (std::size_t r = 0; r < spec.num_relations; ++r)
        for (std::size_t s = 0; s < spec.senses_per_relation; ++s)
            for (std::size_t i = 0; i < per_sense; ++i) {
                const auto& tpl = templates[pick_tpl(item_rng)];
                auto item = make_item("gen-" + toy_sense(r, s) + "-" + std::to_string(i), Portion::generalization, r, s,
                                      tpl, toy_subject(pick_subj(item_rng)), toy_cue(r, s, pick_cue(item_rng)));
                item.split = i < spec.generalization_train ? Split::train : Split::test;
                data.items.push_back(std::move(item));
            }
    for (const auto& item : data.items) validate_item(item);
    return data;
}

/// Vocabulary size (specials included) needed to train on `corpus`.
inline std::size_t required_vocab_size(const std::vector<Sentence>& corpus) {
    std::unordered_set<std::string> words;
    for (const auto& s : corpus) words.insert(s.begin(), s.end());
    return words.size() + kNumSpecial;
}

}  // namespace mapp
