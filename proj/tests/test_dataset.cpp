#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mapp/dataset.hpp"
#include "mapp/toy_corpus.hpp"
#include "test_util.hpp"

namespace mapp {
namespace {

namespace fs = std::filesystem;

const fs::path kData = MAPP_DATA_DIR;

ProbeItem item(const std::string& id, std::vector<std::string> tokens, std::size_t focus, std::size_t cue,
               const std::string& sense) {
    ProbeItem i;
    i.id = id;
    i.portion = Portion::minimal_pairs;
    i.tokens = std::move(tokens);
    i.focus_index = focus;
    i.cue_index = cue;
    i.focus_word = i.tokens[focus];
    i.sense_id = sense;
    i.pair_id = "p";
    return i;
}

std::string expect_validation_error(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ValidationError& e) {
        return e.what();
    }
    ADD_FAILURE() << "expected ValidationError";
    return {};
}

TEST(Items, InvariantsAreChecked) {
    auto ok = item("x1", {"The", "event", "is", "in", "October", "."}, 3, 4, "in.temporal");
    EXPECT_NO_THROW(validate_item(ok));
    auto bad = ok;
    bad.cue_index = 3;
    EXPECT_NE(expect_validation_error([&] { validate_item(bad); }).find("x1"), std::string::npos);
    bad = ok;
    bad.focus_index = 9;
    EXPECT_THROW(validate_item(bad), ValidationError);
    bad = ok;
    bad.focus_word = "on";
    EXPECT_THROW(validate_item(bad), ValidationError);
    bad = ok;
    bad.pair_id.reset();
    EXPECT_THROW(validate_item(bad), ValidationError);
    bad = ok;
    bad.portion = Portion::generalization;
    EXPECT_THROW(validate_item(bad), ValidationError);
    bad.split = Split::test;
    EXPECT_NO_THROW(validate_item(bad));
}

TEST(Items, JsonLinesRoundTrip) {
    auto a = item("x1", {"I", "ate", "salad", "with", "a", "knife", "."}, 3, 5, "with.instrument");
    a.flagged_index = 4;
    a.pos = "preposition";
    std::stringstream ss;
    ss << item_to_json(a).dump() << "\n\n";
    const auto items = parse_items(ss);
    ASSERT_EQ(items.size(), 1u);
    EXPECT_EQ(item_to_json(items[0]), item_to_json(a));
}

TEST(Items, DuplicateIdsAndMalformedLinesAreRejected) {
    const auto j = item_to_json(item("x1", {"a", "b"}, 0, 1, "s")).dump();
    std::stringstream dup(j + "\n" + j + "\n");
    EXPECT_THROW(parse_items(dup), ValidationError);
    std::stringstream broken("{\"id\": \"x9\", \"tokens\": []}\n");
    EXPECT_THROW(parse_items(broken), ValidationError);
}

TEST(Pairs, IndexAndContrastingSenses) {
    const std::vector<ProbeItem> items{item("a", {"The", "event", "is", "in", "October", "."}, 3, 4, "in.temporal"),
                                       item("b", {"The", "event", "is", "in", "London", "."}, 3, 4, "in.locative")};
    const auto pairs = pair_index(items);
    ASSERT_EQ(pairs.size(), 1u);
    EXPECT_EQ(pairs.at("p").a.sense_id, "in.temporal");
    EXPECT_EQ(pairs.at("p").b.sense_id, "in.locative");
}

TEST(Pairs, StructuralViolationsAreRejected) {
    const auto a = item("a", {"I", "had", "slept", "."}, 1, 2, "had.aux");
    auto b = item("b", {"I", "had", "pizza", "."}, 1, 2, "had.food");
    EXPECT_NO_THROW(pair_index({a, b}));

    auto other_focus = item("b", {"I", "ate", "pizza", "."}, 1, 2, "had.food");
    EXPECT_THROW(pair_index({a, other_focus}), ValidationError);
    EXPECT_THROW(pair_index({a}), ValidationError);
    auto same_sense = b;
    same_sense.sense_id = "had.aux";
    EXPECT_THROW(pair_index({a, same_sense}), ValidationError);
    auto other_subject = item("b", {"We", "had", "pizza", "."}, 1, 2, "had.food");
    EXPECT_THROW(pair_index({a, other_subject}), ValidationError);
    other_subject.flagged_index = 0;
    EXPECT_NO_THROW(pair_index({a, other_subject}));
}

TEST(Pairs, LexiconsMustBeDisjoint) {
    const auto pairs = pair_index({item("a", {"I", "had", "slept", "."}, 1, 2, "had.aux"),
                                   item("b", {"I", "had", "pizza", "."}, 1, 2, "had.food")});
    LexiconSet lex{{"had.aux", {"had.aux", {"slept", "gone"}}}, {"had.food", {"had.food", {"pizza", "gone"}}}};
    EXPECT_THROW(check_pair_lexicons(pairs, lex), ValidationError);
    lex.at("had.food").words.erase("gone");
    EXPECT_NO_THROW(check_pair_lexicons(pairs, lex));
}

TEST(Lexicons, CaseInsensitiveAndValidated) {
    const auto lex = lexicons_from_json(nlohmann::json::parse(R"({"on.temporal": ["Monday", "friday"]})"));
    EXPECT_TRUE(lex.at("on.temporal").contains("MONDAY"));
    EXPECT_TRUE(lex.at("on.temporal").contains("Friday"));
    EXPECT_FALSE(lex.at("on.temporal").contains("table"));
    EXPECT_THROW(lexicons_from_json(nlohmann::json::parse(R"({"x": []})")), ValidationError);
    EXPECT_THROW(lexicons_from_json(nlohmann::json::parse(R"(["x"])")), ValidationError);
}

TEST(ProbeInputs, SinglePieceFocusAndCue) {
    const Vocabulary v({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "i", "had", "pi", "##zza", "slept", "."});
    auto cfg = testing::small_config();
    cfg.vocab_size = v.size();
    const ModelBundle bundle(cfg, random_weights(cfg, 1, 0.1), v, TokenizerMode::wordpiece);
    auto ok = item("ok", {"I", "had", "slept", "."}, 1, 2, "had.aux");
    const auto in = probe_input(bundle, ok);
    EXPECT_EQ(in.focus, 2u);
    EXPECT_EQ(in.cue, 3u);
    const auto split = item("split", {"I", "had", "pizza", "."}, 1, 2, "had.food");
    EXPECT_NE(expect_validation_error([&] { probe_input(bundle, split); }).find("2 pieces"), std::string::npos);
    const auto unknown = item("unk", {"I", "had", "xyz", "."}, 1, 2, "had.food");
    EXPECT_NE(expect_validation_error([&] { probe_input(bundle, unknown); }).find("unknown"), std::string::npos);
    const auto usable = unusable_items(bundle, {ok, split, unknown});
    ASSERT_EQ(usable.size(), 2u);
    EXPECT_EQ(usable[0].first, "split");
}

TEST(Import, RawAnnotatedFormat) {
    std::stringstream raw(
        "# comment\n"
        "p1-a\tminimal_pairs\twith.feeling\tI ate salad *with* {much} [enjoyment] .\tp1\t\tpreposition\n"
        "g1\tgeneralization\thad.food\tI *had* [pizza] .\t\ttest\n");
    const auto items = import_raw(raw);
    ASSERT_EQ(items.size(), 2u);
    EXPECT_EQ(items[0].tokens, (std::vector<std::string>{"I", "ate", "salad", "with", "much", "enjoyment", "."}));
    EXPECT_EQ(items[0].focus_index, 3u);
    EXPECT_EQ(items[0].cue_index, 5u);
    EXPECT_EQ(items[0].flagged_index, std::optional<std::size_t>(4));
    EXPECT_EQ(items[0].pos, "preposition");
    EXPECT_EQ(items[1].split, std::optional<Split>(Split::test));
    std::stringstream no_cue("x\tbasic\ts\tI *had* pizza .\n");
    EXPECT_THROW(import_raw(no_cue), ValidationError);
}

TEST(Bundled, PortionCountsAndShape) {
    const auto items = load_items(kData / "mapp_dataset.jsonl");
    const auto lexicons = load_lexicons(kData / "lexicons.json");
    const auto counts = portion_counts(items);
    EXPECT_EQ(counts.at(Portion::basic), 94u);
    EXPECT_EQ(counts.at(Portion::minimal_pairs), 80u);
    EXPECT_EQ(counts.at(Portion::generalization), 138u);

    std::set<std::string> basic_words;
    for (const auto& i : select_portion(items, Portion::basic)) basic_words.insert(i.focus_word);
    EXPECT_EQ(basic_words.size(), 8u);

    const auto pairs = pair_index(select_portion(items, Portion::minimal_pairs));
    EXPECT_EQ(pairs.size(), 40u);
    EXPECT_NO_THROW(check_pair_lexicons(pairs, lexicons));
    std::set<std::string> pair_words, pair_senses;
    for (const auto& [id, p] : pairs) {
        pair_words.insert(p.a.focus_word);
        pair_senses.insert(p.a.sense_id);
        pair_senses.insert(p.b.sense_id);
    }
    EXPECT_EQ(pair_words.size(), 7u);
    EXPECT_EQ(pair_senses.size(), 16u);

    std::map<std::string, std::pair<int, int>> splits;
    for (const auto& i : select_portion(items, Portion::generalization))
        (*i.split == Split::train ? splits[i.sense_id].first : splits[i.sense_id].second)++;
    EXPECT_EQ(splits.size(), 6u);
    for (const auto& [sense, s] : splits) {
        EXPECT_EQ(s.first, 14) << sense;
        EXPECT_EQ(s.second, 9) << sense;
    }
    for (const auto& i : items) {
        EXPECT_TRUE(lexicon_for(lexicons, i).contains(i.tokens[i.cue_index])) << i.id;
        EXPECT_FALSE(i.pos.empty()) << i.id;
    }
}

TEST(Bundled, RawFileImportsToTheShippedItems) {
    std::ifstream raw(kData / "mapp_dataset.tsv");
    ASSERT_TRUE(raw);
    const auto imported = import_raw(raw);
    const auto shipped = load_items(kData / "mapp_dataset.jsonl");
    ASSERT_EQ(imported.size(), shipped.size());
    for (std::size_t n = 0; n < shipped.size(); ++n) EXPECT_EQ(item_to_json(imported[n]), item_to_json(shipped[n]));
}

TEST(Toy, LexiconsPartitionTheCues) {
    ToyCorpusSpec spec;
    spec.num_relations = 1;
    spec.cue_class_size = 20;
    spec.corpus_size = 2000;
    const auto data = gen_toy(spec);
    ASSERT_EQ(data.lexicons.size(), 2u);
    for (const auto& s : data.corpus) {
        if (s[1] != toy_relation(0)) continue;
        int hits = 0;
        for (const auto& [id, lex] : data.lexicons) hits += lex.contains(s[2]);
        EXPECT_EQ(hits, 1);
    }
    for (const auto& i : data.items) EXPECT_TRUE(lexicon_for(data.lexicons, i).contains(i.tokens[i.cue_index]));
    EXPECT_EQ(pair_index(select_portion(data.items, Portion::minimal_pairs)).size(), spec.pairs_per_relation);
}

TEST(Toy, DeterministicPerSeed) {
    ToyCorpusSpec spec;
    spec.corpus_size = 500;
    const auto a = gen_toy(spec);
    const auto b = gen_toy(spec);
    EXPECT_EQ(a.corpus, b.corpus);
    spec.seed = 1;
    EXPECT_NE(gen_toy(spec).corpus, a.corpus);
}

TEST(Toy, CueDistributionIsUniform) {
    ToyCorpusSpec spec;
    spec.num_relations = 1;
    spec.num_distractors = 0;
    spec.cue_class_size = 5;
    spec.corpus_size = 50000;
    const auto data = gen_toy(spec);
    std::map<std::string, std::size_t> counts;
    for (const auto& s : data.corpus) ++counts[s[2]];
    ASSERT_EQ(counts.size(), 10u);
    for (const auto& [cue, n] : counts) EXPECT_NEAR(double(n) / 50000.0, 0.1, 0.02) << cue;
    // Per (relation, sense) the share of each cue within its class.
    for (std::size_t s = 0; s < 2; ++s) {
        double total = 0;
        for (std::size_t j = 0; j < 5; ++j) total += double(counts[toy_cue(0, s, j)]);
        for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(counts[toy_cue(0, s, j)] / total, 0.2, 0.02);
    }
}

TEST(Toy, GeneralizationSplitsAndTemplates) {
    ToyCorpusSpec spec;
    spec.templates = {"SUBJ REL CUE .", "yesterday SUBJ REL the CUE ."};
    spec.corpus_size = 200;
    const auto data = gen_toy(spec);
    std::size_t train = 0, test = 0;
    for (const auto& i : select_portion(data.items, Portion::generalization)) (*i.split == Split::train ? train : test)++;
    EXPECT_EQ(train, 14u * 4);
    EXPECT_EQ(test, 9u * 4);
    spec.templates = {"SUBJ CUE ."};
    EXPECT_THROW(gen_toy(spec), ValidationError);
}

}  // namespace
}  // namespace mapp
