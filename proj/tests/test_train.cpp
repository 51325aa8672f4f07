#include <gtest/gtest.h>

#include <set>

#include "mapp/induction.hpp"
#include "mapp/mlm.hpp"
#include "mapp/train.hpp"
#include "toy_fixture.hpp"

namespace mapp {
namespace {

std::vector<Sentence> location_corpus() {
    // "a rel1 LOC ." and "a rel2 TIME ." with disjoint filler classes.
    std::vector<Sentence> corpus;
    for (int rep = 0; rep < 50; ++rep)
        for (int j = 0; j < 4; ++j) {
            corpus.push_back({"a", "rel1", "loc" + std::to_string(j), "."});
            corpus.push_back({"a", "rel2", "time" + std::to_string(j), "."});
        }
    return corpus;
}

ModelConfig tiny_config(std::size_t vocab) {
    ModelConfig cfg;
    cfg.num_layers = 2;
    cfg.hidden_dim = 32;
    cfg.num_heads = 4;
    cfg.ffn_dim = 64;
    cfg.vocab_size = vocab;
    cfg.max_positions = 8;
    return cfg;
}

TEST(Vocabulary, CorpusOrderAndPadding) {
    const auto v = corpus_vocabulary({{"b", "a"}, {"a", "c"}}, 10);
    EXPECT_EQ(v.token(5), "b");
    EXPECT_EQ(v.token(6), "a");
    EXPECT_EQ(v.token(7), "c");
    EXPECT_EQ(v.token(8), "[unused0]");
    EXPECT_THROW(corpus_vocabulary({{"a", "b", "c"}}, 7), ValidationError);
}

TEST(Masking, AlwaysMasksAtLeastOneWord) {
    TrainParams p;
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const auto ex = detail::mask_sentence({2, 7, 3}, p, 10, rng);
        ASSERT_EQ(ex.targets.size(), 1u);
        EXPECT_EQ(ex.targets[0].first, 1u);
        EXPECT_EQ(ex.targets[0].second, 7);
    }
}

TEST(Masking, ReplacementSplitMatchesParameters) {
    TrainParams p;
    Rng rng(2);
    std::size_t masked = 0, random = 0, kept = 0;
    for (int trial = 0; trial < 20000; ++trial) {
        const auto ex = detail::mask_sentence({2, 7, 3}, p, 100, rng);
        const auto id = ex.input[1];
        if (id == Vocabulary::mask()) ++masked;
        else if (id == 7) ++kept;
        else ++random;
    }
    EXPECT_NEAR(masked / 20000.0, 0.8, 0.02);
    // A random replacement can draw the original word back (1 in 95).
    EXPECT_NEAR(random / 20000.0, 0.1 * 94 / 95, 0.02);
    EXPECT_NEAR(kept / 20000.0, 0.1 + 0.1 / 95, 0.02);
}

TEST(TrainToy, OverflowingVocabularyIsAnError) {
    EXPECT_THROW(train_toy(location_corpus(), tiny_config(8), TrainParams{}, 1), ValidationError);
}

TEST(TrainToy, DeterministicPerSeed) {
    const auto corpus = location_corpus();
    const auto cfg = tiny_config(required_vocab_size(corpus));
    TrainParams p;
    p.max_steps = 20;
    p.eval_every = 10;
    const auto a = train_toy(corpus, cfg, p, 3);
    const auto b = train_toy(corpus, cfg, p, 3);
    const auto c = train_toy(corpus, cfg, p, 4);
    EXPECT_EQ(weight_checksum(a.bundle.weights()), weight_checksum(b.bundle.weights()));
    EXPECT_NE(weight_checksum(a.bundle.weights()), weight_checksum(c.bundle.weights()));
    EXPECT_EQ(a.bundle.weights().decoder_weight, a.bundle.weights().word_embeddings);
}

TEST(TrainToy, LearnsTheRelationFillerClass) {
    const auto corpus = location_corpus();
    const auto cfg = tiny_config(required_vocab_size(corpus));
    TrainParams p;
    p.max_steps = 800;
    p.eval_every = 200;
    const auto result = train_toy(corpus, cfg, p, 7);
    const auto& bundle = result.bundle;
    const auto seq = bundle.tokenize_words({"a", "rel1", "loc0", "."});
    const ProbeInput in{seq.ids, 2, 3};
    const auto top = masked_topk(bundle, in, std::nullopt, 1);
    EXPECT_EQ(top[0].word.substr(0, 3), "loc");
    const auto seq2 = bundle.tokenize_words({"a", "rel2", "time0", "."});
    EXPECT_EQ(masked_topk(bundle, ProbeInput{seq2.ids, 2, 3}, std::nullopt, 1)[0].word.substr(0, 4), "time");
}

TEST(TrainToy, FixtureDecodesFocusWordsFromTheirOwnEmbedding) {
    const auto& toy = testing::trained_toy();
    for (const auto& item : toy.data.items) {
        if (item.portion != Portion::basic) continue;
        const auto in = probe_input(toy.bundle, item);
        EXPECT_EQ(decode_rank(toy.bundle, in, toy.bundle.static_embedding(in.ids[in.focus])), 1u) << item.id;
    }
}

TEST(TrainToy, FixtureHeldOutAccuracyNearCeiling) {
    // Subjects and cues are uniform within their classes, so only the
    // relation and the period are predictable: the ceiling is about
    // (1/4 + 1 + 1/4 + 1) / 4.
    const auto& toy = testing::trained_toy();
    EXPECT_GT(toy.report.heldout_accuracy, 0.55);
}

}  // namespace
}  // namespace mapp
