#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "mapp/mlm.hpp"
#include "mapp/model.hpp"
#include "test_util.hpp"

namespace mapp {
namespace {

namespace fs = std::filesystem;
using testing::random_bundle;
using testing::small_config;

fs::path temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("mapp_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

TEST(Archive, EncodeDecodeRoundTrip) {
    TensorArchive a;
    a.add("x", {2, 3}, {1, 2, 3, 4, 5, 6});
    a.add("y", {1}, {-0.5f});
    const auto bytes = encode_archive(a);
    const auto b = decode_archive(bytes);
    ASSERT_EQ(b.size(), 2u);
    EXPECT_EQ(b.find("x")->values, a.find("x")->values);
    EXPECT_EQ(b.find("x")->dims, (std::vector<std::uint64_t>{2, 3}));
    EXPECT_EQ(b.find("y")->values[0], -0.5f);
}

TEST(Archive, RejectsBadMagicAndTruncation) {
    TensorArchive a;
    a.add("x", {4}, {1, 2, 3, 4});
    auto bytes = encode_archive(a);
    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(decode_archive(bad), FormatError);
    bytes.resize(bytes.size() - 3);
    EXPECT_THROW(decode_archive(bytes), FormatError);
    EXPECT_THROW(decode_archive(std::vector<char>{}), FormatError);
}

TEST(Archive, RejectsDuplicateNamesAndShapeMismatch) {
    TensorArchive a;
    a.add("x", {1}, {1});
    EXPECT_THROW(a.add("x", {1}, {2}), FormatError);
    EXPECT_THROW(a.add("z", {2, 2}, {1, 2, 3}), FormatError);
}

TEST(Vocabulary, SpecialTokensComeFirst) {
    EXPECT_THROW(Vocabulary({"a", "b", "c", "d", "e", "f"}), ValidationError);
    EXPECT_THROW(Vocabulary({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "a", "a"}), ValidationError);
    const Vocabulary v({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "a"});
    EXPECT_EQ(v.find("a"), TokenId(5));
    EXPECT_FALSE(v.find("b"));
    EXPECT_TRUE(Vocabulary::is_special(Vocabulary::mask()));
}

TEST(Tokenizer, ClosedVocabularyRejectsUnknownWords) {
    const Vocabulary v({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "the", "event"});
    const auto seq = tokenize(v, TokenizerMode::closed_whitespace, "the event");
    EXPECT_EQ(seq.ids, (std::vector<TokenId>{2, 5, 6, 3}));
    EXPECT_EQ(seq.word_starts, (std::vector<std::size_t>{1, 2}));
    try {
        tokenize(v, TokenizerMode::closed_whitespace, "the party");
        FAIL() << "expected VocabularyError";
    } catch (const VocabularyError& e) {
        EXPECT_EQ(e.word(), "party");
    }
}

TEST(Tokenizer, SubwordGreedyLongestMatch) {
    const Vocabulary v({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "un", "##aff", "##able", "unaff", "i", "had", "."});
    const auto seq = tokenize(v, TokenizerMode::wordpiece, "unaffable");
    EXPECT_EQ(seq.pieces, (std::vector<std::string>{"[CLS]", "unaff", "##able", "[SEP]"}));
    EXPECT_EQ(seq.word_length(0), 2u);
    EXPECT_EQ(detokenize(seq), "unaffable");
    // Punctuation splits off, an uncased vocabulary folds case, and an
    // uncoverable word becomes [UNK].
    const auto s2 = tokenize(v, TokenizerMode::wordpiece, "I had xyz.");
    EXPECT_EQ(s2.pieces, (std::vector<std::string>{"[CLS]", "i", "had", "[UNK]", ".", "[SEP]"}));
}

TEST(Model, ConfigValidation) {
    auto cfg = small_config();
    cfg.num_heads = 5;
    EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Model, WriteThenLoadIsBitIdentical) {
    const auto bundle = random_bundle(small_config(), 42);
    const auto dir = temp_dir("roundtrip");
    save_bundle(bundle, dir / "m.pwar", dir / "vocab.txt");
    const auto loaded = load_archive(dir / "m.pwar", dir / "vocab.txt");
    EXPECT_EQ(loaded.config().num_heads, bundle.config().num_heads);
    EXPECT_EQ(loaded.config().layernorm_epsilon, bundle.config().layernorm_epsilon);
    EXPECT_EQ(loaded.config().num_layers, bundle.config().num_layers);
    EXPECT_EQ(weight_checksum(loaded.weights()), weight_checksum(bundle.weights()));
    EXPECT_TRUE(loaded.config().head_tied);
    EXPECT_EQ(loaded.vocab(), bundle.vocab());
    EXPECT_EQ(loaded.tokenizer_mode(), TokenizerMode::closed_whitespace);
}

TEST(Model, MissingTensorNamesTheTensor) {
    const auto bundle = random_bundle(small_config(), 3);
    const auto full = to_archive(bundle.config(), bundle.weights());
    TensorArchive partial;
    for (const auto& e : full.entries())
        if (e.name != "encoder.1.ffn.out.bias") partial.add(e.name, e.dims, e.values);
    try {
        bundle_from_archive(partial, bundle.vocab(), TokenizerMode::closed_whitespace);
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.tensor(), "encoder.1.ffn.out.bias");
    }
}

TEST(Model, MisshapedTensorIsRejected) {
    const auto bundle = random_bundle(small_config(), 3);
    const auto full = to_archive(bundle.config(), bundle.weights());
    TensorArchive bad;
    for (const auto& e : full.entries()) {
        if (e.name == "head.transform.weight")
            bad.add(e.name, {e.dims[0] / 2, e.dims[1] * 2}, e.values);
        else
            bad.add(e.name, e.dims, e.values);
    }
    EXPECT_THROW(bundle_from_archive(bad, bundle.vocab(), TokenizerMode::closed_whitespace), SchemaError);
}

TEST(Model, VocabularySizeMustMatchEmbeddings) {
    const auto bundle = random_bundle(small_config(), 3);
    EXPECT_THROW(ModelBundle(bundle.config(), bundle.weights(), testing::synthetic_vocab(10),
                             TokenizerMode::closed_whitespace),
                 Error);
}

TEST(Model, UntiedHeadSurvivesRoundTrip) {
    auto cfg = small_config();
    auto w = random_weights(cfg, 9, 0.1);
    w.decoder_weight.flat()[0] += 1.0f;
    cfg.head_tied = false;
    const ModelBundle bundle(cfg, w, testing::synthetic_vocab(cfg.vocab_size), TokenizerMode::closed_whitespace);
    const auto loaded = bundle_from_archive(to_archive(cfg, w), bundle.vocab(), TokenizerMode::closed_whitespace);
    EXPECT_FALSE(loaded.config().head_tied);
    EXPECT_EQ(weight_checksum(loaded.weights()), weight_checksum(w));
}

}  // namespace
}  // namespace mapp
