#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mapp/errors.hpp"

namespace mapp {

using TokenId = std::int32_t;

inline constexpr std::string_view kPad = "[PAD]";
inline constexpr std::string_view kUnk = "[UNK]";
inline constexpr std::string_view kCls = "[CLS]";
inline constexpr std::string_view kSep = "[SEP]";
inline constexpr std::string_view kMask = "[MASK]";
inline constexpr std::string_view kSpecialTokens[] = {kPad, kUnk, kCls, kSep, kMask};
inline constexpr std::size_t kNumSpecial = 5;

enum class TokenizerMode { wordpiece, closed_whitespace };

/// Ordered token list; the five special tokens occupy ids 0..4.
class Vocabulary {
public:
    Vocabulary() = default;

    explicit Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
        if (tokens_.size() < kNumSpecial + 1)
            throw ValidationError("", "vocabulary needs the special tokens plus at least one word");
        for (std::size_t i = 0; i < kNumSpecial; ++i)
            if (tokens_[i] != kSpecialTokens[i])
                throw ValidationError("", "vocabulary line " + std::to_string(i) + " must be " +
                                              std::string(kSpecialTokens[i]));
        for (std::size_t i = 0; i < tokens_.size(); ++i)
            if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second)
                throw ValidationError("", "duplicate vocabulary token '" + tokens_[i] + "'");
        for (std::size_t i = kNumSpecial; i < tokens_.size() && !cased_; ++i)
            cased_ = std::any_of(tokens_[i].begin(), tokens_[i].end(), [](unsigned char c) { return std::isupper(c); });
    }

    /// False when no word token contains an uppercase letter; subword
    /// tokenization then lowercases its input.
    bool cased() const noexcept { return cased_; }

    std::size_t size() const noexcept { return tokens_.size(); }
    const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    std::optional<TokenId> find(std::string_view token) const {
        auto it = index_.find(std::string(token));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    static constexpr TokenId pad() { return 0; }
    static constexpr TokenId unk() { return 1; }
    static constexpr TokenId cls() { return 2; }
    static constexpr TokenId sep() { return 3; }
    static constexpr TokenId mask() { return 4; }
    static constexpr bool is_special(TokenId id) { return id >= 0 && id < static_cast<TokenId>(kNumSpecial); }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
    bool cased_ = false;
};

inline Vocabulary read_vocabulary(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open vocabulary: " + path.string());
    std::vector<std::string> tokens;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        tokens.push_back(std::move(line));
    }
    while (!tokens.empty() && tokens.back().empty()) tokens.pop_back();
    return Vocabulary(std::move(tokens));
}

inline void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + path.string());
    for (const auto& t : vocab.tokens()) out << t << '\n';
}

/// Tokenized sentence with [CLS]/[SEP] framing.
struct TokenSequence {
    std::vector<TokenId> ids;
    std::vector<std::string> pieces;
    /// True for pieces that continue the previous word ("##" pieces).
    std::vector<bool> continuation;
    /// For each input word, the index of its first piece in `ids`.
    std::vector<std::size_t> word_starts;

    std::size_t size() const noexcept { return ids.size(); }

    /// Number of pieces covering word `w`.
    std::size_t word_length(std::size_t w) const {
        const std::size_t end = w + 1 < word_starts.size() ? word_starts[w + 1] : ids.size() - 1;
        return end - word_starts[w];
    }
};

namespace detail {

inline bool is_punct(unsigned char c) { return std::ispunct(c) != 0; }

/// Whitespace split, then punctuation split (each ASCII punctuation char is its own word).
inline std::vector<std::string> basic_split(std::string_view text, bool split_punct) {
    std::vector<std::string> words;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) words.push_back(std::move(cur));
        cur.clear();
    };
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            flush();
        } else if (split_punct && c < 0x80 && is_punct(c)) {
            flush();
            words.emplace_back(1, static_cast<char>(c));
        } else {
            cur.push_back(static_cast<char>(c));
        }
    }
    flush();
    return words;
}

}  // namespace detail

/// Greedy leftmost-longest segmentation of one word. Returns an empty list
/// when the word cannot be covered.
inline std::vector<std::pair<TokenId, std::string>> wordpiece_segment(const Vocabulary& vocab,
                                                                      std::string_view word,
                                                                      std::size_t max_chars = 100) {
    std::vector<std::pair<TokenId, std::string>> pieces;
    if (word.size() > max_chars) return pieces;
    std::size_t start = 0;
    while (start < word.size()) {
        std::size_t end = word.size();
        std::optional<TokenId> hit;
        std::string piece;
        while (end > start) {
            piece = std::string(start > 0 ? "##" : "") + std::string(word.substr(start, end - start));
            hit = vocab.find(piece);
            if (hit) break;
            --end;
        }
        if (!hit) return {};
        pieces.emplace_back(*hit, piece);
        start = end;
    }
    return pieces;
}

inline TokenSequence tokenize_words(const Vocabulary& vocab, TokenizerMode mode,
                                    const std::vector<std::string>& words) {
    if (words.empty()) throw ValidationError("", "cannot tokenize empty text");
    TokenSequence seq;
    auto push = [&](TokenId id, std::string piece, bool cont) {
        seq.ids.push_back(id);
        seq.pieces.push_back(std::move(piece));
        seq.continuation.push_back(cont);
    };
    push(Vocabulary::cls(), std::string(kCls), false);
    for (const auto& word : words) {
        seq.word_starts.push_back(seq.ids.size());
        if (mode == TokenizerMode::closed_whitespace) {
            auto id = vocab.find(word);
            if (!id) throw VocabularyError(word);
            push(*id, word, false);
            continue;
        }
        std::string folded = word;
        if (!vocab.cased())
            std::transform(folded.begin(), folded.end(), folded.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        auto pieces = wordpiece_segment(vocab, folded);
        if (pieces.empty()) {
            push(Vocabulary::unk(), std::string(kUnk), false);
            continue;
        }
        for (std::size_t i = 0; i < pieces.size(); ++i)
            push(pieces[i].first, std::move(pieces[i].second), i > 0);
    }
    push(Vocabulary::sep(), std::string(kSep), false);
    return seq;
}

inline TokenSequence tokenize(const Vocabulary& vocab, TokenizerMode mode, std::string_view text) {
    auto words = detail::basic_split(text, mode == TokenizerMode::wordpiece);
    return tokenize_words(vocab, mode, words);
}

/// Joins pieces back into text; "##" pieces attach to the previous piece.
inline std::string detokenize(const TokenSequence& seq) {
    std::string out;
    for (std::size_t i = 0; i < seq.ids.size(); ++i) {
        if (Vocabulary::is_special(seq.ids[i]) && seq.ids[i] != Vocabulary::unk()) continue;
        const auto& p = seq.pieces[i];
        if (seq.continuation[i]) {
            out += p.substr(2);
        } else {
            if (!out.empty()) out += ' ';
            out += p;
        }
    }
    return out;
}

}  // namespace mapp
