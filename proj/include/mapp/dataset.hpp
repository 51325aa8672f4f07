#pragma once

// Probe items, sense lexicons and their on-disk formats.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mapp/errors.hpp"
#include "mapp/mlm.hpp"
#include "mapp/model.hpp"

namespace mapp {

enum class Portion { basic, minimal_pairs, generalization };
enum class Split { train, test };

inline std::string to_string(Portion p) {
    switch (p) {
        case Portion::basic: return "basic";
        case Portion::minimal_pairs: return "minimal_pairs";
        case Portion::generalization: return "generalization";
    }
    return {};
}

inline std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }

inline Portion parse_portion(const std::string& s, const std::string& id = {}) {
    if (s == "basic") return Portion::basic;
    if (s == "minimal_pairs") return Portion::minimal_pairs;
    if (s == "generalization") return Portion::generalization;
    throw ValidationError(id, "unknown portion '" + s + "'");
}

inline Split parse_split(const std::string& s, const std::string& id = {}) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    throw ValidationError(id, "unknown split '" + s + "'");
}

struct ProbeItem {
    std::string id;
    Portion portion = Portion::basic;
    std::vector<std::string> tokens;
    std::size_t focus_index = 0;
    std::size_t cue_index = 0;
    std::string focus_word;
    std::string sense_id;
    std::optional<std::string> pair_id;
    std::optional<Split> split;
    /// Extra slot allowed to differ within a minimal pair (a determiner).
    std::optional<std::size_t> flagged_index;
    /// Part-of-speech group of the focus word ("verb", "preposition"), if known.
    std::string pos;

    std::string sentence() const {
        std::string s;
        for (const auto& t : tokens) s += (s.empty() ? "" : " ") + t;
        return s;
    }
};

inline void validate_item(const ProbeItem& item) {
    const auto fail = [&](const std::string& what) { throw ValidationError(item.id, what); };
    if (item.id.empty()) throw ValidationError("", "item without id");
    if (item.tokens.empty()) fail("empty token list");
    if (item.focus_index >= item.tokens.size()) fail("focus_index out of bounds");
    if (item.cue_index >= item.tokens.size()) fail("cue_index out of bounds");
    if (item.focus_index == item.cue_index) fail("focus_index equals cue_index");
    if (item.tokens[item.focus_index] != item.focus_word)
        fail("focus_word '" + item.focus_word + "' does not match token '" + item.tokens[item.focus_index] + "'");
    if (item.sense_id.empty()) fail("missing sense_id");
    if (item.portion == Portion::generalization && !item.split) fail("generalization item without split");
    if (item.portion == Portion::minimal_pairs && !item.pair_id) fail("minimal-pair item without pair_id");
    if (item.flagged_index) {
        const auto f = *item.flagged_index;
        if (f >= item.tokens.size() || f == item.focus_index || f == item.cue_index)
            fail("flagged_index must be a distinct in-bounds slot");
    }
}

inline nlohmann::json item_to_json(const ProbeItem& item) {
    nlohmann::json j{{"id", item.id},
                     {"portion", to_string(item.portion)},
                     {"tokens", item.tokens},
                     {"focus_index", item.focus_index},
                     {"cue_index", item.cue_index},
                     {"focus_word", item.focus_word},
                     {"sense_id", item.sense_id}};
    if (item.pair_id) j["pair_id"] = *item.pair_id;
    if (item.split) j["split"] = to_string(*item.split);
    if (item.flagged_index) j["flagged_index"] = *item.flagged_index;
    if (!item.pos.empty()) j["pos"] = item.pos;
    return j;
}

inline ProbeItem item_from_json(const nlohmann::json& j) {
    ProbeItem item;
    try {
        item.id = j.at("id").get<std::string>();
        item.portion = parse_portion(j.at("portion").get<std::string>(), item.id);
        item.tokens = j.at("tokens").get<std::vector<std::string>>();
        item.focus_index = j.at("focus_index").get<std::size_t>();
        item.cue_index = j.at("cue_index").get<std::size_t>();
        item.focus_word = j.at("focus_word").get<std::string>();
        item.sense_id = j.at("sense_id").get<std::string>();
        if (j.contains("pair_id")) item.pair_id = j["pair_id"].get<std::string>();
        if (j.contains("split")) item.split = parse_split(j["split"].get<std::string>(), item.id);
        if (j.contains("flagged_index")) item.flagged_index = j["flagged_index"].get<std::size_t>();
        if (j.contains("pos")) item.pos = j["pos"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(item.id, std::string("malformed item: ") + e.what());
    }
    validate_item(item);
    return item;
}

inline std::vector<ProbeItem> parse_items(std::istream& in) {
    std::vector<ProbeItem> items;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError("line " + std::to_string(line_no), e.what());
        }
        auto item = item_from_json(j);
        if (!ids.insert(item.id).second) throw ValidationError(item.id, "duplicate item id");
        items.push_back(std::move(item));
    }
    return items;
}

inline std::vector<ProbeItem> load_items(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(path.string(), "cannot open dataset");
    return parse_items(in);
}

inline void write_items(const std::filesystem::path& path, const std::vector<ProbeItem>& items) {
    std::ofstream out(path);
    if (!out) throw ValidationError(path.string(), "cannot write dataset");
    for (const auto& item : items) out << item_to_json(item).dump() << '\n';
}

inline std::map<Portion, std::size_t> portion_counts(const std::vector<ProbeItem>& items) {
    std::map<Portion, std::size_t> counts;
    for (const auto& i : items) ++counts[i.portion];
    return counts;
}

inline std::vector<ProbeItem> select_portion(const std::vector<ProbeItem>& items, Portion p) {
    std::vector<ProbeItem> out;
    std::copy_if(items.begin(), items.end(), std::back_inserter(out), [&](const auto& i) { return i.portion == p; });
    return out;
}

inline std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    return s;
}

/// Acceptable cue-slot fillers for each sense; words are stored lowercased.
struct SenseLexicon {
    std::string sense_id;
    std::set<std::string> words;

    bool contains(const std::string& word) const { return words.count(lowercase(word)) != 0; }
};

using LexiconSet = std::map<std::string, SenseLexicon>;

inline LexiconSet lexicons_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("lexicons", "expected a JSON object of sense_id -> word list");
    LexiconSet out;
    for (const auto& [sense, words] : j.items()) {
        SenseLexicon lex{sense, {}};
        if (!words.is_array()) throw ValidationError(sense, "lexicon must be a word array");
        for (const auto& w : words) lex.words.insert(lowercase(w.get<std::string>()));
        if (lex.words.empty()) throw ValidationError(sense, "empty lexicon");
        out.emplace(sense, std::move(lex));
    }
    return out;
}

inline nlohmann::json lexicons_to_json(const LexiconSet& lexicons) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [sense, lex] : lexicons) j[sense] = lex.words;
    return j;
}

inline LexiconSet load_lexicons(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(path.string(), "cannot open lexicon file");
    try {
        return lexicons_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string(), e.what());
    }
}

inline void write_lexicons(const std::filesystem::path& path, const LexiconSet& lexicons) {
    std::ofstream out(path);
    if (!out) throw ValidationError(path.string(), "cannot write lexicon file");
    out << lexicons_to_json(lexicons).dump(2) << '\n';
}

inline const SenseLexicon& lexicon_for(const LexiconSet& lexicons, const ProbeItem& item) {
    auto it = lexicons.find(item.sense_id);
    if (it == lexicons.end()) throw ValidationError(item.id, "no lexicon for sense '" + item.sense_id + "'");
    return it->second;
}

struct ItemPair {
    ProbeItem a, b;
};

/// Groups minimal-pair items by pair_id. Members must share the focus word
/// and its position and differ only at the cue slot and the flagged slot.
inline std::map<std::string, ItemPair> pair_index(const std::vector<ProbeItem>& items) {
    std::map<std::string, std::vector<const ProbeItem*>> groups;
    for (const auto& i : items)
        if (i.pair_id) groups[*i.pair_id].push_back(&i);
    std::map<std::string, ItemPair> out;
    for (const auto& [pid, members] : groups) {
        if (members.size() != 2)
            throw ValidationError(pid, "pair has " + std::to_string(members.size()) + " members, expected 2");
        const auto& a = *members[0];
        const auto& b = *members[1];
        if (a.focus_word != b.focus_word) throw ValidationError(pid, "pair members have different focus words");
        if (a.focus_index != b.focus_index || a.cue_index != b.cue_index)
            throw ValidationError(pid, "pair members differ in focus or cue position");
        if (a.tokens.size() != b.tokens.size()) throw ValidationError(pid, "pair members differ in length");
        if (a.sense_id == b.sense_id) throw ValidationError(pid, "pair members share a sense");
        for (std::size_t k = 0; k < a.tokens.size(); ++k) {
            if (k == a.cue_index || a.tokens[k] == b.tokens[k]) continue;
            const bool flagged = (a.flagged_index && *a.flagged_index == k) || (b.flagged_index && *b.flagged_index == k);
            if (!flagged)
                throw ValidationError(pid, "pair members differ at unflagged slot " + std::to_string(k));
        }
        out.emplace(pid, ItemPair{a, b});
    }
    return out;
}

/// Lexicons of the two senses of every pair must be disjoint.
inline void check_pair_lexicons(const std::map<std::string, ItemPair>& pairs, const LexiconSet& lexicons) {
    for (const auto& [pid, pair] : pairs) {
        const auto& la = lexicon_for(lexicons, pair.a);
        const auto& lb = lexicon_for(lexicons, pair.b);
        for (const auto& w : la.words)
            if (lb.words.count(w)) throw ValidationError(pid, "lexicons share the word '" + w + "'");
    }
}

/// Tokenizes an item for a bundle and maps focus and cue to token positions.
/// Focus and cue must each be a single vocabulary piece.
inline ProbeInput probe_input(const ModelBundle& bundle, const ProbeItem& item) {
    TokenSequence seq;
    try {
        seq = bundle.tokenize_words(item.tokens);
    } catch (const VocabularyError& e) {
        throw ValidationError(item.id, e.what());
    }
    for (auto [index, role] : {std::pair{item.focus_index, "focus"}, std::pair{item.cue_index, "cue"}}) {
        const auto pieces = seq.word_length(index);
        if (pieces != 1)
            throw ValidationError(item.id, std::string(role) + " word '" + item.tokens[index] + "' splits into " +
                                               std::to_string(pieces) + " pieces");
        if (seq.ids[seq.word_starts[index]] == Vocabulary::unk())
            throw ValidationError(item.id, std::string(role) + " word '" + item.tokens[index] + "' is unknown");
    }
    if (seq.size() > bundle.config().max_positions)
        throw ValidationError(item.id, "sentence longer than the model's positional table");
    return ProbeInput{seq.ids, seq.word_starts[item.focus_index], seq.word_starts[item.cue_index]};
}

/// Items that fail `probe_input` for a bundle, with the reason.
inline std::vector<std::pair<std::string, std::string>> unusable_items(const ModelBundle& bundle,
                                                                       const std::vector<ProbeItem>& items) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& i : items) {
        try {
            (void)probe_input(bundle, i);
        } catch (const ValidationError& e) {
            out.emplace_back(i.id, e.what());
        }
    }
    return out;
}

/// Converts the raw annotated format into items. One item per line, tab
/// separated: id, portion, sense_id, sentence, pair_id, split, pos (the last
/// three may be empty or absent). The sentence is whitespace tokenized; the
/// focus word is written *like this*, the cue [like this] and an optional
/// flagged determiner {like this}.
inline std::vector<ProbeItem> import_raw(std::istream& in) {
    std::vector<ProbeItem> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        for (std::string f; std::getline(ss, f, '\t');) fields.push_back(f);
        const auto where = "line " + std::to_string(line_no);
        if (fields.size() < 4) throw ValidationError(where, "expected at least 4 tab-separated fields");
        ProbeItem item;
        item.id = fields[0];
        item.portion = parse_portion(fields[1], item.id);
        item.sense_id = fields[2];
        std::optional<std::size_t> focus, cue;
        std::stringstream words(fields[3]);
        for (std::string w; words >> w;) {
            const auto k = item.tokens.size();
            auto strip = [&](char open, char close) {
                if (w.size() > 2 && w.front() == open && w.back() == close) {
                    w = w.substr(1, w.size() - 2);
                    return true;
                }
                return false;
            };
            if (strip('*', '*')) {
                if (focus) throw ValidationError(item.id, "more than one focus marker");
                focus = k;
            } else if (strip('[', ']')) {
                if (cue) throw ValidationError(item.id, "more than one cue marker");
                cue = k;
            } else if (strip('{', '}')) {
                item.flagged_index = k;
            }
            item.tokens.push_back(w);
        }
        if (!focus || !cue) throw ValidationError(item.id, "sentence needs one *focus* and one [cue] marker");
        item.focus_index = *focus;
        item.cue_index = *cue;
        item.focus_word = item.tokens[*focus];
        if (fields.size() > 4 && !fields[4].empty()) item.pair_id = fields[4];
        if (fields.size() > 5 && !fields[5].empty()) item.split = parse_split(fields[5], item.id);
        if (fields.size() > 6) item.pos = fields[6];
        validate_item(item);
        items.push_back(std::move(item));
    }
    return items;
}

}  // namespace mapp
