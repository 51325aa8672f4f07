#pragma once

// JSON-lines store of induced pseudowords. Vectors are kept as base64 of
// their little-endian float32 bytes so they reload bit-exactly.

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <sodium.h>

#include "json.hpp"
#include "mapp/errors.hpp"
#include "mapp/induction.hpp"

namespace mapp {

static_assert(std::endian::native == std::endian::little, "vector encoding assumes a little-endian host");

inline std::string encode_vector(const Vector& v) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(v.data());
    const std::size_t n = v.size() * sizeof(float);
    std::string out(sodium_base64_encoded_len(n, sodium_base64_VARIANT_ORIGINAL), '\0');
    sodium_bin2base64(out.data(), out.size(), bytes, n, sodium_base64_VARIANT_ORIGINAL);
    out.resize(std::strlen(out.c_str()));
    return out;
}

inline Vector decode_vector(const std::string& text, std::size_t dim) {
    Vector v(dim);
    std::size_t written = 0;
    if (sodium_base642bin(reinterpret_cast<unsigned char*>(v.data()), dim * sizeof(float), text.data(), text.size(),
                          nullptr, &written, nullptr, sodium_base64_VARIANT_ORIGINAL) != 0 ||
        written != dim * sizeof(float))
        throw FormatError("pseudoword vector is not valid base64 of " + std::to_string(dim) + " floats");
    return v;
}

inline nlohmann::json pseudoword_to_json(const std::string& key, const Pseudoword& pw) {
    return {{"key", key},
            {"source_ids", pw.source_ids},
            {"focus_word", pw.focus_word},
            {"sense_id", pw.sense_id},
            {"dim", pw.vector.size()},
            {"vector", encode_vector(pw.vector)},
            {"final_loss", pw.final_loss},
            {"init_losses", pw.init_losses},
            {"target_norm_sq", pw.target_norm_sq},
            {"decode_rank", pw.decode_rank},
            {"steps_used", pw.steps_used}};
}

inline std::pair<std::string, Pseudoword> pseudoword_from_json(const nlohmann::json& j) {
    try {
        Pseudoword pw;
        pw.source_ids = j.at("source_ids").get<std::vector<std::string>>();
        pw.focus_word = j.at("focus_word").get<std::string>();
        pw.sense_id = j.at("sense_id").get<std::string>();
        pw.vector = decode_vector(j.at("vector").get<std::string>(), j.at("dim").get<std::size_t>());
        pw.final_loss = j.at("final_loss").get<double>();
        pw.init_losses = j.at("init_losses").get<std::vector<double>>();
        pw.target_norm_sq = j.at("target_norm_sq").get<double>();
        pw.decode_rank = j.at("decode_rank").get<std::size_t>();
        pw.steps_used = j.at("steps_used").get<std::size_t>();
        return {j.at("key").get<std::string>(), std::move(pw)};
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed pseudoword record: ") + e.what());
    }
}

/// Pseudowords keyed by a caller-chosen string (see experiments.hpp for the
/// key scheme). Appends are written through to the file immediately, so an
/// interrupted run keeps everything induced so far. Thread-safe.
class PseudowordStore {
public:
    PseudowordStore() = default;

    explicit PseudowordStore(std::filesystem::path path) : path_(std::move(path)) {
        if (sodium_init() < 0) throw Error("libsodium failed to initialize");
        std::ifstream in(path_);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error&) {
                continue;  // a torn final line from an interrupted run
            }
            auto [key, pw] = pseudoword_from_json(j);
            entries_.insert_or_assign(std::move(key), std::move(pw));
        }
    }

    std::optional<Pseudoword> find(const std::string& key) const {
        std::lock_guard lock(mutex_);
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    void put(const std::string& key, const Pseudoword& pw) {
        std::lock_guard lock(mutex_);
        entries_.insert_or_assign(key, pw);
        if (path_.empty()) return;
        std::ofstream out(path_, std::ios::app);
        if (!out) throw Error("cannot append to pseudoword store " + path_.string());
        out << pseudoword_to_json(key, pw).dump() << '\n';
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return entries_.size();
    }

    std::map<std::string, Pseudoword> entries() const {
        std::lock_guard lock(mutex_);
        return entries_;
    }

private:
    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::map<std::string, Pseudoword> entries_;
};

}  // namespace mapp
