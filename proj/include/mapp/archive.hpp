#pragma once

// PWAR tensor archive.
//
// Layout (all integers little-endian):
//   char[4]  magic "PWAR"
//   u32      version (= 1)
//   u32      entry count
//   entries, each:
//     u32      name length in bytes, then UTF-8 name bytes
//     u32      rank, then rank x u64 dims
//     u32      dtype tag (0 = f32 little-endian)
//     u64      absolute payload offset in bytes
//   payload: row-major f32 values, one contiguous block per entry
//
// Payload blocks must lie inside the file and must not overlap.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mapp/errors.hpp"

namespace mapp {

static_assert(std::endian::native == std::endian::little, "PWAR I/O assumes a little-endian host");

inline constexpr char kArchiveMagic[4] = {'P', 'W', 'A', 'R'};
inline constexpr std::uint32_t kArchiveVersion = 1;
inline constexpr std::uint32_t kDtypeF32 = 0;

struct TensorEntry {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<float> values;

    std::uint64_t element_count() const {
        std::uint64_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

/// Ordered, name-unique collection of f32 tensors.
class TensorArchive {
public:
    void add(std::string name, std::vector<std::uint64_t> dims, std::vector<float> values) {
        if (index_.contains(name)) throw FormatError("duplicate tensor name: " + name);
        TensorEntry entry{std::move(name), std::move(dims), std::move(values)};
        if (entry.element_count() != entry.values.size())
            throw FormatError("tensor " + entry.name + ": payload size does not match dims");
        index_.emplace(entry.name, entries_.size());
        entries_.push_back(std::move(entry));
    }

    bool contains(std::string_view name) const { return index_.find(std::string(name)) != index_.end(); }

    const TensorEntry* find(std::string_view name) const {
        auto it = index_.find(std::string(name));
        return it == index_.end() ? nullptr : &entries_[it->second];
    }

    const std::vector<TensorEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

private:
    std::vector<TensorEntry> entries_;
    std::map<std::string, std::size_t> index_;
};

namespace detail {

template <typename T>
void put(std::vector<char>& out, T value) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    out.insert(out.end(), bytes, bytes + sizeof(T));
}

class ByteReader {
public:
    explicit ByteReader(std::span<const char> bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::string get_string(std::size_t n) {
        need(n);
        std::string s(bytes_.data() + pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t position() const noexcept { return pos_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw FormatError("archive truncated in header");
    }

    std::span<const char> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<char> encode_archive(const TensorArchive& archive) {
    std::vector<char> header(kArchiveMagic, kArchiveMagic + 4);
    detail::put<std::uint32_t>(header, kArchiveVersion);
    detail::put<std::uint32_t>(header, static_cast<std::uint32_t>(archive.size()));

    std::uint64_t header_size = header.size();
    for (const auto& e : archive.entries())
        header_size += 4 + e.name.size() + 4 + 8 * e.dims.size() + 4 + 8;

    std::uint64_t offset = header_size;
    for (const auto& e : archive.entries()) {
        detail::put<std::uint32_t>(header, static_cast<std::uint32_t>(e.name.size()));
        header.insert(header.end(), e.name.begin(), e.name.end());
        detail::put<std::uint32_t>(header, static_cast<std::uint32_t>(e.dims.size()));
        for (auto d : e.dims) detail::put<std::uint64_t>(header, d);
        detail::put<std::uint32_t>(header, kDtypeF32);
        detail::put<std::uint64_t>(header, offset);
        offset += 4 * e.values.size();
    }
    header.reserve(offset);
    for (const auto& e : archive.entries()) {
        const auto* p = reinterpret_cast<const char*>(e.values.data());
        header.insert(header.end(), p, p + 4 * e.values.size());
    }
    return header;
}

inline TensorArchive decode_archive(std::span<const char> bytes) {
    detail::ByteReader in(bytes);
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kArchiveMagic, 4) != 0)
        throw FormatError("bad archive magic");
    in.get_string(4);
    const auto version = in.get<std::uint32_t>();
    if (version != kArchiveVersion)
        throw FormatError("unsupported archive version " + std::to_string(version));
    const auto count = in.get<std::uint32_t>();

    struct Header {
        std::string name;
        std::vector<std::uint64_t> dims;
        std::uint64_t offset;
        std::uint64_t bytes;
    };
    std::vector<Header> headers;
    headers.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Header h;
        h.name = in.get_string(in.get<std::uint32_t>());
        const auto rank = in.get<std::uint32_t>();
        std::uint64_t elements = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            h.dims.push_back(in.get<std::uint64_t>());
            elements *= h.dims.back();
        }
        if (in.get<std::uint32_t>() != kDtypeF32)
            throw FormatError("tensor " + h.name + ": unsupported dtype");
        h.offset = in.get<std::uint64_t>();
        h.bytes = elements * 4;
        headers.push_back(std::move(h));
    }

    const std::uint64_t header_end = in.position();
    std::vector<std::pair<std::uint64_t, std::uint64_t>> spans;
    for (const auto& h : headers) {
        if (h.offset < header_end || h.offset + h.bytes > bytes.size())
            throw FormatError("tensor " + h.name + ": payload outside file");
        spans.emplace_back(h.offset, h.offset + h.bytes);
    }
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i)
        if (spans[i].first < spans[i - 1].second) throw FormatError("overlapping tensor payloads");

    TensorArchive archive;
    for (auto& h : headers) {
        std::vector<float> values(h.bytes / 4);
        std::memcpy(values.data(), bytes.data() + h.offset, h.bytes);
        archive.add(std::move(h.name), std::move(h.dims), std::move(values));
    }
    return archive;
}

inline void write_archive(const std::filesystem::path& path, const TensorArchive& archive) {
    const auto bytes = encode_archive(archive);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + path.string());
}

inline TensorArchive read_archive(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open archive: " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_archive(bytes);
}

}  // namespace mapp
