#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <cereal/archives/portable_binary.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/vector.hpp>

#include "rqe/approx_shannon.hpp"
#include "rqe/core.hpp"
#include "rqe/exact1d.hpp"
#include "rqe/exactnd.hpp"
#include "rqe/sweep1d.hpp"

namespace rqe {

// File layout: "RQEIDX1", u32 format version, u32 index kind (both little
// endian), then a portable-binary payload written by the index's save().

inline constexpr std::array<char, 7> index_magic{'R', 'Q', 'E', 'I', 'D', 'X', '1'};
inline constexpr std::uint32_t index_format_version = 1;

enum class index_kind : std::uint32_t { exact1d = 1, exactnd = 2, sweep1d = 3, sampling = 4 };

inline const char* index_kind_name(index_kind k) {
    switch (k) {
        case index_kind::exact1d: return "exact1d";
        case index_kind::exactnd: return "exactnd";
        case index_kind::sweep1d: return "sweep1d";
        case index_kind::sampling: return "sampling";
    }
    return "unknown";
}

template <class T>
struct index_traits;
template <>
struct index_traits<exact1d_index> {
    static constexpr index_kind kind = index_kind::exact1d;
};
template <>
struct index_traits<exactnd_index> {
    static constexpr index_kind kind = index_kind::exactnd;
};
template <>
struct index_traits<sweep1d_index> {
    static constexpr index_kind kind = index_kind::sweep1d;
};
template <>
struct index_traits<sampling_index> {
    static constexpr index_kind kind = index_kind::sampling;
};

struct index_header {
    std::uint32_t version = 0;
    index_kind kind = index_kind::exact1d;
};

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    const char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff), char((v >> 24) & 0xff)};
    out.write(b, 4);
}

inline bool get_u32(std::istream& in, std::uint32_t& v) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
    v = std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
    return true;
}

}  // namespace detail

/// Reads and checks the fixed header, leaving the stream at the payload.
inline index_header read_index_header(std::istream& in) {
    std::array<char, 7> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != index_magic)
        throw error(error::not_an_index, "missing RQEIDX1 magic");
    index_header h;
    std::uint32_t kind = 0;
    if (!detail::get_u32(in, h.version) || !detail::get_u32(in, kind))
        throw error(error::not_an_index, "truncated index header");
    if (h.version == 0) throw error(error::not_an_index, "invalid format version 0");
    if (h.version > index_format_version)
        throw error(error::unsupported_version,
                    "index format version " + std::to_string(h.version) + " is newer than supported version " +
                        std::to_string(index_format_version));
    if (kind < 1 || kind > 4) throw error(error::not_an_index, "unknown index kind " + std::to_string(kind));
    h.kind = static_cast<index_kind>(kind);
    return h;
}

template <class Index>
void save_index(std::ostream& out, const Index& idx) {
    out.write(index_magic.data(), index_magic.size());
    detail::put_u32(out, index_format_version);
    detail::put_u32(out, static_cast<std::uint32_t>(index_traits<Index>::kind));
    {
        cereal::PortableBinaryOutputArchive ar(out);
        ar(idx);
    }
    if (!out) throw error(error::data_error, "failed to write index");
}

/// Reads the payload of an index whose header was already consumed.
template <class Index>
Index load_index_payload(std::istream& in) {
    Index idx;
    try {
        cereal::PortableBinaryInputArchive ar(in);
        ar(idx);
    } catch (const error&) {
        throw;
    } catch (const std::exception& e) {
        throw error(error::not_an_index, std::string("corrupt or truncated index payload: ") + e.what());
    }
    return idx;
}

template <class Index>
Index load_index(std::istream& in) {
    const index_header h = read_index_header(in);
    if (h.kind != index_traits<Index>::kind)
        throw error(error::index_kind_mismatch, std::string("file holds a ") + index_kind_name(h.kind) + " index, expected " +
                                                    index_kind_name(index_traits<Index>::kind));
    return load_index_payload<Index>(in);
}

template <class Index>
void save_index_file(const std::string& path, const Index& idx) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error(error::data_error, "cannot open " + path + " for writing");
    save_index(out, idx);
}

template <class Index>
Index load_index_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error(error::not_an_index, "cannot open " + path);
    return load_index<Index>(in);
}

}  // namespace rqe
