#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "takd/error.hpp"

namespace takd::binio {

template <typename T>
T byteswap_if_big(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        T out;
        std::memcpy(&out, b, sizeof(T));
        return out;
    }
}

/// Writes v in little-endian byte order.
template <typename T>
void write_le(std::ostream& os, T v) {
    const T le = byteswap_if_big(v);
    os.write(reinterpret_cast<const char*>(&le), sizeof(T));
}

/// Reads a little-endian value; throws io_error on truncation.
template <typename T>
T read_le(std::istream& is, const char* what) {
    T v;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw io_error(std::string("truncated read: ") + what);
    return byteswap_if_big(v);
}

/// FNV-1a over a byte string; used for config provenance hashes.
inline std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace takd::binio
