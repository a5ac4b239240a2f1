#pragma once

/// @file digest.hpp
/// FNV-1a 64-bit content digests, rendered as 16 hex chars. Used for prompt
/// slot digests and run-manifest file fingerprints; not cryptographic.

#include <cstdint>
#include <cstdio>
#include <string>

namespace ctxcast {

inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string digest_hex(const std::string& content) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(content.data(), content.size())));
    return buf;
}

}  // namespace ctxcast
