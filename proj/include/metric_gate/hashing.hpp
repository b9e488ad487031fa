#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mgate {

inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

// 64-bit FNV-1a over the raw bytes of `data`.
constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t state = kFnvOffsetBasis) noexcept {
    for (unsigned char c : data) {
        state ^= c;
        state *= kFnvPrime;
    }
    return state;
}

// Lowercase, zero-padded 16-digit hex.
std::string to_hex64(std::uint64_t value);

}  // namespace mgate
