#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace bmi {

// 64-bit FNV-1a. Stable across platforms and runs, used for content hashes
// stored in file headers.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

std::string hex_digest(std::uint64_t h);

inline std::string content_hash(std::string_view bytes) { return hex_digest(fnv1a(bytes)); }

}  // namespace bmi
