#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace lander {

// FNV-1a 64-bit. Stable across runs and platforms; used for manifest content
// hashes and the offline-purity check, not for security.
std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ull);

std::uint64_t hash_file(const std::string& path);

std::string hash_hex(std::uint64_t h);

}  // namespace lander
