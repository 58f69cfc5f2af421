#include "lander/common/rng.hpp"

#include "lander/common/hash.hpp"

namespace lander {
namespace {

// splitmix64 finalizer; decorrelates seeds that differ in few bits.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master_seed, const std::string& stage_label) {
  const std::uint64_t label_hash = fnv1a64(stage_label.data(), stage_label.size());
  return mix64(master_seed ^ mix64(label_hash));
}

}  // namespace lander
