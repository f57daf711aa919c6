#include "krrlab/random.hpp"

#include <array>

namespace krrlab {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view cell_key, std::uint64_t trial) noexcept {
  // FNV-1a over the cell key, then chained mixing with the master seed and trial.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : cell_key) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return mix64(mix64(mix64(master_seed) ^ h) ^ mix64(trial + 0x632be59bd9b4e019ULL));
}

std::uint64_t substream(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(seed ^ mix64(stream * 0xd1b54a32d192ed03ULL + 1));
}

Engine make_engine(std::uint64_t seed) {
  std::array<std::uint32_t, 4> words{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                                     0x5eed5eedU, 0x1234abcdU};
  std::seed_seq seq(words.begin(), words.end());
  return Engine(seq);
}

}  // namespace krrlab
