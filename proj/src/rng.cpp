#include "uqstream/rng.hpp"

#include <array>

namespace uqstream {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng make_stream(std::uint64_t seed, std::uint64_t replication, Stream stream,
                std::uint64_t stage, std::uint64_t salt) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ replication);
  h = mix64(h ^ static_cast<std::uint64_t>(stream));
  h = mix64(h ^ stage);
  h = mix64(h ^ salt);
  const std::uint64_t g = mix64(h);
  std::array<std::uint32_t, 4> words{
      static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
      static_cast<std::uint32_t>(g), static_cast<std::uint32_t>(g >> 32)};
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

}  // namespace uqstream
