#pragma once

#include <cstdint>

namespace structmap {

// splitmix64 finalizer
inline std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream seed for a (base seed, stream tag, index) triple.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag,
                                 std::uint64_t index = 0) noexcept {
  return mix_seed(mix_seed(mix_seed(base) ^ tag) ^ index);
}

}  // namespace structmap
