#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gdsal {

/// Derives an independent sub-stream seed from a root seed, a stream name and
/// an optional index (splitmix64 over an FNV-1a hash of the name).
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                          std::uint64_t index = 0);

inline std::mt19937_64 make_rng(std::uint64_t root, std::string_view stream,
                                std::uint64_t index = 0) {
  return std::mt19937_64(derive_seed(root, stream, index));
}

}  // namespace gdsal
