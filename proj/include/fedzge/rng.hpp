#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fedzge {

using Rng = std::mt19937_64;

/// Deterministic child seed for a labeled stream (e.g. "client/init", 3).
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t master, std::string_view label, std::uint64_t index = 0) {
  return Rng(derive_seed(master, label, index));
}

}  // namespace fedzge
