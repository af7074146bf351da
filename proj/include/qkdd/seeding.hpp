#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qkdd {

using Rng = std::mt19937_64;

/// Stable 64-bit mix (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a over the bytes of `tag`.
std::uint64_t hash_tag(std::string_view tag);

/// Child seed for one experiment cell. Depends only on its arguments, so
/// results are independent of scheduling order and worker count.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t n_samples, std::uint64_t repetition,
                          std::string_view purpose);

/// Seed for a single indexed draw (e.g. noise on Gram entry (i, j)).
std::uint64_t entry_seed(std::uint64_t seed, std::uint64_t i, std::uint64_t j);

/// Number of OpenMP workers to use: QKD_THREADS when set and positive,
/// otherwise the OpenMP default.
int worker_count();

}  // namespace qkdd
