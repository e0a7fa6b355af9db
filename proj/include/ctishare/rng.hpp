#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "ctishare/bytes.hpp"

namespace ctishare {

using Seed = std::array<std::uint8_t, 32>;

/// Expands a small integer into a 32-byte seed (SHA-256 of a tagged encoding).
Seed seed_from_u64(std::uint64_t value);

/// Idempotent libsodium initialisation.
void ensure_crypto_ready();

/// Fills `out` from the OS-backed CSPRNG.
void random_fill(std::span<std::uint8_t> out);

/// Deterministic ChaCha20 keystream from `seed` (test mode).
void deterministic_fill(std::span<std::uint8_t> out, const Seed& seed);

/// Source of per-operation seeds. Seeded streams derive child seeds as
/// SHA-256(master || label || counter); unseeded streams draw fresh randomness.
class SeedStream {
 public:
  SeedStream() = default;
  explicit SeedStream(std::optional<Seed> master) : master_(master) {}

  bool deterministic() const { return master_.has_value(); }

  /// Child seed for the next operation under `label`; nullopt when unseeded.
  std::optional<Seed> next(std::string_view label);

  /// Independent seeded stream for a sub-actor, or an unseeded stream.
  SeedStream fork(std::string_view label);

 private:
  std::optional<Seed> master_;
  std::uint64_t counter_ = 0;
};

}  // namespace ctishare
