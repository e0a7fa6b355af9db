#include "ctishare/rng.hpp"

#include <sodium.h>

#include <stdexcept>

#include "ctishare/hash.hpp"

namespace ctishare {

void ensure_crypto_ready() {
  static const int rc = sodium_init();
  if (rc < 0) throw std::runtime_error("libsodium initialisation failed");
}

Seed seed_from_u64(std::uint64_t value) {
  Bytes input = to_bytes("ctishare.seed");
  append_u64be(input, value);
  return sha256(input);
}

void random_fill(std::span<std::uint8_t> out) {
  ensure_crypto_ready();
  randombytes_buf(out.data(), out.size());
}

void deterministic_fill(std::span<std::uint8_t> out, const Seed& seed) {
  ensure_crypto_ready();
  static_assert(sizeof(Seed) == randombytes_SEEDBYTES);
  randombytes_buf_deterministic(out.data(), out.size(), seed.data());
}

std::optional<Seed> SeedStream::next(std::string_view label) {
  if (!master_) return std::nullopt;
  Sha256 h;
  h.update(*master_);
  h.update(as_view(label));
  Bytes counter;
  append_u64be(counter, counter_++);
  h.update(counter);
  return h.finish();
}

SeedStream SeedStream::fork(std::string_view label) {
  if (!master_) return SeedStream{};
  Sha256 h;
  h.update(*master_);
  h.update(as_view("fork:"));
  h.update(as_view(label));
  return SeedStream{h.finish()};
}

}  // namespace ctishare
