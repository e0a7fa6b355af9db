#pragma once

#include <array>
#include <cstdint>

#include "ctishare/bytes.hpp"

struct evp_md_ctx_st;

namespace ctishare {

using Digest = std::array<std::uint8_t, 32>;

/// Incremental SHA-256 (OpenSSL EVP). Counts the bytes fed through update().
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(ByteView data);
  Digest finish();

  std::uint64_t bytes_consumed() const { return consumed_; }

 private:
  evp_md_ctx_st* ctx_;
  std::uint64_t consumed_ = 0;
};

Digest sha256(ByteView data);

/// Constant-time equality.
bool digest_equal(const Digest& a, const Digest& b);

}  // namespace ctishare
