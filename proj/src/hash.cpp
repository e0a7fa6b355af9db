#include "ctishare/hash.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>

#include <new>

namespace ctishare {

Sha256::Sha256() : ctx_(EVP_MD_CTX_new()) {
  if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx_);
    throw std::bad_alloc();
  }
}

Sha256::~Sha256() { EVP_MD_CTX_free(ctx_); }

Sha256& Sha256::update(ByteView data) {
  EVP_DigestUpdate(ctx_, data.data(), data.size());
  consumed_ += data.size();
  return *this;
}

Digest Sha256::finish() {
  Digest out{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx_, out.data(), &len);
  return out;
}

Digest sha256(ByteView data) { return Sha256().update(data).finish(); }

bool digest_equal(const Digest& a, const Digest& b) {
  return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace ctishare
