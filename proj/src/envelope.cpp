#include "ctishare/envelope.hpp"

#include <sodium.h>

#include "ctishare/error.hpp"
#include "ctishare/hash.hpp"

namespace ctishare {

static_assert(crypto_box_PUBLICKEYBYTES == 32 && crypto_box_SECRETKEYBYTES == 32);
static_assert(crypto_box_SEEDBYTES == sizeof(Seed));

std::string key_id_for(ByteView public_key) {
  auto d = sha256(public_key);
  return to_hex(ByteView(d).first(16));
}

KeyPair keygen(const std::optional<Seed>& seed) {
  ensure_crypto_ready();
  KeyPair kp{Bytes(crypto_box_PUBLICKEYBYTES), SecretBytes(crypto_box_SECRETKEYBYTES), {}};
  if (seed) {
    crypto_box_seed_keypair(kp.public_key.data(), kp.private_key.data(), seed->data());
  } else {
    crypto_box_keypair(kp.public_key.data(), kp.private_key.data());
  }
  kp.key_id = key_id_for(kp.public_key);
  return kp;
}

KeyPair keypair_from_private(const SecretBytes& private_key) {
  ensure_crypto_ready();
  if (private_key.size() != crypto_box_SECRETKEYBYTES) {
    throw Error(ErrorCode::SchemaError, "private key must be 32 bytes");
  }
  KeyPair kp{Bytes(crypto_box_PUBLICKEYBYTES), private_key, {}};
  crypto_scalarmult_base(kp.public_key.data(), kp.private_key.data());
  kp.key_id = key_id_for(kp.public_key);
  return kp;
}

Bytes SealedBlob::serialize() const {
  Bytes out;
  out.reserve(recipient_key_id.size() + 1 + ciphertext.size());
  append(out, as_view(recipient_key_id));
  out.push_back(kEnvelopeVersion);
  append(out, ciphertext);
  return out;
}

SealedBlob SealedBlob::parse(ByteView framed) {
  if (framed.size() < kKeyIdLength + 1 + crypto_box_SEALBYTES) {
    throw Error(ErrorCode::DecryptionFailure, "sealed blob too short");
  }
  if (framed[kKeyIdLength] != kEnvelopeVersion) {
    throw Error(ErrorCode::DecryptionFailure, "unsupported envelope version");
  }
  SealedBlob blob;
  blob.recipient_key_id = to_string(framed.first(kKeyIdLength));
  auto body = framed.subspan(kKeyIdLength + 1);
  blob.ciphertext.assign(body.begin(), body.end());
  return blob;
}

SealedBlob seal(ByteView recipient_public, ByteView plaintext,
                const std::optional<Seed>& ephemeral_seed) {
  ensure_crypto_ready();
  if (recipient_public.size() != crypto_box_PUBLICKEYBYTES) {
    throw Error(ErrorCode::SchemaError, "recipient public key must be 32 bytes");
  }
  SealedBlob blob{key_id_for(recipient_public), Bytes(crypto_box_SEALBYTES + plaintext.size())};
  if (!ephemeral_seed) {
    crypto_box_seal(blob.ciphertext.data(), plaintext.data(), plaintext.size(),
                    recipient_public.data());
    return blob;
  }
  // Same layout as crypto_box_seal with a caller-chosen ephemeral key:
  // epk || box(m, nonce = BLAKE2b-192(epk || pk), pk, esk).
  KeyPair ephemeral = keygen(ephemeral_seed);
  std::uint8_t nonce[crypto_box_NONCEBYTES];
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, sizeof nonce);
  crypto_generichash_update(&st, ephemeral.public_key.data(), ephemeral.public_key.size());
  crypto_generichash_update(&st, recipient_public.data(), recipient_public.size());
  crypto_generichash_final(&st, nonce, sizeof nonce);
  std::copy(ephemeral.public_key.begin(), ephemeral.public_key.end(), blob.ciphertext.begin());
  if (crypto_box_easy(blob.ciphertext.data() + crypto_box_PUBLICKEYBYTES, plaintext.data(),
                      plaintext.size(), nonce, recipient_public.data(),
                      ephemeral.private_key.data()) != 0) {
    throw Error(ErrorCode::DecryptionFailure, "sealing failed");
  }
  return blob;
}

Bytes open(const SecretBytes& recipient_private, const SealedBlob& blob) {
  const KeyPair kp = keypair_from_private(recipient_private);
  if (blob.recipient_key_id != kp.key_id || blob.ciphertext.size() < crypto_box_SEALBYTES) {
    throw Error(ErrorCode::DecryptionFailure, "cannot open sealed blob");
  }
  Bytes plain(blob.ciphertext.size() - crypto_box_SEALBYTES);
  if (crypto_box_seal_open(plain.data(), blob.ciphertext.data(), blob.ciphertext.size(),
                           kp.public_key.data(), kp.private_key.data()) != 0) {
    throw Error(ErrorCode::DecryptionFailure, "cannot open sealed blob");
  }
  return plain;
}

}  // namespace ctishare
