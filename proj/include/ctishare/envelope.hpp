#pragma once

// Anonymous-sender public-key envelope: ephemeral X25519 key agreement with
// XSalsa20-Poly1305 authenticated encryption (libsodium sealed-box layout).
//
// Serialized form:  recipient_key_id (32 ASCII hex chars) || version (0x01)
//                   || ephemeral_pk (32) || box (16-byte tag + ciphertext)

#include <optional>
#include <string>

#include "ctishare/bytes.hpp"
#include "ctishare/rng.hpp"

namespace ctishare {

inline constexpr std::uint8_t kEnvelopeVersion = 1;
inline constexpr std::size_t kKeyIdLength = 32;

struct KeyPair {
  Bytes public_key;
  SecretBytes private_key;
  std::string key_id;
};

/// First 16 bytes of SHA-256(public_key), hex.
std::string key_id_for(ByteView public_key);

KeyPair keygen(const std::optional<Seed>& seed = std::nullopt);

/// Rebuilds a key pair from a stored private key.
KeyPair keypair_from_private(const SecretBytes& private_key);

struct SealedBlob {
  std::string recipient_key_id;
  Bytes ciphertext;  // ephemeral public key, tag and encrypted payload

  Bytes serialize() const;
  /// Throws DecryptionFailure on malformed framing.
  static SealedBlob parse(ByteView framed);
};

/// Randomized unless `ephemeral_seed` is given (deterministic test mode).
SealedBlob seal(ByteView recipient_public, ByteView plaintext,
                const std::optional<Seed>& ephemeral_seed = std::nullopt);

/// Throws DecryptionFailure for a wrong key or any modification; the two
/// cases are not distinguished.
Bytes open(const SecretBytes& recipient_private, const SealedBlob& blob);

}  // namespace ctishare
