#pragma once

// Nonce-salted integrity hash sets over the sensitive data groups g_1..g_N.
//
//   Single: digest_i = SHA-256(N_i || cb(g_i))                    i = 1..N
//   Multi:  digest_k = SHA-256(N_k || cb(g_1) || ... || cb(g_k))   k = 1..N
//
// where cb() is canonical_bytes(). A Single disclosure may be any subset of
// levels and validates with one comparison per group; a Multi disclosure must
// be a prefix {1..k} and validates with exactly one comparison against
// digest_k using nonce N_k.
//
// generate_hashes()/validate() are the serial reference kernels. The
// *_parallel variants split independent digests across OpenMP threads and must
// produce identical results.

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ctishare/hash.hpp"
#include "ctishare/model.hpp"
#include "ctishare/rng.hpp"

namespace ctishare {

enum class HashScheme { Single, Multi };

std::string_view to_string(HashScheme scheme);
/// "single" | "multi"; anything else is a SchemaError.
HashScheme scheme_from_string(std::string_view name);

using Nonce = std::array<std::uint8_t, 32>;

inline constexpr std::string_view kHashFunctionId = "sha256";

struct IntegrityHashSet {
  HashScheme scheme = HashScheme::Single;
  std::vector<Digest> digests;  // digests[i - 1] belongs to level i
  std::string hash_function_id{kHashFunctionId};

  friend bool operator==(const IntegrityHashSet&, const IntegrityHashSet&) = default;
};

/// Instrumentation filled in by the kernels.
struct HashWork {
  std::uint64_t bytes_hashed = 0;
  std::uint64_t hash_calls = 0;
};

/// `groups` are the sensitive groups in level order 1..N.
/// Throws NonceCountMismatch unless nonces.size() == groups.size().
IntegrityHashSet generate_hashes(std::span<const DataGroup> groups, std::span<const Nonce> nonces,
                                 HashScheme scheme, HashWork* work = nullptr);

IntegrityHashSet generate_hashes_parallel(std::span<const DataGroup> groups,
                                          std::span<const Nonce> nonces, HashScheme scheme,
                                          HashWork* work = nullptr);

/// Byte-work model: Single = sum(|cb(g_i)| + 32), Multi = sum_k (32 + sum_{j<=k} |cb(g_j)|).
std::uint64_t modeled_bytes_hashed(std::span<const DataGroup> groups, HashScheme scheme);

/// n fresh nonces from the CSPRNG, or a deterministic stream when seeded.
std::vector<Nonce> draw_nonces(std::size_t n, const std::optional<Seed>& seed = std::nullopt);

struct NonceEntry {
  int index = 0;
  Nonce nonce{};

  friend bool operator==(const NonceEntry&, const NonceEntry&) = default;
};

struct DisclosurePackage {
  HashScheme scheme = HashScheme::Single;
  std::vector<DataGroup> groups;  // each carries its level
  std::vector<NonceEntry> nonces;

  friend bool operator==(const DisclosurePackage&, const DisclosurePackage&) = default;
};

/// Builds the package a producer sends for `levels` out of the full share.
/// Multi requires `levels` to be a prefix {1..k} (NonPrefixDisclosure).
DisclosurePackage make_disclosure(std::span<const DataGroup> groups, std::span<const Nonce> nonces,
                                  HashScheme scheme, const std::set<int>& levels);

struct IndexVerdict {
  int index = 0;
  bool pass = false;
};

struct ValidationReport {
  std::vector<IndexVerdict> verdicts;
  std::uint64_t comparisons_performed = 0;
  bool pass = true;
};

/// Throws SchemeMismatch, NonPrefixDisclosure, or MalformedPackage (nonce
/// entries inconsistent with the disclosed groups). A digest mismatch is a
/// failing verdict, not an error.
ValidationReport validate(const DisclosurePackage& package, const IntegrityHashSet& published,
                          HashWork* work = nullptr);

ValidationReport validate_parallel(const DisclosurePackage& package,
                                   const IntegrityHashSet& published, HashWork* work = nullptr);

/// {"scheme": "single"|"multi", "hash": "sha256", "digests": [hex, ...]}
nlohmann::ordered_json to_json(const IntegrityHashSet& set);
IntegrityHashSet hash_set_from_json(const nlohmann::ordered_json& doc);
std::string serialize(const IntegrityHashSet& set);

nlohmann::ordered_json to_json(const DisclosurePackage& package);
DisclosurePackage disclosure_from_json(const nlohmann::ordered_json& doc);

namespace detail {
// Shared by the serial and parallel kernels.
Digest single_digest(const Nonce& nonce, const DataGroup& group, HashWork& work);
Digest prefix_digest(const Nonce& nonce, std::span<const DataGroup> prefix, HashWork& work);
void check_package(const DisclosurePackage& package, const IntegrityHashSet& published);
}  // namespace detail

}  // namespace ctishare
