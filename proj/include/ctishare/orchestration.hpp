#pragma once

// Organisation actors and the share / request / policy-evaluation / response /
// validate exchange. Organisations interact only through the ledger and the
// content store; everything private (sensitive groups, nonces, full policies,
// private keys) stays inside the owning Organisation.
//
//   produce_share     producer  segment, hash, publish blob, ledger.share
//   submit_request    consumer  seal credentials to producer, ledger.request
//   process_request   producer  open + verify credentials, evaluate policy,
//                               seal granted groups and nonces, ledger.respond
//   consume_response  consumer  open response, fetch published hashes, validate

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ctishare/content_store.hpp"
#include "ctishare/envelope.hpp"
#include "ctishare/integrity.hpp"
#include "ctishare/ledger.hpp"
#include "ctishare/model.hpp"
#include "ctishare/policy.hpp"
#include "ctishare/rng.hpp"

namespace ctishare {

struct Environment {
  Ledger& ledger;
  ContentStore& store;
  const EngineRegistry& engines;
  const IssuerRegistry& issuers;
};

/// What the producer publishes to the content store for a share.
struct PublicShareBlob {
  std::string bundle_id;
  DataGroup non_sensitive;
  IntegrityHashSet hashes;
  std::string public_policy;  // JSON text of public_portion()

  Bytes serialize() const;
  static PublicShareBlob parse(ByteView bytes);
};

/// Producer-private state for one share.
struct ProducerShareState {
  std::uint64_t share_id = 0;
  std::string bundle_id;
  std::vector<DataGroup> sensitive_groups;  // levels 1..N
  std::vector<Nonce> nonces;
  AccessPolicy policy;
  HashScheme scheme = HashScheme::Single;
  Cid cid_public;

  int group_count() const { return static_cast<int>(sensitive_groups.size()); }
};

nlohmann::ordered_json to_json(const ProducerShareState& state);
ProducerShareState producer_state_from_json(const nlohmann::ordered_json& doc);

/// Sealed to the consumer. Binds share_id and request_id so a response cannot
/// be replayed against another share or request.
struct ResponsePackage {
  std::uint64_t share_id = 0;
  std::uint64_t request_id = 0;
  DisclosurePackage disclosure;

  Bytes serialize() const;
  static ResponsePackage parse(ByteView bytes);
};

struct ReceivedCti {
  std::uint64_t share_id = 0;
  std::uint64_t request_id = 0;
  std::vector<DataGroup> groups;
  ValidationReport report;
};

class DataManager {
 public:
  void store_share(ProducerShareState state);
  const ProducerShareState* share(std::uint64_t share_id) const;
  ProducerShareState* mutable_share(std::uint64_t share_id);
  const std::map<std::uint64_t, ProducerShareState>& shares() const { return shares_; }

  void store_received(ReceivedCti cti);
  const ReceivedCti* received(std::uint64_t request_id) const;
  const std::map<std::uint64_t, ReceivedCti>& all_received() const { return received_; }

 private:
  std::map<std::uint64_t, ProducerShareState> shares_;
  std::map<std::uint64_t, ReceivedCti> received_;
};

struct AccessDecision {
  GrantDecision grant;
  bool credentials_verified = false;
  std::string failure;  // why verification failed, if it did
};

class AccessManager {
 public:
  /// Verifies credentials then evaluates the share's policy. A credential
  /// failure is a deny, not an error.
  AccessDecision decide(const ProducerShareState& state, const std::optional<CredentialSet>& creds,
                        const std::string& decode_failure, const Environment& env) const;
};

class RequestManager {
 public:
  std::uint64_t cursor = 0;
  std::map<std::uint64_t, std::uint64_t> submitted;  // request_id -> share_id
  std::map<std::uint64_t, ValidationReport> reports;
  std::map<std::uint64_t, AccessDecision> decisions;  // producer side
};

enum class Role { Producer, Consumer };

/// Local audit note (e.g. a credential verification failure).
struct LocalLogEntry {
  std::uint64_t request_id = 0;
  std::string message;
};

class Organisation {
 public:
  Organisation(std::string org_id, KeyPair keys, SeedStream seeds = {});

  const std::string& id() const { return id_; }
  const KeyPair& keys() const { return keys_; }
  const Address& address() const { return address_; }

  void register_on(Ledger& ledger);

  CredentialSet credentials;

  DataManager& data() { return data_; }
  const DataManager& data() const { return data_; }
  RequestManager& requests() { return requests_; }
  const RequestManager& requests() const { return requests_; }
  const AccessManager& access() const { return access_; }
  SeedStream& seeds() { return seeds_; }

  /// One role per interaction (share). Throws RoleConflict.
  void claim_role(std::uint64_t share_id, Role role);
  std::optional<Role> role_for(std::uint64_t share_id) const;

  /// Test hook for a dishonest producer: may rewrite a package before sealing.
  std::function<void(ResponsePackage&, const Address& consumer)> response_hook;

  std::vector<LocalLogEntry> local_log;

 private:
  std::string id_;
  KeyPair keys_;
  Address address_;
  SeedStream seeds_;
  DataManager data_;
  RequestManager requests_;
  AccessManager access_;
  std::map<std::uint64_t, Role> roles_;
};

std::uint64_t produce_share(Organisation& producer, Environment& env, const CtiBundle& bundle,
                            const AccessPolicy& policy, HashScheme scheme);

std::uint64_t submit_request(Organisation& consumer, Environment& env, std::uint64_t share_id,
                             const CredentialSet& creds);

AccessDecision process_request(Organisation& producer, Environment& env, std::uint64_t request_id);

/// Validation failure is reported, not thrown. Throws NotFound when no
/// response exists and DecryptionFailure when it is not addressed to us.
ValidationReport consume_response(Organisation& consumer, Environment& env,
                                  std::uint64_t request_id);

/// Handles ledger events since the organisation's cursor: RequestAdded on its
/// own shares and ResponseAdded on its own requests. Returns events acted on.
std::size_t poll(Organisation& org, Environment& env);

}  // namespace ctishare
