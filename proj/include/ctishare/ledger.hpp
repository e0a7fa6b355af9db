#pragma once

// In-process data-storage contract: an append-only, single-node state machine
// with share / request / respond functions, emitted events, and gas metering.
// Mutations are serialized under one writer lock; reads share the lock.

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ctishare/bytes.hpp"
#include "ctishare/content_store.hpp"

namespace ctishare {

/// First 20 bytes of SHA-256(public_key).
struct Address {
  std::array<std::uint8_t, 20> bytes{};

  static Address from_public_key(ByteView public_key);
  /// "0x" + 40 lowercase hex chars.
  static Address parse(std::string_view text);
  std::string str() const;

  auto operator<=>(const Address&) const = default;
};

enum class GasModel { Calibrated, Linear };
enum class ContractFunction { Share, Request, Response };

std::string_view to_string(GasModel model);
GasModel gas_model_from_string(std::string_view name);
std::string_view to_string(ContractFunction fn);

namespace gas {
// Measured per-call costs of the reference contract deployment.
inline constexpr std::uint64_t kShare = 43'897;
inline constexpr std::uint64_t kRequest = 66'628;
inline constexpr std::uint64_t kResponse = 50'625;
inline constexpr std::uint64_t kExchangeTotal = kShare + kRequest + kResponse;

// Linear sensitivity model: intrinsic + storage base + per calldata byte.
inline constexpr std::uint64_t kLinearIntrinsic = 21'000;
inline constexpr std::uint64_t kLinearPerByte = 16;
inline constexpr std::uint64_t kLinearShareBase = 20'000;
inline constexpr std::uint64_t kLinearRequestBase = 40'000;
inline constexpr std::uint64_t kLinearResponseBase = 25'000;
}  // namespace gas

std::uint64_t gas_cost(GasModel model, ContractFunction fn, std::size_t calldata_bytes);

struct GasReceipt {
  ContractFunction function = ContractFunction::Share;
  std::uint64_t gas_used = 0;
  GasModel model = GasModel::Calibrated;

  friend bool operator==(const GasReceipt&, const GasReceipt&) = default;
};

struct ShareRecord {
  std::uint64_t share_id = 0;
  Address producer;
  Cid cid_public;
  std::map<std::string, std::string> metadata;
  GasReceipt gas;
};

struct RequestRecord {
  std::uint64_t request_id = 0;
  std::uint64_t share_id = 0;
  Address consumer;
  Cid cid_credentials;
  GasReceipt gas;
};

struct ResponseRecord {
  std::uint64_t request_id = 0;
  Cid cid_response;
  GasReceipt gas;
};

enum class EventType { ShareAdded, RequestAdded, ResponseAdded };
std::string_view to_string(EventType type);

struct LedgerEvent {
  std::uint64_t sequence = 0;  // 1-based, strictly increasing
  EventType type = EventType::ShareAdded;
  std::uint64_t share_id = 0;
  std::uint64_t request_id = 0;  // 0 for ShareAdded
  Address actor;
  Cid cid;
  std::uint64_t gas_used = 0;
};

class Ledger {
 public:
  explicit Ledger(GasModel model = GasModel::Calibrated);

  Ledger(const Ledger&) = delete;
  Ledger& operator=(const Ledger&) = delete;

  GasModel gas_model() const { return model_; }

  /// Throws AlreadyRegistered.
  Address register_org(ByteView public_key);
  std::optional<Bytes> public_key(const Address& address) const;
  bool is_registered(const Address& address) const;

  /// Throws UnregisteredCaller, BadMetadata.
  std::pair<std::uint64_t, GasReceipt> share(const Address& caller, const Cid& cid_public,
                                             const std::map<std::string, std::string>& metadata);
  /// Throws UnregisteredCaller, UnknownShare, SelfRequest.
  std::pair<std::uint64_t, GasReceipt> request(const Address& caller, std::uint64_t share_id,
                                               const Cid& cid_credentials);
  /// Throws UnregisteredCaller, UnknownRequest, NotProducer, AlreadyResponded.
  GasReceipt respond(const Address& caller, std::uint64_t request_id, const Cid& cid_response);

  std::vector<LedgerEvent> events_since(std::uint64_t cursor) const;
  std::uint64_t last_sequence() const;

  std::optional<ShareRecord> find_share(std::uint64_t share_id) const;
  std::optional<RequestRecord> find_request(std::uint64_t request_id) const;
  std::optional<ResponseRecord> find_response(std::uint64_t request_id) const;
  std::vector<ShareRecord> shares() const;
  std::vector<RequestRecord> requests() const;
  std::size_t response_count() const;
  std::uint64_t total_gas() const;

  /// JSON lines in commit order with stable field order; first line is a header.
  std::string export_jsonl() const;
  /// Rebuilds a ledger by replaying an export through the public API.
  static std::unique_ptr<Ledger> import_jsonl(std::string_view text);
  /// SHA-256 over export_jsonl().
  Digest state_digest() const;

  void save(const std::filesystem::path& path) const;
  static std::unique_ptr<Ledger> load(const std::filesystem::path& path);

 private:
  struct OrgEntry {
    Address address;
    Bytes public_key;
  };
  using Entry = std::variant<OrgEntry, ShareRecord, RequestRecord, ResponseRecord>;

  void require_registered(const Address& caller) const;
  void emit(EventType type, std::uint64_t share_id, std::uint64_t request_id, const Address& actor,
            const Cid& cid, std::uint64_t gas_used);

  GasModel model_;
  mutable std::shared_mutex mutex_;
  std::vector<Entry> log_;
  std::map<Address, Bytes> orgs_;
  std::map<std::uint64_t, ShareRecord> shares_;
  std::map<std::uint64_t, RequestRecord> requests_;
  std::map<std::uint64_t, ResponseRecord> responses_;
  std::vector<LedgerEvent> events_;
  std::uint64_t total_gas_ = 0;
};

}  // namespace ctishare
