#pragma once

// On-disk state for the command-line tool:
//
//   <home>/ledger.jsonl                  ledger export (replayed on open)
//   <home>/store/                        content store
//   <home>/keys/<org>.json               organisation key pair
//   <home>/issuers/<id>.json             credential issuer key pair (trusted)
//   <home>/producer/<org>/<share>.json   producer-private share state
//   <home>/.lock                         advisory lock held while open

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ctishare/orchestration.hpp"

namespace ctishare {

struct WorkspaceOptions {
  std::filesystem::path home;
  std::optional<std::filesystem::path> store_root;   // default <home>/store
  std::optional<std::filesystem::path> ledger_path;  // default <home>/ledger.jsonl
  std::optional<GasModel> gas_model;                 // must match an existing ledger
  std::optional<std::uint64_t> seed;
};

class Workspace {
 public:
  /// Takes an exclusive advisory lock; throws IoError if another process holds it.
  explicit Workspace(WorkspaceOptions options);
  ~Workspace();

  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  Ledger& ledger() { return *ledger_; }
  ContentStore& store() { return *store_; }
  const EngineRegistry& engines() const { return engines_; }
  const IssuerRegistry& issuers() const { return issuers_; }
  Environment environment() { return {*ledger_, *store_, engines_, issuers_}; }

  /// Writes keys/<org>.json. Throws ConfigError if the org already has keys.
  KeyPair create_org_keys(const std::string& org_id);
  bool has_org_keys(const std::string& org_id) const;
  Issuer create_issuer(const std::string& issuer_id);
  Issuer load_issuer(const std::string& issuer_id) const;

  /// Rebuilds the organisation from its keys, its saved producer states and
  /// the ledger's record of its requests.
  Organisation load_org(const std::string& org_id);
  void save_producer_state(const std::string& org_id, const ProducerShareState& state);

  /// Persists the ledger.
  void commit();

  const std::filesystem::path& home() const { return options_.home; }

 private:
  std::filesystem::path ledger_path() const;
  SeedStream seeds_for(const std::string& label) const;

  WorkspaceOptions options_;
  int lock_fd_ = -1;
  std::unique_ptr<Ledger> ledger_;
  std::unique_ptr<ContentStore> store_;
  EngineRegistry engines_;
  IssuerRegistry issuers_;
};

}  // namespace ctishare
