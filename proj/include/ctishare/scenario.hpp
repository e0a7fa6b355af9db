#pragma once

// Seeded multi-organisation runs driven by a JSON config:
//
// {
//   "seed": 7,                      // optional; omit for fresh randomness
//   "gas_model": "calibrated",      // or "linear"
//   "mode": "deterministic",        // or "concurrent" (one thread per org)
//   "issuers": ["trust-ca"],
//   "organisations": [
//     {"id": "acme", "role": "producer", "issuer": "trust-ca",
//      "attributes": {"sector": "energy"}, "malicious_towards": ["rival"]},
//     {"id": "rival", "role": "consumer", "issuer": "trust-ca",
//      "attributes": {"trust_score": 0.5}, "forge_credentials": false}
//   ],
//   "shares": [{"id": "s1", "producer": "acme", "bundle": "bundles/x.json",
//               "policy": "policies/p.json", "scheme": "multi"}],
//   "requests": [{"consumer": "rival", "share": "s1"}]
// }
//
// "bundle" and "policy" are paths relative to the config file or inline objects.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctishare/orchestration.hpp"

namespace ctishare {

struct OrgSpec {
  std::string id;
  Role role = Role::Consumer;
  std::string issuer;
  std::map<std::string, AttributeValue> attributes;
  bool forge_credentials = false;            // alter attributes after signing
  std::set<std::string> malicious_towards;   // producer alters groups for these consumers
};

struct ShareSpec {
  std::string key;
  std::string producer;
  CtiBundle bundle;
  AccessPolicy policy;
  HashScheme scheme = HashScheme::Single;
};

struct RequestSpec {
  std::string consumer;
  std::string share;
};

enum class RunMode { Deterministic, Concurrent };

struct ScenarioConfig {
  std::optional<std::uint64_t> seed;
  GasModel gas_model = GasModel::Calibrated;
  RunMode mode = RunMode::Deterministic;
  std::vector<std::string> issuers;
  std::vector<OrgSpec> organisations;
  std::vector<ShareSpec> shares;
  std::vector<RequestSpec> requests;
};

/// Throws ConfigError (or the parse error of an embedded bundle/policy).
ScenarioConfig scenario_from_json(const nlohmann::ordered_json& doc,
                                  const std::filesystem::path& base_dir);
ScenarioConfig load_scenario(const std::filesystem::path& path);

struct ConsumerOutcome {
  std::uint64_t request_id = 0;
  std::string consumer;
  std::string producer;
  std::string share_key;
  std::uint64_t share_id = 0;
  std::set<int> granted;
  bool credentials_verified = false;
  ValidationReport report;
  std::uint64_t exchange_gas = 0;  // share + request + response
};

struct ScenarioTranscript {
  std::vector<nlohmann::ordered_json> lines;
  std::vector<ConsumerOutcome> outcomes;
  std::uint64_t gas_total = 0;

  std::string to_jsonl() const;
  const ConsumerOutcome* outcome_for(const std::string& consumer,
                                     const std::string& share_key) const;
};

/// Owns the ledger, store and organisations of one run so callers can inspect
/// them afterwards.
class ScenarioRunner {
 public:
  ScenarioRunner(ScenarioConfig config, std::filesystem::path store_root);

  ScenarioTranscript run();

  Ledger& ledger() { return *ledger_; }
  const ContentStore& store() const { return *store_; }
  Organisation& org(const std::string& id);
  const std::vector<std::unique_ptr<Organisation>>& organisations() const { return orgs_; }
  EngineRegistry& engines() { return engines_; }

 private:
  void run_deterministic(Environment& env);
  void run_concurrent(Environment& env);

  ScenarioConfig config_;
  std::unique_ptr<Ledger> ledger_;
  std::unique_ptr<ContentStore> store_;
  EngineRegistry engines_;
  IssuerRegistry issuer_registry_;
  std::vector<std::unique_ptr<Organisation>> orgs_;
  std::map<std::string, std::uint64_t> share_ids_;
};

ScenarioTranscript run_scenario(const ScenarioConfig& config,
                                const std::filesystem::path& store_root);

}  // namespace ctishare
