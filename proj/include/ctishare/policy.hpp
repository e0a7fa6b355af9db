#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ctishare/bytes.hpp"
#include "ctishare/integrity.hpp"
#include "ctishare/rng.hpp"

namespace ctishare {

// ---------------------------------------------------------------------------
// Credentials
// ---------------------------------------------------------------------------

using AttributeValue = std::variant<std::string, double>;

struct CredentialSet {
  std::string org_id;
  std::map<std::string, AttributeValue> attributes;
  std::string issuer_id;
  Bytes signature;  // Ed25519 over canonical_attribute_bytes()

  friend bool operator==(const CredentialSet&, const CredentialSet&) = default;
};

/// Length-prefixed encoding of org_id, issuer_id and the sorted attributes.
/// Numbers are encoded as their IEEE-754 bit pattern.
Bytes canonical_attribute_bytes(const CredentialSet& creds);

nlohmann::ordered_json to_json(const CredentialSet& creds);
CredentialSet credentials_from_json(const nlohmann::ordered_json& doc);

/// An attribute authority that signs credential sets.
struct Issuer {
  std::string issuer_id;
  Bytes public_key;
  SecretBytes secret_key;
};

Issuer make_issuer(std::string issuer_id, const std::optional<Seed>& seed = std::nullopt);
void sign_credentials(CredentialSet& creds, const Issuer& issuer);

class IssuerRegistry {
 public:
  void add(const std::string& issuer_id, Bytes public_key);
  const Bytes* find(const std::string& issuer_id) const;

 private:
  std::map<std::string, Bytes> keys_;
};

/// Credentials whose signature has been checked. Only verify_credentials()
/// creates one, so policy engines never see unverified attributes.
class VerifiedCredentials {
 public:
  const CredentialSet& credentials() const { return creds_; }
  const std::string& org_id() const { return creds_.org_id; }

 private:
  explicit VerifiedCredentials(CredentialSet creds) : creds_(std::move(creds)) {}
  friend VerifiedCredentials verify_credentials(const CredentialSet&, const IssuerRegistry&);

  CredentialSet creds_;
};

/// Throws UnknownIssuer or BadSignature.
VerifiedCredentials verify_credentials(const CredentialSet& creds, const IssuerRegistry& registry);

// ---------------------------------------------------------------------------
// Predicates and policies
// ---------------------------------------------------------------------------

enum class CompareOp { Eq, Ne, Ge, Le };

struct Predicate;

struct AlwaysTrue {};
struct AllOf {
  std::vector<Predicate> terms;
};
struct AnyOf {
  std::vector<Predicate> terms;
};
struct Negation {
  std::shared_ptr<const Predicate> term;
};
struct Comparison {
  std::string attribute;
  CompareOp op = CompareOp::Eq;
  AttributeValue value;
};
struct Membership {
  std::string attribute;
  std::vector<AttributeValue> values;
};
struct OrgAllowlist {
  std::set<std::string> org_ids;
};

struct Predicate {
  std::variant<AlwaysTrue, AllOf, AnyOf, Negation, Comparison, Membership, OrgAllowlist> node;
};

/// What a predicate can see. Identity-only views hide every attribute.
struct SubjectView {
  const std::string& org_id;
  const std::map<std::string, AttributeValue>* attributes = nullptr;
};

bool evaluate_predicate(const Predicate& predicate, const SubjectView& subject);
std::set<std::string> referenced_attributes(const Predicate& predicate);

nlohmann::ordered_json to_json(const Predicate& predicate);
Predicate predicate_from_json(const nlohmann::ordered_json& doc);

struct Rule {
  std::string id;
  Predicate predicate;
  std::set<int> grant;
  bool withheld = false;  // predicate omitted from the published copy
};

struct AccessPolicy {
  std::string policy_id;
  std::string engine = "attribute-rules";
  HashScheme scheme = HashScheme::Single;
  std::vector<Rule> rules;
  std::optional<std::set<std::string>> declared_attributes;
};

bool is_prefix(const std::set<int>& levels);

/// Multi policies must grant prefixes {1..k}; grants must lie in 1..group_count
/// when it is known; predicates may only use declared attributes. Throws
/// PolicyShapeError naming the offending rule.
void check_policy_shape(const AccessPolicy& policy, std::optional<int> group_count = std::nullopt);

nlohmann::ordered_json to_json(const AccessPolicy& policy);
/// Parses and shape-checks.
AccessPolicy policy_from_json(const nlohmann::ordered_json& doc);
AccessPolicy parse_policy(std::string_view document);
AccessPolicy load_policy(const std::filesystem::path& path);
/// The copy published to the content store: withheld rules lose their predicate.
nlohmann::ordered_json public_portion(const AccessPolicy& policy);

// ---------------------------------------------------------------------------
// Engines
// ---------------------------------------------------------------------------

struct GrantDecision {
  std::set<int> levels;
  std::optional<std::string> matched_rule;
};

struct EvaluationContext {
  int group_count = 0;  // N of the target share
};

class PolicyEngine {
 public:
  virtual ~PolicyEngine() = default;
  virtual std::string name() const = 0;
  /// Deterministic and side-effect free.
  virtual GrantDecision evaluate(const AccessPolicy& policy, const VerifiedCredentials& creds,
                                 const EvaluationContext& ctx) const = 0;
};

/// First matching rule wins; no match grants nothing.
class AttributeRulesEngine final : public PolicyEngine {
 public:
  std::string name() const override { return "attribute-rules"; }
  GrantDecision evaluate(const AccessPolicy& policy, const VerifiedCredentials& creds,
                         const EvaluationContext& ctx) const override;
};

/// First-match over the same rules, but predicates only see the org id.
class IdentityAllowlistEngine final : public PolicyEngine {
 public:
  std::string name() const override { return "identity-allowlist"; }
  GrantDecision evaluate(const AccessPolicy& policy, const VerifiedCredentials& creds,
                         const EvaluationContext& ctx) const override;
};

class EngineRegistry {
 public:
  /// Pre-registers "attribute-rules" and "identity-allowlist".
  EngineRegistry();

  /// Throws DuplicateEngineName.
  void register_engine(std::shared_ptr<const PolicyEngine> engine);
  /// Throws UnknownEngine.
  std::shared_ptr<const PolicyEngine> find(const std::string& name) const;
  std::vector<std::string> names() const;

  /// Dispatches on policy.engine, then enforces the grant shape: levels inside
  /// 1..group_count and, under Multi, a prefix (PolicyShapeError otherwise).
  GrantDecision evaluate(const AccessPolicy& policy, const VerifiedCredentials& creds,
                         const EvaluationContext& ctx) const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<const PolicyEngine>> engines_;
};

}  // namespace ctishare
