#include "ctishare/policy.hpp"

#include <sodium.h>

#include <algorithm>
#include <bit>
#include <mutex>
#include <nlohmann/json.hpp>

#include "ctishare/error.hpp"

namespace ctishare {

using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Credentials

namespace {

void append_field(Bytes& out, std::string_view text) {
  append_u32be(out, static_cast<std::uint32_t>(text.size()));
  append(out, as_view(text));
}

ordered_json value_to_json(const AttributeValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return std::get<double>(v);
}

AttributeValue value_from_json(const ordered_json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.get<double>();
  throw Error(ErrorCode::SchemaError, where + ": attribute values must be strings or numbers");
}

}  // namespace

Bytes canonical_attribute_bytes(const CredentialSet& creds) {
  Bytes out = to_bytes("ctishare.credentials.v1");
  append_field(out, creds.org_id);
  append_field(out, creds.issuer_id);
  append_u32be(out, static_cast<std::uint32_t>(creds.attributes.size()));
  for (const auto& [name, value] : creds.attributes) {
    append_field(out, name);
    if (const auto* s = std::get_if<std::string>(&value)) {
      out.push_back('s');
      append_field(out, *s);
    } else {
      out.push_back('n');
      append_u64be(out, std::bit_cast<std::uint64_t>(std::get<double>(value)));
    }
  }
  return out;
}

ordered_json to_json(const CredentialSet& creds) {
  ordered_json attrs = ordered_json::object();
  for (const auto& [k, v] : creds.attributes) attrs[k] = value_to_json(v);
  return ordered_json{{"org_id", creds.org_id},
                      {"issuer_id", creds.issuer_id},
                      {"attributes", attrs},
                      {"signature", to_hex(creds.signature)}};
}

CredentialSet credentials_from_json(const ordered_json& doc) {
  try {
    CredentialSet creds;
    creds.org_id = doc.at("org_id").get<std::string>();
    creds.issuer_id = doc.at("issuer_id").get<std::string>();
    for (const auto& [k, v] : doc.at("attributes").items()) {
      creds.attributes[k] = value_from_json(v, "/attributes/" + k);
    }
    if (doc.contains("signature")) creds.signature = from_hex(doc.at("signature").get<std::string>());
    return creds;
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("credentials: ") + e.what());
  }
}

Issuer make_issuer(std::string issuer_id, const std::optional<Seed>& seed) {
  ensure_crypto_ready();
  Issuer issuer{std::move(issuer_id), Bytes(crypto_sign_PUBLICKEYBYTES),
                SecretBytes(crypto_sign_SECRETKEYBYTES)};
  if (seed) {
    crypto_sign_seed_keypair(issuer.public_key.data(), issuer.secret_key.data(), seed->data());
  } else {
    crypto_sign_keypair(issuer.public_key.data(), issuer.secret_key.data());
  }
  return issuer;
}

void sign_credentials(CredentialSet& creds, const Issuer& issuer) {
  ensure_crypto_ready();
  creds.issuer_id = issuer.issuer_id;
  auto message = canonical_attribute_bytes(creds);
  creds.signature.assign(crypto_sign_BYTES, 0);
  crypto_sign_detached(creds.signature.data(), nullptr, message.data(), message.size(),
                       issuer.secret_key.data());
}

void IssuerRegistry::add(const std::string& issuer_id, Bytes public_key) {
  keys_[issuer_id] = std::move(public_key);
}

const Bytes* IssuerRegistry::find(const std::string& issuer_id) const {
  auto it = keys_.find(issuer_id);
  return it == keys_.end() ? nullptr : &it->second;
}

VerifiedCredentials verify_credentials(const CredentialSet& creds, const IssuerRegistry& registry) {
  ensure_crypto_ready();
  const Bytes* key = registry.find(creds.issuer_id);
  if (key == nullptr) throw Error(ErrorCode::UnknownIssuer, "issuer '" + creds.issuer_id + "'");
  auto message = canonical_attribute_bytes(creds);
  if (key->size() != crypto_sign_PUBLICKEYBYTES || creds.signature.size() != crypto_sign_BYTES ||
      crypto_sign_verify_detached(creds.signature.data(), message.data(), message.size(),
                                  key->data()) != 0) {
    throw Error(ErrorCode::BadSignature, "credentials of '" + creds.org_id + "'");
  }
  return VerifiedCredentials(creds);
}

// ---------------------------------------------------------------------------
// Predicates

namespace {

bool compare(const AttributeValue& actual, CompareOp op, const AttributeValue& expected) {
  if (actual.index() != expected.index()) return op == CompareOp::Ne;
  switch (op) {
    case CompareOp::Eq: return actual == expected;
    case CompareOp::Ne: return actual != expected;
    case CompareOp::Ge:
    case CompareOp::Le: {
      // Ordering is defined on numbers only.
      const auto* a = std::get_if<double>(&actual);
      const auto* b = std::get_if<double>(&expected);
      if (!a || !b) return false;
      return op == CompareOp::Ge ? *a >= *b : *a <= *b;
    }
  }
  return false;
}

const AttributeValue* lookup(const SubjectView& subject, const std::string& name) {
  if (subject.attributes == nullptr) return nullptr;
  auto it = subject.attributes->find(name);
  return it == subject.attributes->end() ? nullptr : &it->second;
}

std::string_view op_symbol(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "!=";
    case CompareOp::Ge: return ">=";
    case CompareOp::Le: return "<=";
  }
  return "=";
}

CompareOp op_from_symbol(const std::string& s) {
  if (s == "=" || s == "==") return CompareOp::Eq;
  if (s == "!=") return CompareOp::Ne;
  if (s == ">=") return CompareOp::Ge;
  if (s == "<=") return CompareOp::Le;
  throw Error(ErrorCode::SchemaError, "unknown comparison operator '" + s + "'");
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

bool evaluate_predicate(const Predicate& predicate, const SubjectView& subject) {
  return std::visit(
      overloaded{
          [](const AlwaysTrue&) { return true; },
          [&](const AllOf& p) {
            return std::all_of(p.terms.begin(), p.terms.end(),
                               [&](const auto& t) { return evaluate_predicate(t, subject); });
          },
          [&](const AnyOf& p) {
            return std::any_of(p.terms.begin(), p.terms.end(),
                               [&](const auto& t) { return evaluate_predicate(t, subject); });
          },
          [&](const Negation& p) { return !evaluate_predicate(*p.term, subject); },
          [&](const Comparison& p) {
            const auto* v = lookup(subject, p.attribute);
            return v != nullptr && compare(*v, p.op, p.value);
          },
          [&](const Membership& p) {
            const auto* v = lookup(subject, p.attribute);
            return v != nullptr && std::find(p.values.begin(), p.values.end(), *v) != p.values.end();
          },
          [&](const OrgAllowlist& p) { return p.org_ids.contains(subject.org_id); },
      },
      predicate.node);
}

std::set<std::string> referenced_attributes(const Predicate& predicate) {
  std::set<std::string> out;
  auto collect = [&](auto&& self, const Predicate& p) -> void {
    std::visit(overloaded{
                   [](const AlwaysTrue&) {},
                   [](const OrgAllowlist&) {},
                   [&](const AllOf& a) { for (const auto& t : a.terms) self(self, t); },
                   [&](const AnyOf& a) { for (const auto& t : a.terms) self(self, t); },
                   [&](const Negation& n) { self(self, *n.term); },
                   [&](const Comparison& c) { out.insert(c.attribute); },
                   [&](const Membership& m) { out.insert(m.attribute); },
               },
               p.node);
  };
  collect(collect, predicate);
  return out;
}

ordered_json to_json(const Predicate& predicate) {
  return std::visit(
      overloaded{
          [](const AlwaysTrue&) { return ordered_json{{"always", true}}; },
          [](const AllOf& p) {
            auto terms = ordered_json::array();
            for (const auto& t : p.terms) terms.push_back(to_json(t));
            return ordered_json{{"all", terms}};
          },
          [](const AnyOf& p) {
            auto terms = ordered_json::array();
            for (const auto& t : p.terms) terms.push_back(to_json(t));
            return ordered_json{{"any", terms}};
          },
          [](const Negation& p) { return ordered_json{{"not", to_json(*p.term)}}; },
          [](const Comparison& p) {
            return ordered_json{
                {"attr", p.attribute}, {"op", op_symbol(p.op)}, {"value", value_to_json(p.value)}};
          },
          [](const Membership& p) {
            auto values = ordered_json::array();
            for (const auto& v : p.values) values.push_back(value_to_json(v));
            return ordered_json{{"attr", p.attribute}, {"in", values}};
          },
          [](const OrgAllowlist& p) { return ordered_json{{"org_in", p.org_ids}}; },
      },
      predicate.node);
}

Predicate predicate_from_json(const ordered_json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::SchemaError, "predicate must be an object");
  auto terms_of = [](const ordered_json& arr) {
    if (!arr.is_array()) throw Error(ErrorCode::SchemaError, "predicate list must be an array");
    std::vector<Predicate> terms;
    for (const auto& t : arr) terms.push_back(predicate_from_json(t));
    return terms;
  };
  if (doc.contains("always")) return {AlwaysTrue{}};
  if (doc.contains("all")) return {AllOf{terms_of(doc.at("all"))}};
  if (doc.contains("any")) return {AnyOf{terms_of(doc.at("any"))}};
  if (doc.contains("not")) {
    return {Negation{std::make_shared<const Predicate>(predicate_from_json(doc.at("not")))}};
  }
  if (doc.contains("org_in")) {
    OrgAllowlist allow;
    for (const auto& id : doc.at("org_in")) allow.org_ids.insert(id.get<std::string>());
    return {allow};
  }
  if (doc.contains("attr")) {
    auto attr = doc.at("attr").get<std::string>();
    if (doc.contains("in")) {
      Membership m{attr, {}};
      for (const auto& v : doc.at("in")) m.values.push_back(value_from_json(v, "in"));
      return {m};
    }
    if (!doc.contains("op") || !doc.contains("value")) {
      throw Error(ErrorCode::SchemaError, "comparison on '" + attr + "' needs op and value");
    }
    return {Comparison{attr, op_from_symbol(doc.at("op").get<std::string>()),
                       value_from_json(doc.at("value"), attr)}};
  }
  throw Error(ErrorCode::SchemaError, "unrecognised predicate " + doc.dump());
}

// ---------------------------------------------------------------------------
// Policies

bool is_prefix(const std::set<int>& levels) {
  int expected = 1;
  for (int l : levels) {
    if (l != expected++) return false;
  }
  return true;
}

namespace {

std::string describe(const Rule& rule, std::size_t index) {
  return "rule '" + rule.id + "' (#" + std::to_string(index + 1) + ")";
}

std::string describe(const std::set<int>& levels) {
  std::string out = "{";
  for (int l : levels) out += (out.size() > 1 ? "," : "") + std::to_string(l);
  return out + "}";
}

}  // namespace

void check_policy_shape(const AccessPolicy& policy, std::optional<int> group_count) {
  for (std::size_t i = 0; i < policy.rules.size(); ++i) {
    const auto& rule = policy.rules[i];
    for (int level : rule.grant) {
      if (level < 1 || (group_count && level > *group_count)) {
        throw Error(ErrorCode::PolicyShapeError,
                    describe(rule, i) + " grants level " + std::to_string(level) +
                        " outside the share's sensitive groups");
      }
    }
    if (policy.scheme == HashScheme::Multi && !is_prefix(rule.grant)) {
      throw Error(ErrorCode::PolicyShapeError,
                  describe(rule, i) + " grants " + describe(rule.grant) +
                      ", which is not a prefix {1..k} as multi-hash requires");
    }
    if (policy.declared_attributes) {
      for (const auto& attr : referenced_attributes(rule.predicate)) {
        if (!policy.declared_attributes->contains(attr)) {
          throw Error(ErrorCode::PolicyShapeError,
                      describe(rule, i) + " references undeclared attribute '" + attr + "'");
        }
      }
    }
  }
}

ordered_json to_json(const AccessPolicy& policy) {
  ordered_json doc;
  doc["policy_id"] = policy.policy_id;
  doc["engine"] = policy.engine;
  doc["scheme"] = to_string(policy.scheme);
  if (policy.declared_attributes) doc["attributes"] = *policy.declared_attributes;
  auto rules = ordered_json::array();
  for (const auto& r : policy.rules) {
    ordered_json rule;
    rule["id"] = r.id;
    rule["if"] = to_json(r.predicate);
    rule["grant"] = r.grant;
    if (r.withheld) rule["private"] = true;
    rules.push_back(std::move(rule));
  }
  doc["rules"] = std::move(rules);
  return doc;
}

AccessPolicy policy_from_json(const ordered_json& doc) {
  AccessPolicy policy;
  try {
    policy.policy_id = doc.at("policy_id").get<std::string>();
    policy.engine = doc.value("engine", std::string("attribute-rules"));
    policy.scheme = scheme_from_string(doc.at("scheme").get<std::string>());
    if (doc.contains("attributes")) {
      policy.declared_attributes = doc.at("attributes").get<std::set<std::string>>();
    }
    const auto& rules = doc.at("rules");
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const auto& r = rules[i];
      Rule rule;
      rule.id = r.value("id", "rule-" + std::to_string(i + 1));
      rule.predicate = predicate_from_json(r.at("if"));
      rule.grant = r.at("grant").get<std::set<int>>();
      rule.withheld = r.value("private", false);
      policy.rules.push_back(std::move(rule));
    }
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("policy: ") + e.what());
  }
  check_policy_shape(policy);
  return policy;
}

AccessPolicy parse_policy(std::string_view document) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(document);
  } catch (const ordered_json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("policy is not valid JSON: ") + e.what());
  }
  return policy_from_json(doc);
}

AccessPolicy load_policy(const std::filesystem::path& path) {
  return parse_policy(to_string(read_file(path)));
}

ordered_json public_portion(const AccessPolicy& policy) {
  auto doc = to_json(policy);
  for (auto& rule : doc["rules"]) {
    if (rule.value("private", false)) rule["if"] = ordered_json{{"withheld", true}};
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Engines

namespace {

GrantDecision first_match(const AccessPolicy& policy, const SubjectView& subject) {
  for (const auto& rule : policy.rules) {
    if (evaluate_predicate(rule.predicate, subject)) return {rule.grant, rule.id};
  }
  return {};
}

}  // namespace

GrantDecision AttributeRulesEngine::evaluate(const AccessPolicy& policy,
                                             const VerifiedCredentials& creds,
                                             const EvaluationContext&) const {
  return first_match(policy, SubjectView{creds.org_id(), &creds.credentials().attributes});
}

GrantDecision IdentityAllowlistEngine::evaluate(const AccessPolicy& policy,
                                                const VerifiedCredentials& creds,
                                                const EvaluationContext&) const {
  return first_match(policy, SubjectView{creds.org_id(), nullptr});
}

EngineRegistry::EngineRegistry() {
  engines_["attribute-rules"] = std::make_shared<AttributeRulesEngine>();
  engines_["identity-allowlist"] = std::make_shared<IdentityAllowlistEngine>();
}

void EngineRegistry::register_engine(std::shared_ptr<const PolicyEngine> engine) {
  std::unique_lock lock(mutex_);
  auto name = engine->name();
  if (!engines_.emplace(name, std::move(engine)).second) {
    throw Error(ErrorCode::DuplicateEngineName, name);
  }
}

std::shared_ptr<const PolicyEngine> EngineRegistry::find(const std::string& name) const {
  std::shared_lock lock(mutex_);
  auto it = engines_.find(name);
  if (it == engines_.end()) throw Error(ErrorCode::UnknownEngine, name);
  return it->second;
}

std::vector<std::string> EngineRegistry::names() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [name, _] : engines_) out.push_back(name);
  return out;
}

GrantDecision EngineRegistry::evaluate(const AccessPolicy& policy, const VerifiedCredentials& creds,
                                       const EvaluationContext& ctx) const {
  auto decision = find(policy.engine)->evaluate(policy, creds, ctx);
  for (int level : decision.levels) {
    if (level < 1 || level > ctx.group_count) {
      throw Error(ErrorCode::PolicyShapeError, "engine '" + policy.engine + "' granted level " +
                                                   std::to_string(level) + " outside 1.." +
                                                   std::to_string(ctx.group_count));
    }
  }
  if (policy.scheme == HashScheme::Multi && !is_prefix(decision.levels)) {
    throw Error(ErrorCode::PolicyShapeError,
                "engine '" + policy.engine + "' granted non-prefix " + describe(decision.levels));
  }
  return decision;
}

}  // namespace ctishare
