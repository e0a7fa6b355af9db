#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "ctishare/error.hpp"
#include "ctishare/policy.hpp"
#include "test_support.hpp"

using namespace ctishare;
using nlohmann::ordered_json;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

struct PolicyTest : ::testing::Test {
  Issuer issuer = make_issuer("test-ca", seed_from_u64(1));
  IssuerRegistry registry;
  EngineRegistry engines;

  PolicyTest() { registry.add(issuer.issuer_id, issuer.public_key); }

  CredentialSet creds(const std::string& org, std::map<std::string, AttributeValue> attrs) {
    CredentialSet c{org, std::move(attrs), "", {}};
    sign_credentials(c, issuer);
    return c;
  }

  std::set<int> grant(const AccessPolicy& policy, const CredentialSet& c, int n = 3) {
    return engines.evaluate(policy, verify_credentials(c, registry), {n}).levels;
  }
};

AccessPolicy tiers() { return load_policy(testing_support::fixture("policies/trust_tiers_multi.json")); }

}  // namespace

TEST_F(PolicyTest, SignedCredentialsVerify) {
  auto c = creds("org-b", {{"trust_score", 0.9}});
  auto v = verify_credentials(c, registry);
  EXPECT_EQ(v.org_id(), "org-b");
  EXPECT_EQ(v.credentials(), c);
}

TEST_F(PolicyTest, AlteredAttributeBreaksSignature) {
  auto c = creds("org-b", {{"trust_score", 0.5}});
  c.attributes["trust_score"] = 0.9;
  EXPECT_EQ(code_of([&] { verify_credentials(c, registry); }), ErrorCode::BadSignature);
  auto renamed = creds("org-b", {{"trust_score", 0.5}});
  renamed.org_id = "org-c";
  EXPECT_EQ(code_of([&] { verify_credentials(renamed, registry); }), ErrorCode::BadSignature);
}

TEST_F(PolicyTest, UnknownIssuer) {
  auto other = make_issuer("rogue-ca");
  CredentialSet c{"org-b", {{"trust_score", 1.0}}, "", {}};
  sign_credentials(c, other);
  EXPECT_EQ(code_of([&] { verify_credentials(c, registry); }), ErrorCode::UnknownIssuer);
}

TEST_F(PolicyTest, CredentialJsonRoundTrip) {
  auto c = creds("org-b", {{"trust_score", 0.75}, {"sector", std::string("energy")}});
  auto back = credentials_from_json(ordered_json::parse(to_json(c).dump()));
  EXPECT_EQ(back, c);
  EXPECT_NO_THROW(verify_credentials(back, registry));
}

TEST_F(PolicyTest, FirstMatchTiers) {
  auto policy = tiers();
  auto d = engines.evaluate(policy, verify_credentials(creds("a", {{"trust_score", 0.9}}), registry), {3});
  EXPECT_EQ(d.levels, (std::set<int>{1, 2, 3}));
  EXPECT_EQ(d.matched_rule, "high-trust");
  EXPECT_EQ(grant(policy, creds("b", {{"trust_score", 0.5}})), (std::set<int>{1}));
  auto deny = engines.evaluate(policy, verify_credentials(creds("c", {{"trust_score", 0.3}}), registry), {3});
  EXPECT_TRUE(deny.levels.empty());
  EXPECT_FALSE(deny.matched_rule.has_value());
  EXPECT_TRUE(grant(policy, creds("d", {})).empty());
}

TEST_F(PolicyTest, NonPrefixMultiRejectedAtLoad) {
  try {
    load_policy(testing_support::fixture("policies/non_prefix_multi.json"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PolicyShapeError);
    EXPECT_NE(std::string(e.what()).find("deep-only"), std::string::npos) << e.what();
  }
  auto doc = ordered_json::parse(R"({"policy_id":"p","engine":"attribute-rules","scheme":"multi",
    "rules":[{"if":{"always":true},"grant":[2,3]}]})");
  EXPECT_EQ(code_of([&] { policy_from_json(doc); }), ErrorCode::PolicyShapeError);
  doc["scheme"] = "single";
  EXPECT_NO_THROW(policy_from_json(doc));
}

TEST_F(PolicyTest, ShapeChecks) {
  auto policy = tiers();
  EXPECT_NO_THROW(check_policy_shape(policy, 3));
  EXPECT_EQ(code_of([&] { check_policy_shape(policy, 2); }), ErrorCode::PolicyShapeError);
  auto undeclared = ordered_json::parse(R"({"policy_id":"p","engine":"attribute-rules","scheme":"single",
    "attributes":["trust_score"],"rules":[{"if":{"attr":"sector","op":"=","value":"x"},"grant":[1]}]})");
  EXPECT_EQ(code_of([&] { policy_from_json(undeclared); }), ErrorCode::PolicyShapeError);
  auto zero = ordered_json::parse(R"({"policy_id":"p","scheme":"single","rules":[{"if":{"always":true},"grant":[0]}]})");
  EXPECT_EQ(code_of([&] { policy_from_json(zero); }), ErrorCode::PolicyShapeError);
}

TEST_F(PolicyTest, PredicateOperators) {
  std::map<std::string, AttributeValue> attrs{{"trust_score", 0.7}, {"sector", std::string("energy")}};
  std::string org = "org-x";
  SubjectView view{org, &attrs};
  auto eval = [&](const char* json) { return evaluate_predicate(predicate_from_json(ordered_json::parse(json)), view); };
  EXPECT_TRUE(eval(R"({"attr":"trust_score","op":">=","value":0.7})"));
  EXPECT_TRUE(eval(R"({"attr":"trust_score","op":"<=","value":0.7})"));
  EXPECT_FALSE(eval(R"({"attr":"trust_score","op":"=","value":0.71})"));
  EXPECT_TRUE(eval(R"({"attr":"sector","op":"!=","value":"finance"})"));
  EXPECT_FALSE(eval(R"({"attr":"sector","op":">=","value":"a"})"));
  EXPECT_TRUE(eval(R"({"attr":"sector","in":["water","energy"]})"));
  EXPECT_TRUE(eval(R"({"org_in":["org-x","org-y"]})"));
  EXPECT_TRUE(eval(R"({"all":[{"always":true},{"not":{"attr":"missing","op":"=","value":1}}]})"));
  EXPECT_FALSE(eval(R"({"any":[{"org_in":["nobody"]},{"attr":"missing","op":">=","value":0}]})"));
  EXPECT_EQ(code_of([&] { eval(R"({"attr":"x","op":"~","value":1})"); }), ErrorCode::SchemaError);
  EXPECT_EQ(code_of([&] { eval(R"({"bogus":1})"); }), ErrorCode::SchemaError);
}

TEST_F(PolicyTest, PolicyJsonRoundTripAndPublicPortion) {
  auto policy = load_policy(testing_support::fixture("policies/trust_tiers_single.json"));
  auto again = policy_from_json(ordered_json::parse(to_json(policy).dump()));
  EXPECT_EQ(to_json(again).dump(), to_json(policy).dump());
  auto pub = public_portion(policy).dump();
  EXPECT_EQ(pub.find("utilities"), std::string::npos);
  EXPECT_NE(pub.find("withheld"), std::string::npos);
  EXPECT_NE(pub.find("high-trust"), std::string::npos);
}

TEST_F(PolicyTest, DuplicateEngineName) {
  EXPECT_EQ(code_of([&] { engines.register_engine(std::make_shared<IdentityAllowlistEngine>()); }),
            ErrorCode::DuplicateEngineName);
  auto names = engines.names();
  EXPECT_NE(std::find(names.begin(), names.end(), "attribute-rules"), names.end());
  EXPECT_EQ(code_of([&] { engines.find("nope"); }), ErrorCode::UnknownEngine);
}

namespace {

// Grants the first floor(trust_score * N) levels.
class TrustFractionEngine final : public PolicyEngine {
 public:
  std::string name() const override { return "trust-fraction"; }
  GrantDecision evaluate(const AccessPolicy&, const VerifiedCredentials& creds,
                         const EvaluationContext& ctx) const override {
    GrantDecision d;
    const auto& attrs = creds.credentials().attributes;
    auto it = attrs.find("trust_score");
    if (it == attrs.end() || !std::holds_alternative<double>(it->second)) return d;
    int k = static_cast<int>(std::floor(std::get<double>(it->second) * ctx.group_count));
    for (int i = 1; i <= k; ++i) d.levels.insert(i);
    return d;
  }
};

}  // namespace

TEST_F(PolicyTest, CustomEngineSelectedByName) {
  engines.register_engine(std::make_shared<TrustFractionEngine>());
  AccessPolicy policy;
  policy.policy_id = "fraction";
  policy.engine = "trust-fraction";
  policy.scheme = HashScheme::Multi;
  for (double t : {0.0, 0.25, 0.5, 0.79, 1.0}) {
    auto g = grant(policy, creds("o", {{"trust_score", t}}), 10);
    auto expected = static_cast<std::size_t>(std::floor(t * 10));
    EXPECT_EQ(g.size(), expected);
    EXPECT_TRUE(is_prefix(g));
  }
}

TEST_F(PolicyTest, RegistryRejectsMalformedEngineOutput) {
  class Bad final : public PolicyEngine {
   public:
    std::string name() const override { return "bad"; }
    GrantDecision evaluate(const AccessPolicy&, const VerifiedCredentials&,
                           const EvaluationContext&) const override {
      return {{2}, std::nullopt};
    }
  };
  engines.register_engine(std::make_shared<Bad>());
  AccessPolicy policy;
  policy.engine = "bad";
  policy.scheme = HashScheme::Multi;
  EXPECT_EQ(code_of([&] { grant(policy, creds("o", {})); }), ErrorCode::PolicyShapeError);
  policy.scheme = HashScheme::Single;
  EXPECT_EQ(grant(policy, creds("o", {})), (std::set<int>{2}));
  EXPECT_EQ(code_of([&] { grant(policy, creds("o", {}), 1); }), ErrorCode::PolicyShapeError);
}

TEST_F(PolicyTest, IdentityAllowlistSeesOnlyOrgId) {
  auto policy = policy_from_json(ordered_json::parse(R"({"policy_id":"ids","engine":"identity-allowlist",
    "scheme":"single","rules":[
      {"id":"by-attr","if":{"attr":"trust_score","op":">=","value":0},"grant":[1,2,3]},
      {"id":"partners","if":{"org_in":["partner-1"]},"grant":[2]}]})"));
  EXPECT_EQ(grant(policy, creds("partner-1", {{"trust_score", 1.0}})), (std::set<int>{2}));
  EXPECT_TRUE(grant(policy, creds("stranger", {{"trust_score", 1.0}})).empty());
}

TEST_F(PolicyTest, MonotoneAndDeterministic) {
  auto policy = tiers();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    double a = u(rng), b = u(rng);
    if (a < b) std::swap(a, b);
    auto ga = grant(policy, creds("a", {{"trust_score", a}}));
    auto gb = grant(policy, creds("b", {{"trust_score", b}}));
    EXPECT_TRUE(std::includes(ga.begin(), ga.end(), gb.begin(), gb.end()));
    EXPECT_EQ(ga, grant(policy, creds("a", {{"trust_score", a}})));
  }
}

TEST_F(PolicyTest, DifferentialGrants) {
  auto policy = tiers();
  auto high = grant(policy, creds("a", {{"trust_score", 0.9}}));
  auto mid = grant(policy, creds("b", {{"trust_score", 0.6}}));
  EXPECT_FALSE(high.empty());
  EXPECT_FALSE(mid.empty());
  EXPECT_NE(high, mid);
}
