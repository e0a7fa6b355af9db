#include "ctishare/orchestration.hpp"

#include <nlohmann/json.hpp>

#include "ctishare/error.hpp"

namespace ctishare {

using nlohmann::ordered_json;

namespace {

ordered_json parse_json(ByteView bytes, const char* what) {
  try {
    return ordered_json::parse(bytes.begin(), bytes.end());
  } catch (const ordered_json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string(what) + " is not valid JSON: " + e.what());
  }
}

Bytes dump_bytes(const ordered_json& doc) { return to_bytes(doc.dump()); }

}  // namespace

// ---------------------------------------------------------------------------
// Wire formats

Bytes PublicShareBlob::serialize() const {
  ordered_json doc;
  doc["format"] = "ctishare.share.v1";
  doc["bundle_id"] = bundle_id;
  doc["non_sensitive"] = to_base64(non_sensitive.payload);
  doc["integrity"] = to_json(hashes);
  doc["policy"] = ordered_json::parse(public_policy);
  return dump_bytes(doc);
}

PublicShareBlob PublicShareBlob::parse(ByteView bytes) {
  auto doc = parse_json(bytes, "share blob");
  try {
    if (doc.at("format") != "ctishare.share.v1") {
      throw Error(ErrorCode::SchemaError, "unknown share blob format");
    }
    PublicShareBlob blob;
    blob.bundle_id = doc.at("bundle_id").get<std::string>();
    blob.non_sensitive = {0, from_base64(doc.at("non_sensitive").get<std::string>())};
    blob.hashes = hash_set_from_json(doc.at("integrity"));
    blob.public_policy = doc.at("policy").dump();
    return blob;
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("share blob: ") + e.what());
  }
}

Bytes ResponsePackage::serialize() const {
  ordered_json doc;
  doc["format"] = "ctishare.response.v1";
  doc["share_id"] = share_id;
  doc["request_id"] = request_id;
  doc["disclosure"] = to_json(disclosure);
  return dump_bytes(doc);
}

ResponsePackage ResponsePackage::parse(ByteView bytes) {
  auto doc = parse_json(bytes, "response package");
  try {
    if (doc.at("format") != "ctishare.response.v1") {
      throw Error(ErrorCode::SchemaError, "unknown response format");
    }
    return {doc.at("share_id").get<std::uint64_t>(), doc.at("request_id").get<std::uint64_t>(),
            disclosure_from_json(doc.at("disclosure"))};
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("response package: ") + e.what());
  }
}

ordered_json to_json(const ProducerShareState& state) {
  ordered_json doc;
  doc["share_id"] = state.share_id;
  doc["bundle_id"] = state.bundle_id;
  doc["scheme"] = to_string(state.scheme);
  doc["cid_public"] = state.cid_public.str();
  auto groups = ordered_json::array();
  for (const auto& g : state.sensitive_groups) {
    groups.push_back({{"level", g.level}, {"payload", to_base64(g.payload)}});
  }
  doc["groups"] = std::move(groups);
  auto nonces = ordered_json::array();
  for (const auto& n : state.nonces) nonces.push_back(to_hex(n));
  doc["nonces"] = std::move(nonces);
  doc["policy"] = to_json(state.policy);
  return doc;
}

ProducerShareState producer_state_from_json(const ordered_json& doc) {
  try {
    ProducerShareState state;
    state.share_id = doc.at("share_id").get<std::uint64_t>();
    state.bundle_id = doc.at("bundle_id").get<std::string>();
    state.scheme = scheme_from_string(doc.at("scheme").get<std::string>());
    state.cid_public = Cid::parse(doc.at("cid_public").get<std::string>());
    for (const auto& g : doc.at("groups")) {
      state.sensitive_groups.push_back(
          {g.at("level").get<int>(), from_base64(g.at("payload").get<std::string>())});
    }
    for (const auto& n : doc.at("nonces")) {
      auto raw = from_hex(n.get<std::string>());
      if (raw.size() != sizeof(Nonce)) throw Error(ErrorCode::SchemaError, "bad nonce length");
      Nonce nonce{};
      std::copy(raw.begin(), raw.end(), nonce.begin());
      state.nonces.push_back(nonce);
    }
    state.policy = policy_from_json(doc.at("policy"));
    return state;
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("producer state: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Managers

void DataManager::store_share(ProducerShareState state) {
  auto id = state.share_id;
  shares_.insert_or_assign(id, std::move(state));
}

const ProducerShareState* DataManager::share(std::uint64_t share_id) const {
  auto it = shares_.find(share_id);
  return it == shares_.end() ? nullptr : &it->second;
}

ProducerShareState* DataManager::mutable_share(std::uint64_t share_id) {
  auto it = shares_.find(share_id);
  return it == shares_.end() ? nullptr : &it->second;
}

void DataManager::store_received(ReceivedCti cti) {
  auto id = cti.request_id;
  received_.insert_or_assign(id, std::move(cti));
}

const ReceivedCti* DataManager::received(std::uint64_t request_id) const {
  auto it = received_.find(request_id);
  return it == received_.end() ? nullptr : &it->second;
}

AccessDecision AccessManager::decide(const ProducerShareState& state,
                                     const std::optional<CredentialSet>& creds,
                                     const std::string& decode_failure,
                                     const Environment& env) const {
  AccessDecision decision;
  if (!creds) {
    decision.failure = decode_failure;
    return decision;
  }
  try {
    auto verified = verify_credentials(*creds, env.issuers);
    decision.credentials_verified = true;
    decision.grant = env.engines.evaluate(state.policy, verified, {state.group_count()});
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BadSignature && e.code() != ErrorCode::UnknownIssuer) throw;
    decision.failure = e.what();
  }
  return decision;
}

Organisation::Organisation(std::string org_id, KeyPair keys, SeedStream seeds)
    : id_(std::move(org_id)),
      keys_(std::move(keys)),
      address_(Address::from_public_key(keys_.public_key)),
      seeds_(seeds) {}

void Organisation::register_on(Ledger& ledger) { ledger.register_org(keys_.public_key); }

void Organisation::claim_role(std::uint64_t share_id, Role role) {
  auto [it, inserted] = roles_.emplace(share_id, role);
  if (!inserted && it->second != role) {
    throw Error(ErrorCode::RoleConflict, id_ + " already holds the other role for share " +
                                             std::to_string(share_id));
  }
}

std::optional<Role> Organisation::role_for(std::uint64_t share_id) const {
  auto it = roles_.find(share_id);
  if (it == roles_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Phases

std::uint64_t produce_share(Organisation& producer, Environment& env, const CtiBundle& bundle,
                            const AccessPolicy& policy, HashScheme scheme) {
  // Everything that can reject the share runs before the first write.
  if (!env.ledger.is_registered(producer.address())) {
    throw Error(ErrorCode::UnregisteredCaller, producer.id());
  }
  if (policy.scheme != scheme) {
    throw Error(ErrorCode::PolicyShapeError,
                "policy '" + policy.policy_id + "' is written for " +
                    std::string(to_string(policy.scheme)) + "-hash shares");
  }
  auto groups = segment(bundle);
  const auto n = static_cast<int>(groups.size()) - 1;
  check_policy_shape(policy, n);
  env.engines.find(policy.engine);

  ProducerShareState state;
  state.bundle_id = bundle.bundle_id;
  state.scheme = scheme;
  state.policy = policy;
  state.sensitive_groups.assign(std::make_move_iterator(groups.begin() + 1),
                                std::make_move_iterator(groups.end()));
  state.nonces = draw_nonces(static_cast<std::size_t>(n), producer.seeds().next("nonces"));

  PublicShareBlob blob;
  blob.bundle_id = bundle.bundle_id;
  blob.non_sensitive = std::move(groups.front());
  blob.hashes = generate_hashes(state.sensitive_groups, state.nonces, scheme);
  blob.public_policy = public_portion(policy).dump();

  state.cid_public = env.store.put(blob.serialize());
  auto [share_id, receipt] = env.ledger.share(producer.address(), state.cid_public, bundle.metadata);
  state.share_id = share_id;
  producer.claim_role(share_id, Role::Producer);
  producer.data().store_share(std::move(state));
  return share_id;
}

std::uint64_t submit_request(Organisation& consumer, Environment& env, std::uint64_t share_id,
                             const CredentialSet& creds) {
  auto share = env.ledger.find_share(share_id);
  if (!share) throw Error(ErrorCode::UnknownShare, std::to_string(share_id));
  if (share->producer == consumer.address()) {
    throw Error(ErrorCode::SelfRequest, consumer.id() + " produced share " + std::to_string(share_id));
  }
  consumer.claim_role(share_id, Role::Consumer);
  auto producer_key = env.ledger.public_key(share->producer);
  if (!producer_key) throw Error(ErrorCode::UnregisteredCaller, share->producer.str());

  auto sealed = seal(*producer_key, as_view(to_json(creds).dump()), consumer.seeds().next("seal"));
  auto cid = env.store.put(sealed.serialize());
  auto [request_id, receipt] = env.ledger.request(consumer.address(), share_id, cid);
  consumer.requests().submitted[request_id] = share_id;
  return request_id;
}

AccessDecision process_request(Organisation& producer, Environment& env, std::uint64_t request_id) {
  auto req = env.ledger.find_request(request_id);
  if (!req) throw Error(ErrorCode::UnknownRequest, std::to_string(request_id));
  auto share = env.ledger.find_share(req->share_id);
  if (share->producer != producer.address()) {
    throw Error(ErrorCode::NotProducer, producer.id() + " does not own share " +
                                            std::to_string(req->share_id));
  }
  if (env.ledger.find_response(request_id)) {
    throw Error(ErrorCode::AlreadyResponded, "request " + std::to_string(request_id));
  }
  const auto* state = producer.data().share(req->share_id);
  if (state == nullptr) {
    throw Error(ErrorCode::NotFound, "no private state for share " + std::to_string(req->share_id));
  }

  // Step 1b: fetch and open the consumer's credentials.
  std::optional<CredentialSet> creds;
  std::string decode_failure;
  try {
    auto sealed = SealedBlob::parse(env.store.get(req->cid_credentials));
    auto plain = open(producer.keys().private_key, sealed);
    creds = credentials_from_json(ordered_json::parse(plain.begin(), plain.end()));
  } catch (const Error& e) {
    decode_failure = e.what();
  } catch (const ordered_json::exception& e) {
    decode_failure = std::string("credentials: ") + e.what();
  }

  // Steps 2-4: verify, evaluate, assemble granted groups and nonces.
  auto decision = producer.access().decide(*state, creds, decode_failure, env);
  if (!decision.credentials_verified) {
    producer.local_log.push_back({request_id, "credential verification failed: " + decision.failure});
  }
  ResponsePackage package{req->share_id, request_id,
                          make_disclosure(state->sensitive_groups, state->nonces, state->scheme,
                                          decision.grant.levels)};
  if (producer.response_hook) producer.response_hook(package, req->consumer);

  // Step 5a: seal to the consumer and respond on the ledger.
  auto consumer_key = env.ledger.public_key(req->consumer);
  auto sealed = seal(*consumer_key, package.serialize(), producer.seeds().next("seal"));
  auto cid = env.store.put(sealed.serialize());
  env.ledger.respond(producer.address(), request_id, cid);
  producer.requests().decisions[request_id] = decision;
  return decision;
}

ValidationReport consume_response(Organisation& consumer, Environment& env,
                                  std::uint64_t request_id) {
  auto req = env.ledger.find_request(request_id);
  if (!req) throw Error(ErrorCode::UnknownRequest, std::to_string(request_id));
  auto resp = env.ledger.find_response(request_id);
  if (!resp) throw Error(ErrorCode::NotFound, "no response to request " + std::to_string(request_id));

  // Step 5b.
  auto plain = open(consumer.keys().private_key,
                    SealedBlob::parse(env.store.get(resp->cid_response)));
  // Step 7: the hashes published with the original share.
  auto share = env.ledger.find_share(req->share_id);
  auto published = PublicShareBlob::parse(env.store.get(share->cid_public));

  ValidationReport report;
  report.pass = false;
  std::optional<ResponsePackage> package;
  try {
    package = ResponsePackage::parse(plain);
  } catch (const Error&) {
  }
  // Step 8.
  if (package && package->share_id == req->share_id && package->request_id == request_id) {
    try {
      report = validate(package->disclosure, published.hashes);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SchemeMismatch && e.code() != ErrorCode::NonPrefixDisclosure &&
          e.code() != ErrorCode::MalformedPackage) {
        throw;
      }
      report = ValidationReport{{}, 0, false};
    }
  }
  if (report.pass) {
    consumer.data().store_received(
        {req->share_id, request_id, package->disclosure.groups, report});
  }
  consumer.requests().reports[request_id] = report;
  return report;
}

std::size_t poll(Organisation& org, Environment& env) {
  auto& rm = org.requests();
  auto events = env.ledger.events_since(rm.cursor);
  std::size_t handled = 0;
  for (const auto& ev : events) {
    if (ev.type == EventType::RequestAdded && org.data().share(ev.share_id) != nullptr &&
        !env.ledger.find_response(ev.request_id)) {
      process_request(org, env, ev.request_id);
      ++handled;
    } else if (ev.type == EventType::ResponseAdded && rm.submitted.contains(ev.request_id) &&
               !rm.reports.contains(ev.request_id)) {
      consume_response(org, env, ev.request_id);
      ++handled;
    }
    rm.cursor = ev.sequence;
  }
  return handled;
}

}  // namespace ctishare
