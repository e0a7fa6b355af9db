#include "ctishare/scenario.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "ctishare/error.hpp"

namespace ctishare {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

ordered_json load_json_file(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  try {
    return ordered_json::parse(bytes.begin(), bytes.end());
  } catch (const ordered_json::parse_error& e) {
    config_error(path.string() + ": " + e.what());
  }
}

CtiBundle bundle_from(const ordered_json& v, const std::filesystem::path& base) {
  if (v.is_string()) return load_bundle(base / v.get<std::string>());
  if (v.is_object()) return parse_bundle(v.dump());
  config_error("share bundle must be a path or an object");
}

AccessPolicy policy_from(const ordered_json& v, const std::filesystem::path& base) {
  if (v.is_string()) return policy_from_json(load_json_file(base / v.get<std::string>()));
  if (v.is_object()) return policy_from_json(v);
  config_error("share policy must be a path or an object");
}

}  // namespace

ScenarioConfig scenario_from_json(const ordered_json& doc, const std::filesystem::path& base_dir) {
  ScenarioConfig cfg;
  try {
    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
    cfg.gas_model = gas_model_from_string(doc.value("gas_model", std::string("calibrated")));
    auto mode = doc.value("mode", std::string("deterministic"));
    if (mode == "deterministic") {
      cfg.mode = RunMode::Deterministic;
    } else if (mode == "concurrent") {
      cfg.mode = RunMode::Concurrent;
    } else {
      config_error("unknown mode '" + mode + "'");
    }
    if (doc.contains("issuers")) cfg.issuers = doc.at("issuers").get<std::vector<std::string>>();

    std::set<std::string> org_ids;
    for (const auto& o : doc.at("organisations")) {
      OrgSpec spec;
      spec.id = o.at("id").get<std::string>();
      if (!org_ids.insert(spec.id).second) config_error("duplicate organisation '" + spec.id + "'");
      auto role = o.value("role", std::string("consumer"));
      if (role != "producer" && role != "consumer") config_error("unknown role '" + role + "'");
      spec.role = role == "producer" ? Role::Producer : Role::Consumer;
      spec.issuer = o.value("issuer", cfg.issuers.empty() ? std::string() : cfg.issuers.front());
      if (o.contains("attributes")) {
        CredentialSet tmp = credentials_from_json(
            ordered_json{{"org_id", spec.id}, {"issuer_id", ""}, {"attributes", o.at("attributes")}});
        spec.attributes = std::move(tmp.attributes);
      }
      spec.forge_credentials = o.value("forge_credentials", false);
      if (o.contains("malicious_towards")) {
        spec.malicious_towards = o.at("malicious_towards").get<std::set<std::string>>();
      }
      cfg.organisations.push_back(std::move(spec));
    }

    std::set<std::string> share_keys;
    for (const auto& s : doc.value("shares", ordered_json::array())) {
      ShareSpec spec;
      spec.key = s.at("id").get<std::string>();
      if (!share_keys.insert(spec.key).second) config_error("duplicate share '" + spec.key + "'");
      spec.producer = s.at("producer").get<std::string>();
      if (!org_ids.contains(spec.producer)) config_error("unknown producer '" + spec.producer + "'");
      spec.bundle = bundle_from(s.at("bundle"), base_dir);
      spec.policy = policy_from(s.at("policy"), base_dir);
      spec.scheme = scheme_from_string(s.value("scheme", std::string(to_string(spec.policy.scheme))));
      cfg.shares.push_back(std::move(spec));
    }

    for (const auto& r : doc.value("requests", ordered_json::array())) {
      RequestSpec spec{r.at("consumer").get<std::string>(), r.at("share").get<std::string>()};
      if (!org_ids.contains(spec.consumer)) config_error("unknown consumer '" + spec.consumer + "'");
      if (!share_keys.contains(spec.share)) config_error("unknown share '" + spec.share + "'");
      cfg.requests.push_back(std::move(spec));
    }
    for (const auto& org : cfg.organisations) {
      if (!org.issuer.empty() &&
          std::find(cfg.issuers.begin(), cfg.issuers.end(), org.issuer) == cfg.issuers.end()) {
        config_error("organisation '" + org.id + "' names unknown issuer '" + org.issuer + "'");
      }
    }
  } catch (const ordered_json::exception& e) {
    config_error(std::string("scenario: ") + e.what());
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(load_json_file(path), path.parent_path());
}

std::string ScenarioTranscript::to_jsonl() const {
  std::string out;
  for (const auto& line : lines) out += line.dump() + "\n";
  return out;
}

const ConsumerOutcome* ScenarioTranscript::outcome_for(const std::string& consumer,
                                                       const std::string& share_key) const {
  for (const auto& o : outcomes) {
    if (o.consumer == consumer && o.share_key == share_key) return &o;
  }
  return nullptr;
}

ScenarioRunner::ScenarioRunner(ScenarioConfig config, std::filesystem::path store_root)
    : config_(std::move(config)),
      ledger_(std::make_unique<Ledger>(config_.gas_model)),
      store_(std::make_unique<ContentStore>(std::move(store_root))) {}

Organisation& ScenarioRunner::org(const std::string& id) {
  for (auto& o : orgs_) {
    if (o->id() == id) return *o;
  }
  throw Error(ErrorCode::ConfigError, "unknown organisation '" + id + "'");
}

void ScenarioRunner::run_deterministic(Environment& env) {
  for (;;) {
    std::size_t handled = 0;
    for (auto& o : orgs_) handled += poll(*o, env);
    if (handled == 0) break;
  }
}

void ScenarioRunner::run_concurrent(Environment& env) {
  const std::size_t expected = config_.requests.size();
  std::atomic<std::size_t> consumed{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);

  std::vector<std::thread> workers;
  for (auto& o : orgs_) {
    workers.emplace_back([&, org = o.get()] {
      try {
        while (consumed.load() < expected && !failed.load()) {
          auto before = org->requests().reports.size();
          poll(*org, env);
          consumed += org->requests().reports.size() - before;
          if (std::chrono::steady_clock::now() > deadline) {
            throw Error(ErrorCode::ConfigError, "concurrent run did not settle");
          }
          std::this_thread::yield();
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

ScenarioTranscript ScenarioRunner::run() {
  SeedStream master(config_.seed ? std::optional<Seed>(seed_from_u64(*config_.seed)) : std::nullopt);
  Environment env{*ledger_, *store_, engines_, issuer_registry_};

  std::map<std::string, Issuer> issuers;
  for (const auto& id : config_.issuers) {
    auto issuer = make_issuer(id, master.next("issuer:" + id));
    issuer_registry_.add(id, issuer.public_key);
    issuers.emplace(id, std::move(issuer));
  }

  std::map<std::string, std::string> org_of_address;
  for (const auto& spec : config_.organisations) {
    auto keys = keygen(master.next("org-key:" + spec.id));
    auto org = std::make_unique<Organisation>(spec.id, std::move(keys), master.fork("org:" + spec.id));
    org->register_on(*ledger_);
    org->credentials.org_id = spec.id;
    org->credentials.attributes = spec.attributes;
    if (!spec.issuer.empty()) sign_credentials(org->credentials, issuers.at(spec.issuer));
    if (spec.forge_credentials) {
      auto it = org->credentials.attributes.find("trust_score");
      if (it != org->credentials.attributes.end()) {
        it->second = 1.0;
      } else {
        org->credentials.attributes["forged"] = std::string("yes");
      }
    }
    if (!spec.malicious_towards.empty()) {
      auto victims = spec.malicious_towards;
      org->response_hook = [this, victims](ResponsePackage& pkg, const Address& consumer) {
        for (const auto& o : orgs_) {
          if (o->address() == consumer && victims.contains(o->id())) {
            for (auto& g : pkg.disclosure.groups) g.payload.back() ^= 0x01;
          }
        }
      };
    }
    org_of_address[org->address().str()] = spec.id;
    orgs_.push_back(std::move(org));
  }

  for (const auto& spec : config_.shares) {
    share_ids_[spec.key] = produce_share(org(spec.producer), env, spec.bundle, spec.policy, spec.scheme);
  }
  for (const auto& spec : config_.requests) {
    auto& consumer = org(spec.consumer);
    submit_request(consumer, env, share_ids_.at(spec.share), consumer.credentials);
  }

  if (config_.mode == RunMode::Concurrent) {
    run_concurrent(env);
  } else {
    run_deterministic(env);
  }

  ScenarioTranscript t;
  t.lines.push_back(ordered_json{{"type", "config"},
                                 {"seeded", config_.seed.has_value()},
                                 {"gas_model", to_string(config_.gas_model)},
                                 {"organisations", config_.organisations.size()},
                                 {"shares", config_.shares.size()},
                                 {"requests", config_.requests.size()}});
  for (const auto& ev : ledger_->events_since(0)) {
    t.lines.push_back(ordered_json{{"type", "event"},
                                   {"seq", ev.sequence},
                                   {"event", to_string(ev.type)},
                                   {"share_id", ev.share_id},
                                   {"request_id", ev.request_id},
                                   {"actor", org_of_address.at(ev.actor.str())},
                                   {"cid", ev.cid.str()},
                                   {"gas", ev.gas_used}});
  }

  std::map<std::uint64_t, std::string> share_key_of;
  for (const auto& [key, id] : share_ids_) share_key_of[id] = key;
  bool all_pass = true;
  for (const auto& req : ledger_->requests()) {
    ConsumerOutcome out;
    out.request_id = req.request_id;
    out.consumer = org_of_address.at(req.consumer.str());
    auto share = *ledger_->find_share(req.share_id);
    out.producer = org_of_address.at(share.producer.str());
    out.share_key = share_key_of.at(req.share_id);
    out.share_id = req.share_id;
    const auto& producer_rm = org(out.producer).requests();
    if (auto it = producer_rm.decisions.find(req.request_id); it != producer_rm.decisions.end()) {
      out.granted = it->second.grant.levels;
      out.credentials_verified = it->second.credentials_verified;
    }
    const auto& consumer_rm = org(out.consumer).requests();
    if (auto it = consumer_rm.reports.find(req.request_id); it != consumer_rm.reports.end()) {
      out.report = it->second;
    } else {
      out.report.pass = false;
    }
    auto resp = ledger_->find_response(req.request_id);
    out.exchange_gas = share.gas.gas_used + req.gas.gas_used + (resp ? resp->gas.gas_used : 0);
    all_pass = all_pass && out.report.pass;

    t.lines.push_back(ordered_json{{"type", "validation"},
                                   {"request_id", out.request_id},
                                   {"share", out.share_key},
                                   {"share_id", out.share_id},
                                   {"producer", out.producer},
                                   {"consumer", out.consumer},
                                   {"credentials_verified", out.credentials_verified},
                                   {"granted", out.granted},
                                   {"pass", out.report.pass},
                                   {"comparisons", out.report.comparisons_performed},
                                   {"exchange_gas", out.exchange_gas}});
    t.outcomes.push_back(std::move(out));
  }
  t.gas_total = ledger_->total_gas();
  t.lines.push_back(ordered_json{{"type", "summary"},
                                 {"events", ledger_->last_sequence()},
                                 {"gas_total", t.gas_total},
                                 {"all_pass", all_pass}});
  return t;
}

ScenarioTranscript run_scenario(const ScenarioConfig& config,
                                const std::filesystem::path& store_root) {
  ScenarioRunner runner(config, store_root);
  return runner.run();
}

}  // namespace ctishare
