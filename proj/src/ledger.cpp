#include "ctishare/ledger.hpp"

#include <algorithm>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>

#include "ctishare/error.hpp"
#include "ctishare/hash.hpp"

namespace ctishare {

using nlohmann::ordered_json;

Address Address::from_public_key(ByteView public_key) {
  auto d = sha256(public_key);
  Address a;
  std::copy_n(d.begin(), a.bytes.size(), a.bytes.begin());
  return a;
}

Address Address::parse(std::string_view text) {
  if (!text.starts_with("0x") || text.size() != 42) {
    throw Error(ErrorCode::SchemaError, "address must be 0x + 40 hex chars");
  }
  auto raw = from_hex(text.substr(2));
  Address a;
  std::copy(raw.begin(), raw.end(), a.bytes.begin());
  return a;
}

std::string Address::str() const { return "0x" + to_hex(bytes); }

std::string_view to_string(GasModel model) {
  return model == GasModel::Calibrated ? "calibrated" : "linear";
}

GasModel gas_model_from_string(std::string_view name) {
  if (name == "calibrated") return GasModel::Calibrated;
  if (name == "linear") return GasModel::Linear;
  throw Error(ErrorCode::ConfigError, "unknown gas model '" + std::string(name) + "'");
}

std::string_view to_string(ContractFunction fn) {
  switch (fn) {
    case ContractFunction::Share: return "share";
    case ContractFunction::Request: return "request";
    case ContractFunction::Response: return "response";
  }
  return "share";
}

std::string_view to_string(EventType type) {
  switch (type) {
    case EventType::ShareAdded: return "ShareAdded";
    case EventType::RequestAdded: return "RequestAdded";
    case EventType::ResponseAdded: return "ResponseAdded";
  }
  return "ShareAdded";
}

std::uint64_t gas_cost(GasModel model, ContractFunction fn, std::size_t calldata_bytes) {
  if (model == GasModel::Calibrated) {
    switch (fn) {
      case ContractFunction::Share: return gas::kShare;
      case ContractFunction::Request: return gas::kRequest;
      case ContractFunction::Response: return gas::kResponse;
    }
  }
  std::uint64_t base = gas::kLinearIntrinsic;
  switch (fn) {
    case ContractFunction::Share: base += gas::kLinearShareBase; break;
    case ContractFunction::Request: base += gas::kLinearRequestBase; break;
    case ContractFunction::Response: base += gas::kLinearResponseBase; break;
  }
  return base + gas::kLinearPerByte * calldata_bytes;
}

Ledger::Ledger(GasModel model) : model_(model) {}

void Ledger::require_registered(const Address& caller) const {
  if (!orgs_.contains(caller)) throw Error(ErrorCode::UnregisteredCaller, caller.str());
}

void Ledger::emit(EventType type, std::uint64_t share_id, std::uint64_t request_id,
                  const Address& actor, const Cid& cid, std::uint64_t gas_used) {
  events_.push_back({events_.size() + 1, type, share_id, request_id, actor, cid, gas_used});
  total_gas_ += gas_used;
}

Address Ledger::register_org(ByteView public_key) {
  auto address = Address::from_public_key(public_key);
  std::unique_lock lock(mutex_);
  if (orgs_.contains(address)) throw Error(ErrorCode::AlreadyRegistered, address.str());
  Bytes key(public_key.begin(), public_key.end());
  orgs_.emplace(address, key);
  log_.emplace_back(OrgEntry{address, std::move(key)});
  return address;
}

std::optional<Bytes> Ledger::public_key(const Address& address) const {
  std::shared_lock lock(mutex_);
  auto it = orgs_.find(address);
  if (it == orgs_.end()) return std::nullopt;
  return it->second;
}

bool Ledger::is_registered(const Address& address) const {
  std::shared_lock lock(mutex_);
  return orgs_.contains(address);
}

std::pair<std::uint64_t, GasReceipt> Ledger::share(
    const Address& caller, const Cid& cid_public,
    const std::map<std::string, std::string>& metadata) {
  std::unique_lock lock(mutex_);
  require_registered(caller);
  auto tt = metadata.find("threat_type");
  if (tt == metadata.end() || tt->second.empty()) {
    throw Error(ErrorCode::BadMetadata, "metadata must carry a non-empty threat_type");
  }
  if (cid_public.empty()) throw Error(ErrorCode::InvalidCid, "share without a cid");
  std::size_t calldata = cid_public.str().size();
  for (const auto& [k, v] : metadata) calldata += k.size() + v.size();

  ShareRecord rec;
  rec.share_id = shares_.size() + 1;
  rec.producer = caller;
  rec.cid_public = cid_public;
  rec.metadata = metadata;
  rec.gas = {ContractFunction::Share, gas_cost(model_, ContractFunction::Share, calldata), model_};
  shares_.emplace(rec.share_id, rec);
  log_.emplace_back(rec);
  emit(EventType::ShareAdded, rec.share_id, 0, caller, cid_public, rec.gas.gas_used);
  return {rec.share_id, rec.gas};
}

std::pair<std::uint64_t, GasReceipt> Ledger::request(const Address& caller,
                                                     std::uint64_t share_id,
                                                     const Cid& cid_credentials) {
  std::unique_lock lock(mutex_);
  require_registered(caller);
  auto share = shares_.find(share_id);
  if (share == shares_.end()) throw Error(ErrorCode::UnknownShare, std::to_string(share_id));
  if (share->second.producer == caller) {
    throw Error(ErrorCode::SelfRequest, caller.str() + " produced share " + std::to_string(share_id));
  }
  if (cid_credentials.empty()) throw Error(ErrorCode::InvalidCid, "request without a cid");

  RequestRecord rec;
  rec.request_id = requests_.size() + 1;
  rec.share_id = share_id;
  rec.consumer = caller;
  rec.cid_credentials = cid_credentials;
  rec.gas = {ContractFunction::Request,
             gas_cost(model_, ContractFunction::Request, 8 + cid_credentials.str().size()), model_};
  requests_.emplace(rec.request_id, rec);
  log_.emplace_back(rec);
  emit(EventType::RequestAdded, share_id, rec.request_id, caller, cid_credentials,
       rec.gas.gas_used);
  return {rec.request_id, rec.gas};
}

GasReceipt Ledger::respond(const Address& caller, std::uint64_t request_id,
                           const Cid& cid_response) {
  std::unique_lock lock(mutex_);
  require_registered(caller);
  auto req = requests_.find(request_id);
  if (req == requests_.end()) throw Error(ErrorCode::UnknownRequest, std::to_string(request_id));
  const auto& share = shares_.at(req->second.share_id);
  if (share.producer != caller) {
    throw Error(ErrorCode::NotProducer,
                caller.str() + " does not own share " + std::to_string(share.share_id));
  }
  if (responses_.contains(request_id)) {
    throw Error(ErrorCode::AlreadyResponded, "request " + std::to_string(request_id));
  }
  if (cid_response.empty()) throw Error(ErrorCode::InvalidCid, "response without a cid");

  ResponseRecord rec{request_id, cid_response,
                     {ContractFunction::Response,
                      gas_cost(model_, ContractFunction::Response, 8 + cid_response.str().size()),
                      model_}};
  responses_.emplace(request_id, rec);
  log_.emplace_back(rec);
  emit(EventType::ResponseAdded, share.share_id, request_id, caller, cid_response,
       rec.gas.gas_used);
  return rec.gas;
}

std::vector<LedgerEvent> Ledger::events_since(std::uint64_t cursor) const {
  std::shared_lock lock(mutex_);
  if (cursor >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(cursor), events_.end()};
}

std::uint64_t Ledger::last_sequence() const {
  std::shared_lock lock(mutex_);
  return events_.size();
}

std::optional<ShareRecord> Ledger::find_share(std::uint64_t share_id) const {
  std::shared_lock lock(mutex_);
  auto it = shares_.find(share_id);
  if (it == shares_.end()) return std::nullopt;
  return it->second;
}

std::optional<RequestRecord> Ledger::find_request(std::uint64_t request_id) const {
  std::shared_lock lock(mutex_);
  auto it = requests_.find(request_id);
  if (it == requests_.end()) return std::nullopt;
  return it->second;
}

std::optional<ResponseRecord> Ledger::find_response(std::uint64_t request_id) const {
  std::shared_lock lock(mutex_);
  auto it = responses_.find(request_id);
  if (it == responses_.end()) return std::nullopt;
  return it->second;
}

std::vector<ShareRecord> Ledger::shares() const {
  std::shared_lock lock(mutex_);
  std::vector<ShareRecord> out;
  for (const auto& [_, s] : shares_) out.push_back(s);
  return out;
}

std::vector<RequestRecord> Ledger::requests() const {
  std::shared_lock lock(mutex_);
  std::vector<RequestRecord> out;
  for (const auto& [_, r] : requests_) out.push_back(r);
  return out;
}

std::size_t Ledger::response_count() const {
  std::shared_lock lock(mutex_);
  return responses_.size();
}

std::uint64_t Ledger::total_gas() const {
  std::shared_lock lock(mutex_);
  return total_gas_;
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

std::string Ledger::export_jsonl() const {
  std::shared_lock lock(mutex_);
  std::ostringstream out;
  out << ordered_json{{"record", "header"}, {"version", 1}, {"gas_model", to_string(model_)}}.dump()
      << '\n';
  for (const auto& entry : log_) {
    ordered_json line = std::visit(
        overloaded{
            [](const OrgEntry& o) {
              return ordered_json{{"record", "org"},
                                  {"address", o.address.str()},
                                  {"public_key", to_hex(o.public_key)}};
            },
            [](const ShareRecord& s) {
              return ordered_json{{"record", "share"},       {"share_id", s.share_id},
                                  {"producer", s.producer.str()}, {"cid", s.cid_public.str()},
                                  {"metadata", s.metadata},  {"gas", s.gas.gas_used}};
            },
            [](const RequestRecord& r) {
              return ordered_json{{"record", "request"},         {"request_id", r.request_id},
                                  {"share_id", r.share_id},      {"consumer", r.consumer.str()},
                                  {"cid", r.cid_credentials.str()}, {"gas", r.gas.gas_used}};
            },
            [](const ResponseRecord& r) {
              return ordered_json{{"record", "response"},
                                  {"request_id", r.request_id},
                                  {"cid", r.cid_response.str()},
                                  {"gas", r.gas.gas_used}};
            },
        },
        entry);
    out << line.dump() << '\n';
  }
  return out.str();
}

std::unique_ptr<Ledger> Ledger::import_jsonl(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::unique_ptr<Ledger> ledger;
  std::size_t lineno = 0;
  try {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto doc = ordered_json::parse(line);
      auto kind = doc.at("record").get<std::string>();
      if (kind == "header") {
        ledger = std::make_unique<Ledger>(gas_model_from_string(doc.at("gas_model").get<std::string>()));
        continue;
      }
      if (!ledger) throw Error(ErrorCode::SchemaError, "ledger export lacks a header line");
      std::uint64_t gas_used = 0;
      std::uint64_t expected = doc.value("gas", std::uint64_t{0});
      if (kind == "org") {
        auto address = ledger->register_org(from_hex(doc.at("public_key").get<std::string>()));
        if (address.str() != doc.at("address").get<std::string>()) {
          throw Error(ErrorCode::SchemaError, "address does not match public key");
        }
        continue;
      } else if (kind == "share") {
        auto [id, receipt] =
            ledger->share(Address::parse(doc.at("producer").get<std::string>()),
                          Cid::parse(doc.at("cid").get<std::string>()),
                          doc.at("metadata").get<std::map<std::string, std::string>>());
        if (id != doc.at("share_id").get<std::uint64_t>()) {
          throw Error(ErrorCode::SchemaError, "share ids out of sequence");
        }
        gas_used = receipt.gas_used;
      } else if (kind == "request") {
        auto [id, receipt] = ledger->request(Address::parse(doc.at("consumer").get<std::string>()),
                                             doc.at("share_id").get<std::uint64_t>(),
                                             Cid::parse(doc.at("cid").get<std::string>()));
        if (id != doc.at("request_id").get<std::uint64_t>()) {
          throw Error(ErrorCode::SchemaError, "request ids out of sequence");
        }
        gas_used = receipt.gas_used;
      } else if (kind == "response") {
        auto req = ledger->find_request(doc.at("request_id").get<std::uint64_t>());
        if (!req) throw Error(ErrorCode::UnknownRequest, "in export");
        auto producer = ledger->find_share(req->share_id)->producer;
        gas_used = ledger->respond(producer, req->request_id,
                                   Cid::parse(doc.at("cid").get<std::string>()))
                       .gas_used;
      } else {
        throw Error(ErrorCode::SchemaError, "unknown record kind '" + kind + "'");
      }
      if (gas_used != expected) throw Error(ErrorCode::SchemaError, "gas does not replay");
    }
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::SchemaError,
                "ledger export line " + std::to_string(lineno) + ": " + e.what());
  }
  if (!ledger) throw Error(ErrorCode::SchemaError, "empty ledger export");
  return ledger;
}

Digest Ledger::state_digest() const { return sha256(as_view(export_jsonl())); }

void Ledger::save(const std::filesystem::path& path) const {
  write_file_atomic(path, as_view(export_jsonl()));
}

std::unique_ptr<Ledger> Ledger::load(const std::filesystem::path& path) {
  return import_jsonl(to_string(read_file(path)));
}

}  // namespace ctishare
