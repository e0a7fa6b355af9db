#include "ctishare/workspace.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <nlohmann/json.hpp>

#include "ctishare/error.hpp"

namespace ctishare {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

ordered_json read_json(const fs::path& path) {
  auto bytes = read_file(path);
  try {
    return ordered_json::parse(bytes.begin(), bytes.end());
  } catch (const ordered_json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const ordered_json& doc) {
  fs::create_directories(path.parent_path());
  write_file_atomic(path, as_view(doc.dump(2) + "\n"));
}

void check_name(const std::string& name, const char* what) {
  bool ok = !name.empty() && name.size() <= 64;
  for (char c : name) {
    ok = ok && (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.');
  }
  if (!ok || name.front() == '.') {
    throw Error(ErrorCode::ConfigError, std::string("invalid ") + what + " name '" + name + "'");
  }
}

}  // namespace

Workspace::Workspace(WorkspaceOptions options) : options_(std::move(options)) {
  std::error_code ec;
  fs::create_directories(options_.home, ec);
  if (ec) throw Error(ErrorCode::IoError, options_.home.string() + ": " + ec.message());

  auto lock_path = options_.home / ".lock";
  lock_fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (lock_fd_ < 0) throw Error(ErrorCode::IoError, lock_path.string() + ": " + std::strerror(errno));
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(lock_fd_);
    lock_fd_ = -1;
    throw Error(ErrorCode::IoError, "workspace " + options_.home.string() + " is locked by another process");
  }

  try {
    if (fs::exists(ledger_path())) {
      ledger_ = Ledger::load(ledger_path());
      if (options_.gas_model && *options_.gas_model != ledger_->gas_model()) {
        throw Error(ErrorCode::ConfigError,
                    "ledger uses the " + std::string(to_string(ledger_->gas_model())) + " gas model");
      }
    } else {
      ledger_ = std::make_unique<Ledger>(options_.gas_model.value_or(GasModel::Calibrated));
    }
    store_ = std::make_unique<ContentStore>(options_.store_root.value_or(options_.home / "store"));

    auto issuer_dir = options_.home / "issuers";
    if (fs::is_directory(issuer_dir)) {
      for (const auto& entry : fs::directory_iterator(issuer_dir)) {
        if (entry.path().extension() != ".json") continue;
        auto doc = read_json(entry.path());
        issuers_.add(doc.at("issuer_id").get<std::string>(),
                     from_hex(doc.at("public_key").get<std::string>()));
      }
    }
  } catch (...) {
    ::close(lock_fd_);
    lock_fd_ = -1;
    throw;
  }
}

Workspace::~Workspace() {
  if (lock_fd_ >= 0) ::close(lock_fd_);
}

fs::path Workspace::ledger_path() const {
  return options_.ledger_path.value_or(options_.home / "ledger.jsonl");
}

SeedStream Workspace::seeds_for(const std::string& label) const {
  if (!options_.seed) return SeedStream{};
  // Keyed by ledger height so each step of a seeded command sequence differs.
  return SeedStream(seed_from_u64(*options_.seed))
      .fork(label + "@" + std::to_string(ledger_->last_sequence()));
}

bool Workspace::has_org_keys(const std::string& org_id) const {
  check_name(org_id, "organisation");
  return fs::exists(options_.home / "keys" / (org_id + ".json"));
}

KeyPair Workspace::create_org_keys(const std::string& org_id) {
  if (has_org_keys(org_id)) throw Error(ErrorCode::ConfigError, "keys for '" + org_id + "' already exist");
  auto keys = keygen(seeds_for("org-key:" + org_id).next("key"));
  write_json(options_.home / "keys" / (org_id + ".json"),
             ordered_json{{"org_id", org_id},
                          {"public_key", to_hex(keys.public_key)},
                          {"private_key", to_hex(keys.private_key.view())},
                          {"key_id", keys.key_id},
                          {"address", Address::from_public_key(keys.public_key).str()}});
  return keys;
}

Issuer Workspace::create_issuer(const std::string& issuer_id) {
  check_name(issuer_id, "issuer");
  auto path = options_.home / "issuers" / (issuer_id + ".json");
  if (fs::exists(path)) throw Error(ErrorCode::ConfigError, "issuer '" + issuer_id + "' already exists");
  auto issuer = make_issuer(issuer_id, seeds_for("issuer:" + issuer_id).next("key"));
  write_json(path, ordered_json{{"issuer_id", issuer_id},
                                {"public_key", to_hex(issuer.public_key)},
                                {"secret_key", to_hex(issuer.secret_key.view())}});
  issuers_.add(issuer_id, issuer.public_key);
  return issuer;
}

Issuer Workspace::load_issuer(const std::string& issuer_id) const {
  check_name(issuer_id, "issuer");
  auto path = options_.home / "issuers" / (issuer_id + ".json");
  if (!fs::exists(path)) throw Error(ErrorCode::UnknownIssuer, issuer_id);
  auto doc = read_json(path);
  return Issuer{issuer_id, from_hex(doc.at("public_key").get<std::string>()),
                SecretBytes(from_hex(doc.at("secret_key").get<std::string>()))};
}

Organisation Workspace::load_org(const std::string& org_id) {
  check_name(org_id, "organisation");
  auto path = options_.home / "keys" / (org_id + ".json");
  if (!fs::exists(path)) {
    throw Error(ErrorCode::ConfigError, "no keys for '" + org_id + "' (run keygen first)");
  }
  auto doc = read_json(path);
  auto keys = keypair_from_private(SecretBytes(from_hex(doc.at("private_key").get<std::string>())));
  Organisation org(org_id, std::move(keys), seeds_for("org:" + org_id));

  auto state_dir = options_.home / "producer" / org_id;
  if (fs::is_directory(state_dir)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(state_dir)) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      auto state = producer_state_from_json(read_json(file));
      org.claim_role(state.share_id, Role::Producer);
      org.data().store_share(std::move(state));
    }
  }
  for (const auto& req : ledger_->requests()) {
    if (req.consumer == org.address()) {
      org.claim_role(req.share_id, Role::Consumer);
      org.requests().submitted[req.request_id] = req.share_id;
    }
  }
  return org;
}

void Workspace::save_producer_state(const std::string& org_id, const ProducerShareState& state) {
  check_name(org_id, "organisation");
  write_json(options_.home / "producer" / org_id / (std::to_string(state.share_id) + ".json"),
             to_json(state));
}

void Workspace::commit() { ledger_->save(ledger_path()); }

}  // namespace ctishare
