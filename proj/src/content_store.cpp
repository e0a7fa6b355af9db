#include "ctishare/content_store.hpp"

#include <algorithm>

#include "ctishare/error.hpp"

namespace fs = std::filesystem;

namespace ctishare {

Cid Cid::of(ByteView blob) { return Cid(std::string(kPrefix) + to_hex(sha256(blob))); }

Cid Cid::parse(std::string_view text) {
  if (!text.starts_with(kPrefix)) {
    throw Error(ErrorCode::InvalidCid, "'" + std::string(text) + "' lacks sha256: prefix");
  }
  auto hex = text.substr(kPrefix.size());
  bool ok = hex.size() == 64 && std::all_of(hex.begin(), hex.end(), [](char c) {
              return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
            });
  if (!ok) throw Error(ErrorCode::InvalidCid, "'" + std::string(text) + "' is not 64 lowercase hex");
  return Cid(std::string(text));
}

ContentStore::ContentStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "objects");
  for (const auto& shard : fs::directory_iterator(root_ / "objects")) {
    if (!shard.is_directory()) continue;
    for (const auto& entry : fs::directory_iterator(shard.path())) {
      auto name = entry.path().filename().string();
      if (!entry.is_regular_file() || name.find('.') != std::string::npos) continue;
      try {
        index_.insert(Cid::parse(std::string(Cid::kPrefix) + name));
      } catch (const Error&) {
        // foreign file; audit ignores it too
      }
    }
  }
}

fs::path ContentStore::object_path(const Cid& cid) const {
  auto hex = std::string(cid.hex());
  return root_ / "objects" / hex.substr(0, 2) / hex;
}

Cid ContentStore::put(ByteView blob) {
  if (blob.empty()) throw Error(ErrorCode::EmptyBlob, "refusing to store an empty blob");
  auto cid = Cid::of(blob);
  {
    std::shared_lock lock(mutex_);
    if (index_.contains(cid)) return cid;
  }
  // Concurrent puts of the same bytes write identical files; rename is atomic.
  write_file_atomic(object_path(cid), blob);
  std::unique_lock lock(mutex_);
  index_.insert(cid);
  return cid;
}

Bytes ContentStore::get(const Cid& cid) const {
  {
    std::shared_lock lock(mutex_);
    if (!index_.contains(cid)) throw Error(ErrorCode::NotFound, cid.str());
  }
  Bytes data;
  try {
    data = read_file(object_path(cid));
  } catch (const Error&) {
    throw Error(ErrorCode::IntegrityError, cid.str() + " is indexed but unreadable");
  }
  if (Cid::of(data) != cid) throw Error(ErrorCode::IntegrityError, cid.str() + " content mismatch");
  return data;
}

bool ContentStore::contains(const Cid& cid) const {
  std::shared_lock lock(mutex_);
  return index_.contains(cid);
}

std::size_t ContentStore::size() const {
  std::shared_lock lock(mutex_);
  return index_.size();
}

std::vector<Cid> ContentStore::list() const {
  std::shared_lock lock(mutex_);
  return {index_.begin(), index_.end()};
}

std::vector<ContentStore::AuditFinding> ContentStore::audit() const {
  std::vector<AuditFinding> findings;
  for (const auto& cid : list()) {
    try {
      auto data = read_file(object_path(cid));
      if (Cid::of(data) != cid) findings.push_back({cid, "digest mismatch"});
    } catch (const Error&) {
      findings.push_back({cid, "unreadable"});
    }
  }
  return findings;
}

void ContentStore::for_each_raw(const std::function<void(const Cid&, ByteView)>& fn) const {
  for (const auto& cid : list()) {
    auto data = read_file(object_path(cid));
    fn(cid, data);
  }
}

}  // namespace ctishare
