#pragma once

#include <compare>
#include <filesystem>
#include <functional>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "ctishare/bytes.hpp"
#include "ctishare/hash.hpp"

namespace ctishare {

/// Content identifier: "sha256:" + lowercase hex SHA-256 of the blob.
class Cid {
 public:
  Cid() = default;

  static Cid of(ByteView blob);
  /// Throws InvalidCid.
  static Cid parse(std::string_view text);

  const std::string& str() const { return text_; }
  std::string_view hex() const { return std::string_view(text_).substr(kPrefix.size()); }
  bool empty() const { return text_.empty(); }

  auto operator<=>(const Cid&) const = default;

  static constexpr std::string_view kPrefix = "sha256:";

 private:
  explicit Cid(std::string text) : text_(std::move(text)) {}
  std::string text_;
};

/// Immutable content-addressed blob store backed by
/// <root>/objects/<first-2-hex>/<cid-hex>. There is no delete or overwrite.
class ContentStore {
 public:
  /// Opens (creating if needed) the store and indexes existing objects.
  explicit ContentStore(std::filesystem::path root);

  /// Idempotent. Throws EmptyBlob.
  Cid put(ByteView blob);
  /// Verifies the digest on read. Throws NotFound or IntegrityError.
  Bytes get(const Cid& cid) const;

  bool contains(const Cid& cid) const;
  std::size_t size() const;
  std::vector<Cid> list() const;
  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path object_path(const Cid& cid) const;

  struct AuditFinding {
    Cid cid;
    std::string problem;
  };
  /// Recomputes every stored object's digest; empty result means clean.
  std::vector<AuditFinding> audit() const;

  /// Raw bytes of every object as stored (no verification), for scanners.
  void for_each_raw(const std::function<void(const Cid&, ByteView)>& fn) const;

 private:
  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  std::set<Cid> index_;
};

}  // namespace ctishare
