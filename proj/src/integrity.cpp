#include "ctishare/integrity.hpp"

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>

#include "ctishare/error.hpp"

namespace ctishare {

using nlohmann::ordered_json;

std::string_view to_string(HashScheme scheme) {
  return scheme == HashScheme::Single ? "single" : "multi";
}

HashScheme scheme_from_string(std::string_view name) {
  if (name == "single") return HashScheme::Single;
  if (name == "multi") return HashScheme::Multi;
  throw Error(ErrorCode::SchemaError, "unknown hash scheme '" + std::string(name) + "'");
}

namespace detail {

Digest single_digest(const Nonce& nonce, const DataGroup& group, HashWork& work) {
  Sha256 h;
  auto prefix = length_prefix(group);
  h.update(nonce).update(prefix).update(group.payload);
  work.bytes_hashed += h.bytes_consumed();
  ++work.hash_calls;
  return h.finish();
}

Digest prefix_digest(const Nonce& nonce, std::span<const DataGroup> prefix, HashWork& work) {
  Sha256 h;
  h.update(nonce);
  for (const auto& g : prefix) {
    auto len = length_prefix(g);
    h.update(len).update(g.payload);
  }
  work.bytes_hashed += h.bytes_consumed();
  ++work.hash_calls;
  return h.finish();
}

void check_package(const DisclosurePackage& package, const IntegrityHashSet& published) {
  if (package.scheme != published.scheme) {
    throw Error(ErrorCode::SchemeMismatch, "package is " + std::string(to_string(package.scheme)) +
                                               ", published set is " +
                                               std::string(to_string(published.scheme)));
  }
  if (published.hash_function_id != kHashFunctionId) {
    throw Error(ErrorCode::MalformedPackage,
                "unsupported hash function '" + published.hash_function_id + "'");
  }
  std::set<int> levels;
  for (const auto& g : package.groups) {
    if (g.payload.empty()) {
      throw Error(ErrorCode::MalformedPackage, "empty group " + std::to_string(g.level));
    }
    if (!levels.insert(g.level).second) {
      throw Error(ErrorCode::MalformedPackage, "level " + std::to_string(g.level) + " disclosed twice");
    }
  }
  std::set<int> nonce_indices;
  for (const auto& n : package.nonces) {
    if (!nonce_indices.insert(n.index).second) {
      throw Error(ErrorCode::MalformedPackage, "duplicate nonce " + std::to_string(n.index));
    }
  }

  if (package.scheme == HashScheme::Single) {
    if (nonce_indices != levels) {
      throw Error(ErrorCode::MalformedPackage, "single-hash nonces must match disclosed levels");
    }
    return;
  }
  int expected = 1;
  for (int level : levels) {
    if (level != expected++) {
      throw Error(ErrorCode::NonPrefixDisclosure,
                  "multi-hash disclosure must be levels 1.." + std::to_string(levels.size()));
    }
  }
  std::set<int> required;
  if (!levels.empty()) required.insert(static_cast<int>(levels.size()));
  if (nonce_indices != required) {
    throw Error(ErrorCode::MalformedPackage, "multi-hash disclosure must carry exactly nonce N_k");
  }
}

}  // namespace detail

namespace {

void check_nonce_count(std::span<const DataGroup> groups, std::span<const Nonce> nonces) {
  if (groups.size() != nonces.size()) {
    throw Error(ErrorCode::NonceCountMismatch, std::to_string(groups.size()) + " groups but " +
                                                   std::to_string(nonces.size()) + " nonces");
  }
}

}  // namespace

IntegrityHashSet generate_hashes(std::span<const DataGroup> groups, std::span<const Nonce> nonces,
                                 HashScheme scheme, HashWork* work) {
  check_nonce_count(groups, nonces);
  HashWork local;
  IntegrityHashSet set{scheme, {}, std::string(kHashFunctionId)};
  set.digests.reserve(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (scheme == HashScheme::Single) {
      set.digests.push_back(detail::single_digest(nonces[i], groups[i], local));
    } else {
      set.digests.push_back(detail::prefix_digest(nonces[i], groups.first(i + 1), local));
    }
  }
  if (work) *work = local;
  return set;
}

std::uint64_t modeled_bytes_hashed(std::span<const DataGroup> groups, HashScheme scheme) {
  std::uint64_t total = 0;
  std::uint64_t running = 0;
  for (const auto& g : groups) {
    running += canonical_size(g);
    total += sizeof(Nonce) + (scheme == HashScheme::Single ? canonical_size(g) : running);
  }
  return total;
}

std::vector<Nonce> draw_nonces(std::size_t n, const std::optional<Seed>& seed) {
  std::vector<Nonce> out(n);
  if (n == 0) return out;
  std::span<std::uint8_t> raw(out.front().data(), n * sizeof(Nonce));
  if (seed) {
    deterministic_fill(raw, *seed);
  } else {
    random_fill(raw);
  }
  return out;
}

DisclosurePackage make_disclosure(std::span<const DataGroup> groups, std::span<const Nonce> nonces,
                                  HashScheme scheme, const std::set<int>& levels) {
  check_nonce_count(groups, nonces);
  const int n = static_cast<int>(groups.size());
  DisclosurePackage pkg{scheme, {}, {}};
  int expected = 1;
  for (int level : levels) {
    if (level < 1 || level > n) {
      throw Error(ErrorCode::MalformedPackage, "level " + std::to_string(level) + " not in 1.." +
                                                   std::to_string(n));
    }
    if (scheme == HashScheme::Multi && level != expected++) {
      throw Error(ErrorCode::NonPrefixDisclosure, "multi-hash grants must be a prefix 1..k");
    }
    const auto idx = static_cast<std::size_t>(level - 1);
    pkg.groups.push_back(groups[idx]);
    pkg.groups.back().level = level;
    if (scheme == HashScheme::Single) pkg.nonces.push_back({level, nonces[idx]});
  }
  if (scheme == HashScheme::Multi && !levels.empty()) {
    int k = *levels.rbegin();
    pkg.nonces.push_back({k, nonces[static_cast<std::size_t>(k - 1)]});
  }
  return pkg;
}

ValidationReport validate(const DisclosurePackage& package, const IntegrityHashSet& published,
                          HashWork* work) {
  detail::check_package(package, published);
  HashWork local;
  ValidationReport report;
  const auto available = published.digests.size();

  if (package.scheme == HashScheme::Single) {
    std::map<int, const Nonce*> nonce_for;
    for (const auto& n : package.nonces) nonce_for[n.index] = &n.nonce;
    for (const auto& g : package.groups) {
      bool ok = false;
      if (g.level >= 1 && static_cast<std::size_t>(g.level) <= available) {
        auto digest = detail::single_digest(*nonce_for.at(g.level), g, local);
        ++report.comparisons_performed;
        ok = digest_equal(digest, published.digests[static_cast<std::size_t>(g.level - 1)]);
      }
      report.verdicts.push_back({g.level, ok});
      report.pass = report.pass && ok;
    }
  } else if (!package.groups.empty()) {
    std::vector<DataGroup> prefix(package.groups);
    std::sort(prefix.begin(), prefix.end(),
              [](const auto& a, const auto& b) { return a.level < b.level; });
    const auto k = prefix.size();
    bool ok = false;
    if (k <= available) {
      auto digest = detail::prefix_digest(package.nonces.front().nonce, prefix, local);
      ++report.comparisons_performed;
      ok = digest_equal(digest, published.digests[k - 1]);
    }
    for (const auto& g : prefix) report.verdicts.push_back({g.level, ok});
    report.pass = ok;
  }
  if (work) *work = local;
  return report;
}

ordered_json to_json(const IntegrityHashSet& set) {
  ordered_json doc;
  doc["scheme"] = to_string(set.scheme);
  doc["hash"] = set.hash_function_id;
  auto digests = ordered_json::array();
  for (const auto& d : set.digests) digests.push_back(to_hex(d));
  doc["digests"] = std::move(digests);
  return doc;
}

namespace {

Digest digest_from_hex(const std::string& hex) {
  auto raw = from_hex(hex);
  if (raw.size() != 32) throw Error(ErrorCode::SchemaError, "digest must be 32 bytes");
  Digest d{};
  std::copy(raw.begin(), raw.end(), d.begin());
  return d;
}

}  // namespace

IntegrityHashSet hash_set_from_json(const ordered_json& doc) {
  try {
    IntegrityHashSet set;
    set.scheme = scheme_from_string(doc.at("scheme").get<std::string>());
    set.hash_function_id = doc.at("hash").get<std::string>();
    for (const auto& hex : doc.at("digests")) {
      auto s = hex.get<std::string>();
      if (to_hex(from_hex(s)) != s) throw Error(ErrorCode::SchemaError, "digest hex not lowercase");
      set.digests.push_back(digest_from_hex(s));
    }
    return set;
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("integrity hash set: ") + e.what());
  }
}

std::string serialize(const IntegrityHashSet& set) { return to_json(set).dump(); }

ordered_json to_json(const DisclosurePackage& package) {
  ordered_json doc;
  doc["scheme"] = to_string(package.scheme);
  auto groups = ordered_json::array();
  for (const auto& g : package.groups) {
    groups.push_back({{"level", g.level}, {"payload", to_base64(g.payload)}});
  }
  doc["groups"] = std::move(groups);
  auto nonces = ordered_json::array();
  for (const auto& n : package.nonces) {
    nonces.push_back({{"index", n.index}, {"nonce", to_hex(n.nonce)}});
  }
  doc["nonces"] = std::move(nonces);
  return doc;
}

DisclosurePackage disclosure_from_json(const ordered_json& doc) {
  try {
    DisclosurePackage pkg;
    pkg.scheme = scheme_from_string(doc.at("scheme").get<std::string>());
    for (const auto& g : doc.at("groups")) {
      pkg.groups.push_back({g.at("level").get<int>(), from_base64(g.at("payload").get<std::string>())});
    }
    for (const auto& n : doc.at("nonces")) {
      auto raw = from_hex(n.at("nonce").get<std::string>());
      if (raw.size() != sizeof(Nonce)) throw Error(ErrorCode::SchemaError, "nonce must be 32 bytes");
      NonceEntry entry{n.at("index").get<int>(), {}};
      std::copy(raw.begin(), raw.end(), entry.nonce.begin());
      pkg.nonces.push_back(entry);
    }
    return pkg;
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("disclosure package: ") + e.what());
  }
}

}  // namespace ctishare
