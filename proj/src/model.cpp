#include "ctishare/model.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <regex>
#include <set>

#include "ctishare/error.hpp"

namespace ctishare {

using nlohmann::json;

std::string_view to_string(ObjectType type) {
  switch (type) {
    case ObjectType::Indicator: return "indicator";
    case ObjectType::Malware: return "malware";
    case ObjectType::AttackPattern: return "attack-pattern";
    case ObjectType::Vulnerability: return "vulnerability";
    case ObjectType::Identity: return "identity";
    case ObjectType::Relationship: return "relationship";
    case ObjectType::Other: return "other";
  }
  return "other";
}

ObjectType object_type_from_string(std::string_view name) {
  for (auto t : {ObjectType::Indicator, ObjectType::Malware, ObjectType::AttackPattern,
                 ObjectType::Vulnerability, ObjectType::Identity, ObjectType::Relationship}) {
    if (to_string(t) == name) return t;
  }
  if (name == "attack_pattern") return ObjectType::AttackPattern;
  return ObjectType::Other;
}

int CtiBundle::max_level() const {
  int n = 0;
  for (const auto& o : objects) n = std::max(n, o.level);
  return n;
}

Bytes object_bytes(const CtiObject& object) {
  auto type = to_string(object.type);
  Bytes out;
  out.reserve(12 + object.id.size() + type.size() + object.payload.size());
  append_u32be(out, static_cast<std::uint32_t>(object.id.size()));
  append(out, as_view(object.id));
  append_u32be(out, static_cast<std::uint32_t>(type.size()));
  append(out, as_view(type));
  append(out, object.payload);
  return out;
}

bool is_rfc3339(std::string_view text) {
  static const std::regex re(
      R"(^\d{4}-(0[1-9]|1[0-2])-(0[1-9]|[12]\d|3[01])[Tt]([01]\d|2[0-3]):[0-5]\d:([0-5]\d|60)(\.\d+)?([Zz]|[+-]([01]\d|2[0-3]):[0-5]\d)$)");
  return std::regex_match(text.begin(), text.end(), re);
}

void validate_bundle(const CtiBundle& bundle) {
  if (bundle.objects.empty()) throw Error(ErrorCode::EmptyBundle, "bundle has no objects");
  for (const char* key : {"threat_type", "created_at"}) {
    if (!bundle.metadata.contains(key)) {
      throw Error(ErrorCode::BadMetadata, std::string("metadata lacks '") + key + "'");
    }
  }
  if (!is_rfc3339(bundle.metadata.at("created_at"))) {
    throw Error(ErrorCode::BadMetadata, "created_at is not an RFC 3339 timestamp");
  }
  std::set<std::string_view> ids;
  std::set<int> levels;
  for (const auto& [object, level] : bundle.objects) {
    if (object.id.empty()) throw Error(ErrorCode::SchemaError, "object with empty id");
    if (object.payload.empty()) {
      throw Error(ErrorCode::SchemaError, "object '" + object.id + "' has an empty payload");
    }
    if (level < 0) throw Error(ErrorCode::SchemaError, "negative level on '" + object.id + "'");
    if (!ids.insert(object.id).second) throw Error(ErrorCode::DuplicateObjectId, object.id);
    levels.insert(level);
  }
  int expected = 0;
  for (int level : levels) {
    if (level != expected) {
      throw Error(ErrorCode::MissingLevel, "level " + std::to_string(expected) + " has no objects");
    }
    ++expected;
  }
}

std::vector<DataGroup> segment(const CtiBundle& bundle) {
  validate_bundle(bundle);
  const int n = bundle.max_level();
  std::vector<std::vector<const CtiObject*>> members(static_cast<std::size_t>(n) + 1);
  for (const auto& labeled : bundle.objects) {
    members[static_cast<std::size_t>(labeled.level)].push_back(&labeled.object);
  }
  std::vector<DataGroup> groups;
  groups.reserve(members.size());
  for (int level = 0; level <= n; ++level) {
    auto& objs = members[static_cast<std::size_t>(level)];
    std::sort(objs.begin(), objs.end(), [](auto* a, auto* b) { return a->id < b->id; });
    DataGroup g{level, {}};
    for (const auto* obj : objs) {
      auto encoded = object_bytes(*obj);
      append_u32be(g.payload, static_cast<std::uint32_t>(encoded.size()));
      append(g.payload, encoded);
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

std::array<std::uint8_t, 4> length_prefix(const DataGroup& group) {
  auto n = static_cast<std::uint32_t>(group.payload.size());
  return {static_cast<std::uint8_t>(n >> 24), static_cast<std::uint8_t>(n >> 16),
          static_cast<std::uint8_t>(n >> 8), static_cast<std::uint8_t>(n)};
}

Bytes canonical_bytes(const DataGroup& group) {
  if (group.payload.empty()) {
    throw Error(ErrorCode::EmptyGroup, "group " + std::to_string(group.level) + " has no payload");
  }
  Bytes out;
  out.reserve(canonical_size(group));
  append_u32be(out, static_cast<std::uint32_t>(group.payload.size()));
  append(out, group.payload);
  return out;
}

namespace {

[[noreturn]] void schema_error(const json::json_pointer& where, const std::string& what) {
  auto path = where.to_string();
  throw Error(ErrorCode::SchemaError, (path.empty() ? "/" : path) + ": " + what);
}

const json& require(const json& obj, const json::json_pointer& at, const char* key,
                    json::value_t type) {
  auto ptr = at / key;
  if (!obj.contains(key)) schema_error(ptr, "missing");
  const auto& v = obj.at(key);
  bool ok = v.type() == type ||
            (type == json::value_t::number_integer && v.is_number_unsigned());
  if (!ok) schema_error(ptr, std::string("expected ") + json(type).type_name());
  return v;
}

}  // namespace

CtiBundle parse_bundle(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("/: not valid JSON: ") + e.what());
  }
  const json::json_pointer root;
  if (!doc.is_object()) schema_error(root, "expected object");

  CtiBundle bundle;
  bundle.bundle_id = require(doc, root, "bundle_id", json::value_t::string).get<std::string>();
  const auto& meta = require(doc, root, "metadata", json::value_t::object);
  for (const auto& [k, v] : meta.items()) {
    if (!v.is_string()) schema_error(root / "metadata" / k, "expected string");
    bundle.metadata[k] = v.get<std::string>();
  }
  for (const char* key : {"threat_type", "created_at"}) {
    if (!bundle.metadata.contains(key)) schema_error(root / "metadata" / key, "missing");
  }
  if (!is_rfc3339(bundle.metadata.at("created_at"))) {
    schema_error(root / "metadata" / "created_at", "not an RFC 3339 timestamp");
  }

  const auto& objects = require(doc, root, "objects", json::value_t::array);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    auto at = root / "objects" / i;
    const auto& o = objects[i];
    if (!o.is_object()) schema_error(at, "expected object");
    LabeledObject lo;
    lo.object.id = require(o, at, "id", json::value_t::string).get<std::string>();
    if (lo.object.id.empty()) schema_error(at / "id", "empty");
    lo.object.type =
        object_type_from_string(require(o, at, "type", json::value_t::string).get<std::string>());
    const auto& level = require(o, at, "level", json::value_t::number_integer);
    if (level.get<long long>() < 0) schema_error(at / "level", "negative");
    lo.level = level.get<int>();
    if (!o.contains("payload")) schema_error(at / "payload", "missing");
    // nlohmann objects are key-ordered, so dump() is compact with sorted keys.
    lo.object.payload = to_bytes(o.at("payload").dump());
    if (!seen.insert(lo.object.id).second) {
      throw Error(ErrorCode::DuplicateObjectId, lo.object.id + " at " + at.to_string());
    }
    bundle.objects.push_back(std::move(lo));
  }
  validate_bundle(bundle);
  return bundle;
}

CtiBundle load_bundle(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  return parse_bundle(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace ctishare
