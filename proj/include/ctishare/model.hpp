#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ctishare/bytes.hpp"

namespace ctishare {

enum class ObjectType { Indicator, Malware, AttackPattern, Vulnerability, Identity, Relationship, Other };

std::string_view to_string(ObjectType type);
/// STIX-style names ("attack-pattern", ...). Unrecognised names map to Other.
ObjectType object_type_from_string(std::string_view name);

struct CtiObject {
  ObjectType type = ObjectType::Other;
  std::string id;
  Bytes payload;  // UTF-8 JSON document body
};

struct LabeledObject {
  CtiObject object;
  int level = 0;  // 0 = non-sensitive, 1..N increasing sensitivity
};

struct CtiBundle {
  std::string bundle_id;
  std::map<std::string, std::string> metadata;  // requires threat_type, created_at
  std::vector<LabeledObject> objects;

  /// Highest sensitivity level present (N). Undefined on an empty bundle.
  int max_level() const;
};

/// All objects sharing one sensitivity level, concatenated canonically.
struct DataGroup {
  int level = 0;
  Bytes payload;

  friend bool operator==(const DataGroup&, const DataGroup&) = default;
};

/// u32be(|id|) || id || u32be(|type|) || type || payload
Bytes object_bytes(const CtiObject& object);

/// Checks every CtiBundle invariant; throws EmptyBundle, MissingLevel,
/// DuplicateObjectId, SchemaError or BadMetadata.
void validate_bundle(const CtiBundle& bundle);

/// Groups objects by level 0..N. Within a group, members are sorted by
/// object_id and each contributes u32be(|object_bytes|) || object_bytes.
std::vector<DataGroup> segment(const CtiBundle& bundle);

/// u32be(|payload|) || payload. Throws EmptyGroup for an empty payload.
Bytes canonical_bytes(const DataGroup& group);
inline std::size_t canonical_size(const DataGroup& group) { return 4 + group.payload.size(); }
/// The 4-byte big-endian length prefix of canonical_bytes.
std::array<std::uint8_t, 4> length_prefix(const DataGroup& group);

/// Parses the repository bundle JSON schema. Errors carry a JSON pointer.
CtiBundle parse_bundle(std::string_view document);
CtiBundle load_bundle(const std::filesystem::path& path);

/// True if `text` is an RFC 3339 date-time.
bool is_rfc3339(std::string_view text);

}  // namespace ctishare
