#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctishare {

enum class ErrorCode {
  // core model
  EmptyBundle,
  MissingLevel,
  SchemaError,
  DuplicateObjectId,
  EmptyGroup,
  // integrity
  NonceCountMismatch,
  SchemeMismatch,
  NonPrefixDisclosure,
  MalformedPackage,
  // policy
  UnknownIssuer,
  BadSignature,
  PolicyShapeError,
  DuplicateEngineName,
  UnknownEngine,
  // envelope
  DecryptionFailure,
  // content store
  EmptyBlob,
  NotFound,
  IntegrityError,
  InvalidCid,
  // ledger
  AlreadyRegistered,
  UnregisteredCaller,
  BadMetadata,
  UnknownShare,
  SelfRequest,
  UnknownRequest,
  NotProducer,
  AlreadyResponded,
  // orchestration / bench / tooling
  RoleConflict,
  TooManyGroups,
  ConfigError,
  IoError,
};

std::string_view error_name(ErrorCode code);

/// Domain error carrying a stable code. what() reads "<Name>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace ctishare
