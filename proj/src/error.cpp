#include "ctishare/error.hpp"

namespace ctishare {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyBundle: return "EmptyBundle";
    case ErrorCode::MissingLevel: return "MissingLevel";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DuplicateObjectId: return "DuplicateObjectId";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::NonceCountMismatch: return "NonceCountMismatch";
    case ErrorCode::SchemeMismatch: return "SchemeMismatch";
    case ErrorCode::NonPrefixDisclosure: return "NonPrefixDisclosure";
    case ErrorCode::MalformedPackage: return "MalformedPackage";
    case ErrorCode::UnknownIssuer: return "UnknownIssuer";
    case ErrorCode::BadSignature: return "BadSignature";
    case ErrorCode::PolicyShapeError: return "PolicyShapeError";
    case ErrorCode::DuplicateEngineName: return "DuplicateEngineName";
    case ErrorCode::UnknownEngine: return "UnknownEngine";
    case ErrorCode::DecryptionFailure: return "DecryptionFailure";
    case ErrorCode::EmptyBlob: return "EmptyBlob";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::IntegrityError: return "IntegrityError";
    case ErrorCode::InvalidCid: return "InvalidCid";
    case ErrorCode::AlreadyRegistered: return "AlreadyRegistered";
    case ErrorCode::UnregisteredCaller: return "UnregisteredCaller";
    case ErrorCode::BadMetadata: return "BadMetadata";
    case ErrorCode::UnknownShare: return "UnknownShare";
    case ErrorCode::SelfRequest: return "SelfRequest";
    case ErrorCode::UnknownRequest: return "UnknownRequest";
    case ErrorCode::NotProducer: return "NotProducer";
    case ErrorCode::AlreadyResponded: return "AlreadyResponded";
    case ErrorCode::RoleConflict: return "RoleConflict";
    case ErrorCode::TooManyGroups: return "TooManyGroups";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_name(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

}  // namespace ctishare
