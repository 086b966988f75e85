#include "survstore/error.hpp"

namespace survstore {

std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedAngle: return "MALFORMED_ANGLE";
    case ErrorCode::OutOfRange: return "OUT_OF_RANGE";
    case ErrorCode::NegativeArea: return "NEGATIVE_AREA";
    case ErrorCode::CoincidentPoints: return "COINCIDENT_POINTS";
    case ErrorCode::TooFewVertices: return "TOO_FEW_VERTICES";
    case ErrorCode::DegenerateEdge: return "DEGENERATE_EDGE";
    case ErrorCode::EmptyObservations: return "EMPTY_OBSERVATIONS";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::InconsistentRadiusLength: return "INCONSISTENT_RADIUS_LENGTH";
    case ErrorCode::DeflectionOutOfRange: return "DEFLECTION_OUT_OF_RANGE";
    case ErrorCode::MalformedRow: return "MALFORMED_ROW";
    case ErrorCode::NoBackSightFirst: return "NO_BACKSIGHT_FIRST";
    case ErrorCode::NotFound: return "NOT_FOUND";
    case ErrorCode::DuplicateName: return "DUPLICATE_NAME";
    case ErrorCode::InvalidCoordinate: return "INVALID_COORDINATE";
    case ErrorCode::BadPhotoPath: return "BAD_PHOTO_PATH";
    case ErrorCode::UnknownInstrument: return "UNKNOWN_INSTRUMENT";
    case ErrorCode::InsufficientStock: return "INSUFFICIENT_STOCK";
    case ErrorCode::EmptyDetails: return "EMPTY_DETAILS";
    case ErrorCode::AlreadyReturned: return "ALREADY_RETURNED";
    case ErrorCode::Deleted: return "DELETED";
    case ErrorCode::AlreadyDeleted: return "ALREADY_DELETED";
    case ErrorCode::NotDeleted: return "NOT_DELETED";
    case ErrorCode::OpenLending: return "OPEN_LENDING";
    case ErrorCode::ConfirmationRequired: return "CONFIRMATION_REQUIRED";
    case ErrorCode::InvalidRange: return "INVALID_RANGE";
    case ErrorCode::WouldBreakConservation: return "WOULD_BREAK_CONSERVATION";
    case ErrorCode::NegativeCount: return "NEGATIVE_COUNT";
    case ErrorCode::MalformedCsv: return "MALFORMED_CSV";
    case ErrorCode::SchemaMismatch: return "SCHEMA_MISMATCH";
    case ErrorCode::CorruptTable: return "CORRUPT_TABLE";
    case ErrorCode::Inaccessible: return "INACCESSIBLE";
    case ErrorCode::StoreLocked: return "STORE_LOCKED";
    case ErrorCode::IoFailure: return "IO_FAILURE";
    case ErrorCode::DigestMismatch: return "DIGEST_MISMATCH";
    case ErrorCode::TargetNotEmpty: return "TARGET_NOT_EMPTY";
    case ErrorCode::NetworkUnreachable: return "NETWORK_UNREACHABLE";
    case ErrorCode::RemoteRejected: return "REMOTE_REJECTED";
    case ErrorCode::MalformedRequest: return "MALFORMED_REQUEST";
    case ErrorCode::Internal: return "INTERNAL";
  }
  return "INTERNAL";
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRequest:
    case ErrorCode::MalformedCsv:
      return 400;
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::DuplicateName:
    case ErrorCode::InsufficientStock:
    case ErrorCode::AlreadyReturned:
    case ErrorCode::Deleted:
    case ErrorCode::AlreadyDeleted:
    case ErrorCode::NotDeleted:
    case ErrorCode::OpenLending:
    case ErrorCode::WouldBreakConservation:
    case ErrorCode::TargetNotEmpty:
    case ErrorCode::StoreLocked:
      return 409;
    case ErrorCode::SchemaMismatch:
    case ErrorCode::CorruptTable:
    case ErrorCode::Inaccessible:
    case ErrorCode::IoFailure:
    case ErrorCode::DigestMismatch:
    case ErrorCode::NetworkUnreachable:
    case ErrorCode::RemoteRejected:
    case ErrorCode::Internal:
      return 500;
    default:
      return 422;
  }
}

}  // namespace survstore
