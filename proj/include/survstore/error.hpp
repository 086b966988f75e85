#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace survstore {

/// Machine-readable failure classes shared by every module. Each maps to one
/// wire code (see code_name) and one HTTP status class (see http_status).
enum class ErrorCode {
  // units / survcom
  MalformedAngle,
  OutOfRange,
  NegativeArea,
  CoincidentPoints,
  TooFewVertices,
  DegenerateEdge,
  EmptyObservations,
  InvalidArgument,
  InconsistentRadiusLength,
  DeflectionOutOfRange,
  MalformedRow,
  NoBackSightFirst,
  // registries
  NotFound,
  DuplicateName,
  InvalidCoordinate,
  BadPhotoPath,
  UnknownInstrument,
  InsufficientStock,
  EmptyDetails,
  AlreadyReturned,
  Deleted,
  AlreadyDeleted,
  NotDeleted,
  OpenLending,
  ConfirmationRequired,
  InvalidRange,
  WouldBreakConservation,
  NegativeCount,
  MalformedCsv,
  // persistence / backup
  SchemaMismatch,
  CorruptTable,
  Inaccessible,
  StoreLocked,
  IoFailure,
  DigestMismatch,
  TargetNotEmpty,
  NetworkUnreachable,
  RemoteRejected,
  // transport
  MalformedRequest,
  Internal,
};

std::string_view code_name(ErrorCode code);
int http_status(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, nlohmann::json details = nullptr)
      : std::runtime_error(message), code_(code), details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& details() const noexcept { return details_; }

 private:
  ErrorCode code_;
  nlohmann::json details_;
};

}  // namespace survstore
