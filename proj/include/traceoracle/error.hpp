#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace traceoracle {

enum class ErrorCode {
  // binary codec
  BadMagic,
  UnsupportedVersion,
  UnknownOpcode,
  TruncatedRecord,
  VarintOverflow,
  UnencodableTrace,
  // json codec
  MalformedDocument,
  UnknownEventTypeCode,
  TypeMismatch,
  // model
  DimensionMismatch,
  EmptyDataset,
  InvalidConfig,
  VersionMismatch,
  CorruptCheckpoint,
  // dataset / evaluation
  EmptyManifest,
  UnknownProject,
  InvalidManifest,
  LengthMismatch,
  Io,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Binary decode/encode failure located at a byte offset.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, std::size_t offset, const std::string& message)
      : Error(code, message + " at byte offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// JSON ingestion failure or unencodable event, located at an event index.
class EventError : public Error {
 public:
  EventError(ErrorCode code, std::size_t event_index, const std::string& message)
      : Error(code, message + " at event " + std::to_string(event_index)),
        event_index_(event_index) {}

  std::size_t event_index() const noexcept { return event_index_; }

 private:
  std::size_t event_index_;
};

}  // namespace traceoracle
