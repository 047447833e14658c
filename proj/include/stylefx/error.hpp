#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stylefx {

enum class ErrorKind {
  EmptyInput,
  MissingEmbedding,
  ParseError,
  UnknownTopic,
  UnknownFeature,
  BackendUnavailable,
  ProtocolError,
  InvalidSpec,
  InconsistentRecords,
  InvalidConfig,
  InvalidPosition,
  InvalidLayer,
  SequenceTooLong,
  ChecksumError,
  InsufficientData,
  SelectionFailed,
  NotBaked,
  MissingReference,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` carries the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace stylefx
