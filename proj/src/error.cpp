#include "stylefx/error.hpp"

namespace stylefx {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::MissingEmbedding: return "MissingEmbedding";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnknownTopic: return "UnknownTopic";
    case ErrorKind::UnknownFeature: return "UnknownFeature";
    case ErrorKind::BackendUnavailable: return "BackendUnavailable";
    case ErrorKind::ProtocolError: return "ProtocolError";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InconsistentRecords: return "InconsistentRecords";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidPosition: return "InvalidPosition";
    case ErrorKind::InvalidLayer: return "InvalidLayer";
    case ErrorKind::SequenceTooLong: return "SequenceTooLong";
    case ErrorKind::ChecksumError: return "ChecksumError";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::SelectionFailed: return "SelectionFailed";
    case ErrorKind::NotBaked: return "NotBaked";
    case ErrorKind::MissingReference: return "MissingReference";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace stylefx
