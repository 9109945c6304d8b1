#include "bevforge/error.hpp"

namespace bevforge {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IndexOutOfWindow: return "IndexOutOfWindow";
    case ErrorCode::EmptyTarget: return "EmptyTarget";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::LatticeMismatch: return "LatticeMismatch";
    case ErrorCode::NonRigidRotation: return "NonRigidRotation";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::BadMaxval: return "BadMaxval";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "UnknownError";
}

}  // namespace bevforge
