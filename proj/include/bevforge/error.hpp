#pragma once

#include <stdexcept>
#include <string>

namespace bevforge {

// Every failure the library can raise intentionally.  CLI layers map these to
// exit codes; tests match on the code instead of the message text.
enum class ErrorCode {
  NonPositiveDepth,    // projection of a point at or behind the camera plane
  ShapeMismatch,       // tensor/head dimensions disagree
  IndexOutOfWindow,    // timestep index past the schedule window
  EmptyTarget,         // every target cell is the ignore label
  EmptyWindow,         // frame window with no frames
  Degenerate,          // too few / collinear points for a model fit
  LatticeMismatch,     // two maps on different lattices
  NonRigidRotation,    // rotation block fails orthonormality or is a reflection
  BadMagic,            // tensor file does not start with the expected magic
  UnsupportedDtype,    // tensor file dtype byte unknown or not the one asked for
  TruncatedPayload,    // file shorter than its header promises
  BadHeader,           // malformed image or tensor header
  BadMaxval,           // image maxval other than 255
  MalformedLine,       // pose/intrinsics/config line does not parse
  UnknownKey,          // config key not in the registry
  OutOfRange,          // config value outside its documented range
  InvalidValue,        // argument outside the caller contract
  IoFailure,           // underlying stream/file error
};

const char* error_code_name(ErrorCode code);

struct Error : std::runtime_error {
  ErrorCode code;

  Error(ErrorCode c, const std::string& message)
      : std::runtime_error(std::string(error_code_name(c)) + ": " + message), code(c) {}
};

// Shorthand used at validation sites: throw_error(ErrorCode::ShapeMismatch, "...").
[[noreturn]] inline void throw_error(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace bevforge
