#pragma once

#include <stdexcept>
#include <string>

namespace scenegeo {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition on a value passed to an operation.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class BehindCamera : public Error {
 public:
  using Error::Error;
};

// Malformed or unsupported file content.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// The optimisation problem has no unique solution (too few samples, constant input).
class DegenerateProblem : public Error {
 public:
  using Error::Error;
};

enum class ProtocolFailure {
  NonzeroExit,
  Timeout,
  MissingOutput,
  MalformedOutput,
  ShapeMismatch,
  NotDense,
  LaunchFailed,
};

const char* to_string(ProtocolFailure kind);

// Raised when an external adapter breaks the directory protocol.
class ProtocolError : public Error {
 public:
  ProtocolError(ProtocolFailure kind, const std::string& message, std::string captured_stderr = {})
      : Error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        stderr_(std::move(captured_stderr)) {}

  ProtocolFailure kind() const { return kind_; }
  const std::string& captured_stderr() const { return stderr_; }

 private:
  ProtocolFailure kind_;
  std::string stderr_;
};

}  // namespace scenegeo
