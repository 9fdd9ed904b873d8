#pragma once

#include <stdexcept>
#include <string>

namespace dsparse {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input (CLI exit code 2).
struct ParseError : Error {
  ParseError(const std::string& msg, int line) : Error(msg), line(line) {}
  int line;
};

// Violated precondition of an operation (CLI exit code 3).
struct PreconditionError : Error {
  using Error::Error;
};

struct DimensionMismatch : PreconditionError {
  using PreconditionError::PreconditionError;
};
struct DemandMismatch : PreconditionError {
  using PreconditionError::PreconditionError;
};
struct KernelMismatch : PreconditionError {
  using PreconditionError::PreconditionError;
};
struct SingularBlock : PreconditionError {
  using PreconditionError::PreconditionError;
};
struct TooLarge : PreconditionError {
  using PreconditionError::PreconditionError;
};
struct Disconnected : PreconditionError {
  using PreconditionError::PreconditionError;
};
struct NotCertified : PreconditionError {
  using PreconditionError::PreconditionError;
};
struct NotBipartite : PreconditionError {
  using PreconditionError::PreconditionError;
};
struct BetaTooSmall : PreconditionError {
  using PreconditionError::PreconditionError;
};
struct MissingEdge : PreconditionError {
  using PreconditionError::PreconditionError;
};
struct EdgeNotInPiece : PreconditionError {
  using PreconditionError::PreconditionError;
};
struct QueryUnsupported : PreconditionError {
  using PreconditionError::PreconditionError;
};

// Failed condition (a)-(d) of the internal patching.
struct ConditionViolated : PreconditionError {
  ConditionViolated(char which, const std::string& msg)
      : PreconditionError(std::string("condition (") + which + ") violated: " + msg),
        which(which) {}
  char which;
};

}  // namespace dsparse
