#pragma once

#include <stdexcept>
#include <string>

namespace cascade {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or mismatched inputs supplied by the caller.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An operation addressed a node that is not on the tree's split lattice,
/// or tree invariants would be violated.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// A party received a message that is not valid in its current state.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  DecodeError(std::string field, const std::string& what)
      : Error("decode error at " + field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Engine invariant broken (e.g. the cascade safety cap was hit).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace cascade
