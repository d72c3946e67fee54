#pragma once

#include <stdexcept>
#include <string>

namespace protofuzz {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition on an argument (empty input, bad offsets, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The state-key registry ran out of room; STATE_SIZE has to be raised.
class StateSpaceExhausted : public Error {
 public:
  using Error::Error;
};

/// Failure talking to or managing the target. Retriable unless noted.
class HarnessError : public Error {
 public:
  explicit HarnessError(const std::string& what, bool retriable = true)
      : Error(what), retriable_(retriable) {}
  bool retriable() const noexcept { return retriable_; }

 private:
  bool retriable_;
};

/// Bad campaign or CLI configuration, detected before fuzzing starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace protofuzz
