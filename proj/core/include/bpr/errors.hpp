#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bpr {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments: wrong dimensions, out-of-range parameters, non-finite input.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A configuration invariant does not hold. `field()` names the offender.
class ConfigError : public ValidationError {
 public:
  ConfigError(std::string field, const std::string& what)
      : ValidationError(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Malformed or unreadable input data. Line numbers are 1-based; 0 means n/a.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0)
      : Error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Binary envelope (index / model file) failed to load.
class FormatError : public DataError {
 public:
  enum class Kind { io, truncated, bad_magic, bad_version, size_mismatch, checksum, invalid_payload };

  FormatError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Training diverged (non-finite loss or parameters).
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace bpr
