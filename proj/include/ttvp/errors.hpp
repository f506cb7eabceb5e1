#ifndef TTVP_ERRORS_HPP
#define TTVP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ttvp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
  virtual const char* kind() const noexcept { return "error"; }
};

class InvalidArgument : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid_argument"; }
};

/// A numerical failure located at a time index (or sweep / equation index,
/// depending on where it was raised). `index` is -1 when unknown.
class NumericalError : public Error {
public:
  NumericalError(const std::string& msg, long index = -1)
      : Error(index >= 0 ? msg + " (index " + std::to_string(index) + ")" : msg),
        index_(index) {}
  long index() const noexcept { return index_; }
  const char* kind() const noexcept override { return "numerical_error"; }

private:
  long index_;
};

class IoError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "io_error"; }
};

/// A correctness check ran to completion and did not pass.
class ValidationFailed : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "validation_failed"; }
};

} // namespace ttvp

#endif
