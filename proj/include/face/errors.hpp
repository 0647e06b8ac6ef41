#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace face {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed or non-finite data, dimension mismatches.
class InputError : public Error {
public:
  using Error::Error;
};

// Invalid configuration (basis too large, unknown method names, ...).
class ConfigError : public Error {
public:
  using Error::Error;
};

// A documented precondition of an operation was violated by the caller.
class ContractError : public Error {
public:
  using Error::Error;
};

// A matrix that must be positive definite is numerically singular.
class SingularityError : public Error {
public:
  SingularityError(const std::string& what, std::size_t index)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

private:
  std::size_t index_;
};

// 1 - alpha * tr(S) / J <= 0: the smoother leaves no residual degrees of freedom.
class DegenerateSmootherError : public Error {
public:
  using Error::Error;
};

class UnsupportedError : public Error {
public:
  using Error::Error;
};

}  // namespace face
