#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zl {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Division by zero, log(0), branch-cut hits, non-integer exponents.
class EvalError : public Error {
 public:
  using Error::Error;
};

class OutsideDomain : public Error {
 public:
  using Error::Error;
};

class NotHyperbolic : public Error {
 public:
  using Error::Error;
};

class NotSupported : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class TooFewPoints : public Error {
 public:
  using Error::Error;
};

class NotMuPoint : public Error {
 public:
  using Error::Error;
};

class InsufficientTail : public Error {
 public:
  using Error::Error;
};

class NotConverged : public Error {
 public:
  using Error::Error;
};

/// Malformed family definition or config input.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace zl
