#pragma once

#include <stdexcept>
#include <string>

namespace superlin {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a function (x below the domain floor, Σ before its boundary, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A direct evaluation would exceed the double range and no log form exists.
class OverflowError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the range of F (u >= F(inf) for blow-up nonlinearities).
class RangeError : public Error {
 public:
  RangeError(const std::string& what, double range_limit)
      : Error(what), range_limit_(range_limit) {}
  [[nodiscard]] double range_limit() const noexcept { return range_limit_; }

 private:
  double range_limit_;
};

class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double achieved_error)
      : Error(what), achieved_error_(achieved_error) {}
  [[nodiscard]] double achieved_error() const noexcept { return achieved_error_; }

 private:
  double achieved_error_;
};

/// Step-size underflow, non-finite state or step budget exhausted.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// An operation's precondition (a hypothesis or gate check) does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace superlin
