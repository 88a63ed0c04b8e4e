#pragma once

#include <stdexcept>
#include <string>

namespace chiral {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or violated preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A basis or dense matrix would exceed its configured size budget.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(const std::string& what, std::size_t requested, std::size_t budget)
      : Error(what), requested_(requested), budget_(budget) {}
  std::size_t requested() const noexcept { return requested_; }
  std::size_t budget() const noexcept { return budget_; }

 private:
  std::size_t requested_;
  std::size_t budget_;
};

/// An iterative method stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double achieved)
      : Error(what), achieved_(achieved) {}
  /// Best residual / error bound reached before giving up.
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// A cross-check between two computations that must agree did not.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace chiral
