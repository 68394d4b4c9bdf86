#ifndef GHM_ERRORS_HPP
#define GHM_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace ghm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A constructor or operation received parameters outside its domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A point lies outside the domain of the branch it was handed to.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, std::size_t strip)
      : Error(what), strip_(strip) {}
  std::size_t strip() const noexcept { return strip_; }

 private:
  std::size_t strip_;
};

/// A requested scale is finer than the data can resolve.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// An iterative method did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& residual_history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

/// A geometric construction collapsed (vanishing margins, singular frame).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Work or memory budget exceeded.
class BudgetError : public Error {
 public:
  using Error::Error;
};

/// Cache or checkpoint file rejected (version, digest, truncation).
class CacheError : public Error {
 public:
  using Error::Error;
};

/// The operation needs a skew-product map.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace ghm

#endif  // GHM_ERRORS_HPP
