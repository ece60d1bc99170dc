#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gfbm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One violated admissibility constraint.
struct OutOfRange {
  std::string field;
  std::string allowed;
  double value;
};

/// Rejected parameter triple. Carries every violation, not only the first.
class ParamError : public Error {
 public:
  explicit ParamError(std::vector<OutOfRange> violations);
  const std::vector<OutOfRange>& violations() const noexcept { return violations_; }

 private:
  std::vector<OutOfRange> violations_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// x = 0 with gamma > 0 in the kernel, where |x|^{-gamma/2} is infinite.
class SingularPoint : public DomainError {
 public:
  using DomainError::DomainError;
};

class DivergentTail : public DomainError {
 public:
  using DomainError::DomainError;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class UnboundedRatio : public Error {
 public:
  using Error::Error;
};

class ZeroHits : public Error {
 public:
  using Error::Error;
};

/// Unreadable or malformed files (CLI exit code 3).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Failures of numerical machinery (CLI exit code 2).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public NumericalError {
 public:
  NoConvergence(std::size_t evaluations, double best_estimate, const std::string& what);
  std::size_t evaluations() const noexcept { return evaluations_; }
  double best_estimate() const noexcept { return best_estimate_; }

 private:
  std::size_t evaluations_;
  double best_estimate_;
};

class NotFactorizable : public NumericalError {
 public:
  NotFactorizable(double attempted_jitter, const std::string& what)
      : NumericalError(what), attempted_jitter_(attempted_jitter) {}
  double attempted_jitter() const noexcept { return attempted_jitter_; }

 private:
  double attempted_jitter_;
};

}  // namespace gfbm
