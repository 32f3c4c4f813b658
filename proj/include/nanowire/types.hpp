#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace nanowire {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the caller's input was not met (bad sizes, bad ranges).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// One of the model's standing physical assumptions is violated by the input.
class AssumptionViolation : public Error {
 public:
  AssumptionViolation(std::string assumption, const std::string& detail)
      : Error("violates " + assumption + ": " + detail), assumption_(std::move(assumption)) {}
  const std::string& assumption() const noexcept { return assumption_; }

 private:
  std::string assumption_;
};

/// An iterative method stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double attained)
      : Error(what + " (attained " + std::to_string(attained) + ")"), attained_(attained) {}
  double attained() const noexcept { return attained_; }

 private:
  double attained_;
};

/// 64-bit FNV-1a digest as 16 lowercase hex digits.
inline std::string fnv1a_hex(const void* data, std::size_t bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace nanowire
