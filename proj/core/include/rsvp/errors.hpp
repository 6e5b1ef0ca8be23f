#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rsvp {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or precondition violation (bad band edges, shape mismatch, ...).
class ParamError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a contract (non-finite samples, missing class, empty set, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure (non-convergence, loss of definiteness, singular system).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated file. Carries the byte offset where parsing failed
/// when one is known (npos otherwise).
class FormatError : public Error {
 public:
  static constexpr std::uint64_t npos = ~std::uint64_t{0};

  explicit FormatError(const std::string& what, std::uint64_t byte_offset = npos)
      : Error(what), offset_(byte_offset) {}

  std::uint64_t byte_offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace rsvp
