#pragma once

#include <stdexcept>
#include <string>

namespace polimp {

/// Malformed or inconsistent input (bad kernel, dimension mismatch, bad flag).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical postcondition failed, e.g. a Bellman residual above tolerance.
class ContractViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace polimp
