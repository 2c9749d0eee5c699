#pragma once

#include <stdexcept>
#include <string>

namespace vcnet {

// Precondition or shape violated by a caller.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Bad input file, schema or cell.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Model file could not be read back (version, schema hash, truncation).
class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss or gradient during optimisation.
class TrainingDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

}  // namespace vcnet
