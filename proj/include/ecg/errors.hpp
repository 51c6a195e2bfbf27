#pragma once

#include <stdexcept>
#include <string>

namespace ecg {

// Malformed or missing input data: bad CSV rows, absent files, checkpoint
// manifest mismatches. Mapped to exit code 2 by the CLI.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes disagree with an operation's contract.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training cannot start or diverged (NaN/Inf loss). Mapped to exit code 3.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad command line or config outside what the parser catches itself.
// Mapped to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ecg
