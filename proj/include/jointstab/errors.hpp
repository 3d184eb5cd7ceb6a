#pragma once

#include <stdexcept>
#include <string>

namespace jointstab {

// Numerical failure: solver non-convergence, singular system, eigensolver
// breakdown. Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Ensemble generation exhausted its retry budget.
class GenerationError : public NumericalError {
 public:
  GenerationError(const std::string& what, int attempts)
      : NumericalError(what + " (attempts: " + std::to_string(attempts) + ")"),
        attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

// File I/O failure. Maps to CLI exit code 3.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace jointstab
