#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace minmarkov {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user input (bad graphs, bad probability
/// vectors, shape mismatches, nonpositive weights).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A configured resource cap would be exceeded (lifted state count,
/// path-enumeration size).
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver stopped without reaching its tolerance.  `diverged()`
/// distinguishes a runaway iterate (unattainable targets) from a plain
/// iteration-limit stop; `components()` lists the offending coordinates in
/// the divergent case.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, long iterations, double residual,
                   bool diverged = false, std::vector<int> components = {})
      : Error(message),
        iterations_(iterations),
        residual_(residual),
        diverged_(diverged),
        components_(std::move(components)) {}

  long iterations() const { return iterations_; }
  double residual() const { return residual_; }
  bool diverged() const { return diverged_; }
  const std::vector<int>& components() const { return components_; }

 private:
  long iterations_;
  double residual_;
  bool diverged_;
  std::vector<int> components_;
};

/// A state required by an estimation target never occurs in the data, so the
/// empirical moment vector sits on the boundary of the attainable set.
class UnobservedStateError : public Error {
 public:
  UnobservedStateError(const std::string& message, std::vector<int> missing)
      : Error(message), missing_(std::move(missing)) {}

  const std::vector<int>& missing_states() const { return missing_; }

 private:
  std::vector<int> missing_;
};

}  // namespace minmarkov
