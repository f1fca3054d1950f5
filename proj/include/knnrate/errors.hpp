#pragma once

#include <stdexcept>
#include <string>

namespace knnrate {

// Contract violation on caller-supplied input (bad dimension, k out of range,
// malformed config). The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A bound calculator needed a theorem constant that was not supplied.
class MissingParameter : public ValidationError {
 public:
  explicit MissingParameter(std::string name)
      : ValidationError("missing parameter: " + name), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

// Hausdorff evaluation against an empty set, or an empty discretized truth.
class EmptySetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace knnrate
