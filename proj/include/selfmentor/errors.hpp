#pragma once

#include <stdexcept>
#include <string>

namespace selfmentor {

// Tensor extents or image sizes do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A value is outside the domain an operation is defined on.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// An API precondition was violated by the caller.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Requested split or sample counts exceed what is available.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message
                                    : message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// A pipeline phase was requested before the artifacts it depends on exist.
class PrerequisiteError : public std::runtime_error {
 public:
  PrerequisiteError(const std::string& message, std::string missing_phase)
      : std::runtime_error(message), missing_phase_(std::move(missing_phase)) {}
  const std::string& missing_phase() const { return missing_phase_; }

 private:
  std::string missing_phase_;
};

}  // namespace selfmentor
