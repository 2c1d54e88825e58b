#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace koopmotion {

/// Base of every error thrown by the library. `kind()` is a stable,
/// machine-readable tag used by the CLI when it reports failures as JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error("parse_error", file + ":" + std::to_string(line) + ": " + what),
        file_(file),
        line_(line) {}
  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error("input_error", what) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error("dimension_error", what) {}
};

class GoalMismatchError : public Error {
 public:
  explicit GoalMismatchError(const std::string& what) : Error("goal_mismatch", what) {}
};

class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& what)
      : Error("insufficient_data", what) {}
};

class CheckpointError : public Error {
 public:
  explicit CheckpointError(const std::string& what) : Error("corrupted_checkpoint", what) {}
};

class VersionError : public Error {
 public:
  explicit VersionError(const std::string& what) : Error("version_mismatch", what) {}
};

class DegenerateFieldError : public Error {
 public:
  explicit DegenerateFieldError(const std::string& what) : Error("degenerate_field", what) {}
};

class DivergedTrainingError : public Error {
 public:
  DivergedTrainingError(std::size_t iteration, const std::string& what)
      : Error("diverged_training",
              "iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

class NumericBlowupError : public Error {
 public:
  NumericBlowupError(std::size_t step, const std::string& what)
      : Error("numeric_blowup", "step " + std::to_string(step) + ": " + what),
        step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class EigensolverError : public Error {
 public:
  explicit EigensolverError(const std::string& what) : Error("eigensolver_error", what) {}
};

class SamplingError : public Error {
 public:
  explicit SamplingError(const std::string& what) : Error("sampling_error", what) {}
};

}  // namespace koopmotion
