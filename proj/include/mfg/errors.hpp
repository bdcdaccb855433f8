#pragma once

#include <stdexcept>
#include <string>

namespace mfg {

/// Bad caller-supplied argument (unknown name, out-of-range index, ...).
class ArgumentError : public std::invalid_argument {
 public:
  explicit ArgumentError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Violated structural contract between components (dimension mismatch,
/// inconsistent lengths, invalid distribution passed where one is required).
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A transition kernel produced something that is not a distribution.
class KernelIntegrityError : public std::runtime_error {
 public:
  explicit KernelIntegrityError(const std::string& msg)
      : std::runtime_error(msg) {}
};

/// Malformed content in a persisted file.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, long line)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// Structurally valid file whose pieces do not fit together
/// (truncation, metadata/payload mismatch).
class IntegrityError : public std::runtime_error {
 public:
  explicit IntegrityError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite value produced during iterative optimisation.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mfg
