#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace unionrec {

// Numerical failures (exit status 2 at the CLI) derive from NumericalError;
// configuration problems (exit status 1) from ConfigError.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankDeficient : public NumericalError {
 public:
  explicit RankDeficient(const std::string& what, std::ptrdiff_t candidate = -1)
      : NumericalError(what), candidate_(candidate) {}

  // Index of the offending candidate basis, or -1 when not applicable.
  std::ptrdiff_t candidate() const { return candidate_; }

 private:
  std::ptrdiff_t candidate_;
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DimensionMismatch : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoCandidate : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what),
        field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace unionrec
