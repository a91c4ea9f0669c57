#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dpm {

// Violated operation precondition (bad argument or inconsistent input).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Rate-equation state became non-finite.
class IntegrationDiverged : public std::runtime_error {
 public:
  IntegrationDiverged(std::size_t sample_index, const std::string& what)
      : std::runtime_error(what), sample_index_(sample_index) {}

  std::size_t sample_index() const { return sample_index_; }

 private:
  std::size_t sample_index_;
};

// Phase requested over samples whose intensity is below the extinction floor.
class UndefinedPhase : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid experiment configuration; the message names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw PreconditionError(message);
}

}  // namespace dpm
