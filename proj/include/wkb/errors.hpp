#pragma once

#include <stdexcept>
#include <string>

namespace wkb {

/// Process exit codes used by the command line driver.
enum class ExitCode : int {
  success = 0,
  invalid_config = 2,
  numerical_validity = 3,
  oracle_failure = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  [[nodiscard]] ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Bad user input: unknown problem, malformed list, x outside [0,1], too few derivatives.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::invalid_config, what) {}
};

/// The phase derivative vanished or turned negative; eps is outside the valid regime.
class PhaseValidityError : public Error {
 public:
  explicit PhaseValidityError(const std::string& what) : Error(ExitCode::numerical_validity, what) {}
};

/// Reference machinery failed: step budget exhausted or two oracle routes disagree.
class OracleError : public Error {
 public:
  explicit OracleError(const std::string& what) : Error(ExitCode::oracle_failure, what) {}
};

}  // namespace wkb
