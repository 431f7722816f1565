#pragma once

#include <stdexcept>
#include <string>

namespace ddkl {

// Error taxonomy for the workbench. The CLI maps these onto exit codes:
// config/validation -> 2, non-convergence -> 3 (flag, not thrown),
// numerical failure -> 4.

struct DisconnectedGraph : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IndexOutOfRange : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct IntervalOutOfRange : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct EmptySegment : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NonFiniteState : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularBlockSystem : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverDegenerate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown on malformed config files or CLI arguments; `field` names the
// offending entry so the CLI can report it next to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what), field(field) {}
  std::string field;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ddkl
