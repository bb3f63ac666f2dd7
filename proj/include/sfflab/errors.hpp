#pragma once

#include <stdexcept>
#include <string>

namespace sfflab {

// Failure taxonomy. The CLI maps these onto exit codes:
//   std::invalid_argument / parse errors -> 2 (usage)
//   NumericError and derived             -> 3
//   ResourceError                        -> 4
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filter identically zero on the whole spectrum at the requested time.
struct DegenerateFilterError : NumericError {
  using NumericError::NumericError;
};

// Closed-form evolution denominator underflowed to (numerically) zero.
struct DegenerateEvolutionError : NumericError {
  using NumericError::NumericError;
};

// Fixed-step integrator blew its per-step trace-drift budget.
struct IntegrationFailureError : NumericError {
  using NumericError::NumericError;
};

// Curve never enters the plateau band.
struct NotSaturatedError : NumericError {
  using NumericError::NumericError;
};

struct CsvParseError : std::runtime_error {
  CsvParseError(const std::string& file, int line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        line_number(line) {}
  int line_number;
};

}  // namespace sfflab
