#pragma once

#include <stdexcept>
#include <string>

namespace bellforge {

// A value failed one of its invariants. The message names the invariant
// ("not PSD", "trace not 1", "zero success probability", ...).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Input could not be read or decoded (I/O, malformed JSON, wrong schema).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical routine failed a self-check it should never fail at the
// tolerances in use (certificate re-verification, escape scan, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

namespace tol {
// Eigenvalue tolerance for Hermiticity / positivity.
inline constexpr double kEig = 1e-10;
// Generic comparison tolerance (completeness relations, O^2 = I, ...).
inline constexpr double kCompare = 1e-9;
// Below this a filter or branch probability is treated as impossible.
inline constexpr double kProbability = 1e-12;
// Simplex pivot / feasibility tolerance.
inline constexpr double kLp = 1e-9;
}  // namespace tol

}  // namespace bellforge
