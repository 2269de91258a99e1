#pragma once

#include <stdexcept>
#include <string>

namespace cgostab {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GridMismatch : public Error {
 public:
  GridMismatch() : Error("grid functions live on different grids") {}
};

class NonFiniteValue : public Error {
 public:
  explicit NonFiniteValue(const std::string& where)
      : Error("non-finite value produced by " + where) {}
};

// -Delta + v is (numerically) singular on the grid.
class DirichletEigenvalueProximity : public Error {
 public:
  DirichletEigenvalueProximity(double condition_estimate)
      : Error("Dirichlet eigenvalue proximity: condition estimate " +
              std::to_string(condition_estimate)),
        condition(condition_estimate) {}
  double condition;
};

// The Neumann iteration for mu does not contract for this (v, lambda).
class NoContraction : public Error {
 public:
  explicit NoContraction(double ratio)
      : Error("no contraction: measured ratio " + std::to_string(ratio)),
        ratio(ratio) {}
  double ratio;
};

class IterationLimit : public Error {
 public:
  IterationLimit(int iterations, double increment)
      : Error("iteration limit reached after " + std::to_string(iterations) +
              " steps, last increment " + std::to_string(increment)),
        iterations(iterations),
        increment(increment) {}
  int iterations;
  double increment;
};

// The grid cannot represent the oscillation of e_{lambda,z0}.
class UnderResolvedPhase : public Error {
 public:
  explicit UnderResolvedPhase(const std::string& detail)
      : Error("under-resolved phase: " + detail) {}
};

}  // namespace cgostab
