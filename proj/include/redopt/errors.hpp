#pragma once

#include <stdexcept>
#include <string>

namespace redopt {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Topology / linear algebra
class SingularTopology : public Error {
public:
  using Error::Error;
};
class IslandingOutage : public Error {
public:
  using Error::Error;
};
class DimensionMismatch : public Error {
public:
  using Error::Error;
};

// Input handling
class ParseError : public Error {
public:
  ParseError(const std::string& what, int line, int column)
      : Error(what + " (line " + std::to_string(line) + ", col " +
              std::to_string(column) + ")"),
        line(line),
        column(column) {}
  int line;
  int column;
};
class ValidationError : public Error {
public:
  using Error::Error;
};
class NotPSD : public Error {
public:
  using Error::Error;
};

// Beta fitting
class FitDivergence : public Error {
public:
  using Error::Error;
};
class DegenerateData : public Error {
public:
  using Error::Error;
};

// PCE evaluation
class OutOfSupport : public Error {
public:
  using Error::Error;
};
class Unbalanced : public Error {
public:
  using Error::Error;
};
class DomainError : public Error {
public:
  using Error::Error;
};

// Constraint generation
class EmptyRecords : public Error {
public:
  using Error::Error;
};
class MaxIterations : public Error {
public:
  using Error::Error;
};
class InfeasibleSubproblem : public Error {
public:
  explicit InfeasibleSubproblem(const std::string& what,
                                std::string constraint_dump = {})
      : Error(what), constraint_dump(std::move(constraint_dump)) {}
  // Human-readable description of the outage constraints active when the
  // subproblem went infeasible.
  std::string constraint_dump;
};

}  // namespace redopt
