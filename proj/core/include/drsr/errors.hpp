#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace drsr {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input violated a documented precondition (asymmetric matrix, trace mismatch, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Point matrix does not span the ambient space.
class RankDeficientError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// Lyapunov coefficient is not (numerically) positive definite.
class SingularCoefficientError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Message-passing invariant broken: missing neighbor message, disconnected flood, ...
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : Error(what + " (row " + std::to_string(row) + ")"), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// A local iterate left the positive-definite cone or became non-finite.
/// The consensus engines react by shrinking the step size.
class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

/// The tilted local objective has no minimizer, e.g. a geometric-median
/// multiplier longer than the point count. Also treated as a step-size failure.
class UnboundedLocalProblemError : public Error {
 public:
  using Error::Error;
};

/// A local solve failed inside a consensus run; carries where it happened.
class NodeSolveError : public Error {
 public:
  NodeSolveError(const std::string& what, int node, int iteration, bool step_size_related)
      : Error("node " + std::to_string(node) + ", iteration " + std::to_string(iteration) +
              ": " + what),
        node_(node),
        iteration_(iteration),
        step_size_related_(step_size_related) {}

  int node() const noexcept { return node_; }
  int iteration() const noexcept { return iteration_; }
  bool step_size_related() const noexcept { return step_size_related_; }

 private:
  int node_;
  int iteration_;
  bool step_size_related_;
};

}  // namespace drsr
