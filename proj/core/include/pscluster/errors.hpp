#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace psc {

// Base type for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text; `line` is 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// An edge refers to a vertex that was never declared.
class ReferentialError : public Error {
 public:
  ReferentialError(const std::string& what, std::int64_t vertex)
      : Error(what), vertex_(vertex) {}
  std::int64_t vertex() const { return vertex_; }

 private:
  std::int64_t vertex_;
};

// Argument outside the operation's domain (bad sizes, counts, ranges).
class DomainError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// An isolated vertex (zero degree) makes D^(-1/2) undefined.
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, std::int64_t vertex)
      : Error(what), vertex_(vertex) {}
  std::int64_t vertex() const { return vertex_; }

 private:
  std::int64_t vertex_;
};

// Eigensolver failed to reach the requested residual tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double worst_residual)
      : Error(what), worst_residual_(worst_residual) {}
  double worst_residual() const { return worst_residual_; }

 private:
  double worst_residual_;
};

// Iterative method exceeded its sweep budget.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A map or reduce function threw; carries the offending key.
class JobError : public Error {
 public:
  JobError(const std::string& what, std::int64_t key)
      : Error(what), key_(key) {}
  std::int64_t key() const { return key_; }

 private:
  std::int64_t key_;
};

}  // namespace psc
