#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cqlin {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text. Line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Well-formed input that does not make sense for the requested operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ArityError : public DomainError {
 public:
  ArityError(const std::string& relation, std::size_t expected, std::size_t actual)
      : DomainError("arity mismatch for relation " + relation + ": expected " + std::to_string(expected) +
                    ", got " + std::to_string(actual)),
        relation_(relation) {}

  const std::string& relation() const { return relation_; }

 private:
  std::string relation_;
};

class SchemaError : public DomainError {
 public:
  using DomainError::DomainError;
};

class PreconditionError : public DomainError {
 public:
  using DomainError::DomainError;
};

// A companion construction was asked for a TGD set outside its class.
class NotApplicable : public DomainError {
 public:
  using DomainError::DomainError;
};

class BudgetExhausted : public Error {
 public:
  using Error::Error;
};

// A stream broke the multiplicity bound it promised.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace cqlin
