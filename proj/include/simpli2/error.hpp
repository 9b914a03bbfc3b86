#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace simpli2 {

/// Base class for every error the library raises. `category` drives the CLI
/// exit status: input errors map to 2, environment errors to 3.
class Error : public std::runtime_error {
public:
  enum class Category { input, environment };

  explicit Error(const std::string& what, Category category = Category::input)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

private:
  Category category_;
};

/// Malformed text: SQL, JSON, CSV.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t offset = npos)
      : Error(offset == npos ? what : what + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

/// A name that does not resolve: unknown table, column, alias, FK endpoint.
class ReferenceError : public Error {
public:
  using Error::Error;
};

/// Structurally valid input that violates a contract (duplicate alias,
/// order/query mismatch, rename clash, ...).
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Evaluation failures in the mini executor (row ceiling, bad operand).
class ExecutionError : public Error {
public:
  using Error::Error;
};

/// Database unreachable, permission denied, missing client library.
class EnvironmentError : public Error {
public:
  explicit EnvironmentError(const std::string& what) : Error(what, Category::environment) {}
};

}  // namespace simpli2
