#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "simpli2/error.hpp"

namespace simpli2::db {

using Cell = std::optional<std::string>;

struct QueryResult {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// Raised when a statement exceeds the session's timeout.
class TimeoutError : public EnvironmentError {
public:
  using EnvironmentError::EnvironmentError;
};

/// Statement failed inside the database (syntax, missing table, ...).
class StatementError : public Error {
public:
  using Error::Error;
};

enum class Dialect { sqlite, postgres };

/// One session on a database. Not thread-safe; bench uses it sequentially.
class Connection {
public:
  virtual ~Connection() = default;

  virtual Dialect dialect() const = 0;
  /// Runs a statement and discards any rows.
  virtual void execute(const std::string& sql) = 0;
  virtual QueryResult query(const std::string& sql) = 0;
  /// Zero disables the limit.
  virtual void set_timeout(std::chrono::milliseconds limit) = 0;
};

/// `sqlite:///absolute/path.db`, `sqlite://relative.db`, `sqlite::memory:`,
/// or a `postgres://` / `postgresql://` URI. Throws EnvironmentError when
/// the database is unreachable or the client library is missing.
std::unique_ptr<Connection> connect(const std::string& url);

std::unique_ptr<Connection> connect_sqlite(const std::string& path);
std::unique_ptr<Connection> connect_postgres(const std::string& conninfo);

/// The URL from `flag` if set, else from the DB_URL environment variable.
std::optional<std::string> resolve_url(const std::string& flag);

}  // namespace simpli2::db
