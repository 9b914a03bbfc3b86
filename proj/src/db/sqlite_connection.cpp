#include <sqlite3.h>

#include <chrono>

#include "db/connection.hpp"

namespace simpli2::db {
namespace {

class SqliteConnection : public Connection {
public:
  explicit SqliteConnection(const std::string& path) {
    int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_URI;
    if (sqlite3_open_v2(path.c_str(), &db_, flags, nullptr) != SQLITE_OK) {
      std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
      sqlite3_close(db_);
      throw EnvironmentError("cannot open sqlite database '" + path + "': " + msg);
    }
    sqlite3_progress_handler(db_, 1000, &SqliteConnection::on_progress, this);
  }
  ~SqliteConnection() override { sqlite3_close(db_); }

  Dialect dialect() const override { return Dialect::sqlite; }

  void execute(const std::string& sql) override { run(sql, nullptr); }

  QueryResult query(const std::string& sql) override {
    QueryResult out;
    run(sql, &out);
    return out;
  }

  void set_timeout(std::chrono::milliseconds limit) override { limit_ = limit; }

private:
  static int on_progress(void* self) {
    auto* c = static_cast<SqliteConnection*>(self);
    return c->limit_.count() > 0 && std::chrono::steady_clock::now() > c->deadline_ ? 1 : 0;
  }

  void run(const std::string& sql, QueryResult* out) {
    deadline_ = std::chrono::steady_clock::now() + limit_;
    const char* tail = sql.c_str();
    const char* end = tail + sql.size();
    while (tail < end) {
      sqlite3_stmt* stmt = nullptr;
      if (sqlite3_prepare_v2(db_, tail, static_cast<int>(end - tail), &stmt, &tail) != SQLITE_OK)
        throw StatementError(std::string("sqlite: ") + sqlite3_errmsg(db_));
      if (!stmt) continue;  // whitespace or comment
      int cols = sqlite3_column_count(stmt);
      if (out) {
        out->columns.clear();
        out->rows.clear();
        for (int i = 0; i < cols; ++i) out->columns.emplace_back(sqlite3_column_name(stmt, i));
      }
      int rc;
      while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
        if (!out) continue;
        std::vector<Cell> row;
        for (int i = 0; i < cols; ++i) {
          if (sqlite3_column_type(stmt, i) == SQLITE_NULL) {
            row.emplace_back(std::nullopt);
          } else {
            const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(stmt, i));
            row.emplace_back(std::string(text, static_cast<std::size_t>(sqlite3_column_bytes(stmt, i))));
          }
        }
        out->rows.push_back(std::move(row));
      }
      sqlite3_finalize(stmt);
      if (rc == SQLITE_INTERRUPT) throw TimeoutError("sqlite: statement timed out");
      if (rc != SQLITE_DONE) throw StatementError(std::string("sqlite: ") + sqlite3_errmsg(db_));
    }
  }

  sqlite3* db_ = nullptr;
  std::chrono::milliseconds limit_{0};
  std::chrono::steady_clock::time_point deadline_;
};

}  // namespace

std::unique_ptr<Connection> connect_sqlite(const std::string& path) { return std::make_unique<SqliteConnection>(path); }

}  // namespace simpli2::db
