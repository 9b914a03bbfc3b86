// libpq is loaded at run time so the tool builds without its headers and
// runs without it unless a postgres URL is used.

#include <dlfcn.h>

#include <mutex>

#include "db/connection.hpp"

namespace simpli2::db {
namespace {

using PGconn = void;
using PGresult = void;

// Values from libpq-fe.h / postgres_ext.h.
constexpr int CONNECTION_OK = 0;
constexpr int PGRES_COMMAND_OK = 1;
constexpr int PGRES_TUPLES_OK = 2;
constexpr int PG_DIAG_SQLSTATE = 'C';

struct LibPq {
  PGconn* (*connectdb)(const char*) = nullptr;
  int (*status)(const PGconn*) = nullptr;
  char* (*error_message)(const PGconn*) = nullptr;
  void (*finish)(PGconn*) = nullptr;
  PGresult* (*exec)(PGconn*, const char*) = nullptr;
  int (*result_status)(const PGresult*) = nullptr;
  char* (*result_error_message)(const PGresult*) = nullptr;
  char* (*result_error_field)(const PGresult*, int) = nullptr;
  int (*ntuples)(const PGresult*) = nullptr;
  int (*nfields)(const PGresult*) = nullptr;
  char* (*fname)(const PGresult*, int) = nullptr;
  char* (*getvalue)(const PGresult*, int, int) = nullptr;
  int (*getisnull)(const PGresult*, int, int) = nullptr;
  void (*clear)(PGresult*) = nullptr;
};

const LibPq& libpq() {
  static LibPq lib;
  static std::string failure;
  static std::once_flag once;
  std::call_once(once, [] {
    void* h = nullptr;
    for (const char* name : {"libpq.so.5", "libpq.so", "libpq.5.dylib", "libpq.dylib"}) {
      if ((h = dlopen(name, RTLD_NOW | RTLD_LOCAL))) break;
    }
    if (!h) {
      failure = "cannot load the PostgreSQL client library (libpq)";
      return;
    }
    auto sym = [&](auto& fn, const char* name) {
      fn = reinterpret_cast<std::remove_reference_t<decltype(fn)>>(dlsym(h, name));
      if (!fn && failure.empty()) failure = std::string("libpq lacks symbol ") + name;
    };
    sym(lib.connectdb, "PQconnectdb");
    sym(lib.status, "PQstatus");
    sym(lib.error_message, "PQerrorMessage");
    sym(lib.finish, "PQfinish");
    sym(lib.exec, "PQexec");
    sym(lib.result_status, "PQresultStatus");
    sym(lib.result_error_message, "PQresultErrorMessage");
    sym(lib.result_error_field, "PQresultErrorField");
    sym(lib.ntuples, "PQntuples");
    sym(lib.nfields, "PQnfields");
    sym(lib.fname, "PQfname");
    sym(lib.getvalue, "PQgetvalue");
    sym(lib.getisnull, "PQgetisnull");
    sym(lib.clear, "PQclear");
  });
  if (!failure.empty()) throw EnvironmentError(failure);
  return lib;
}

std::string trimmed(const char* s) {
  std::string out = s ? s : "";
  while (!out.empty() && (out.back() == '\n' || out.back() == ' ')) out.pop_back();
  return out;
}

class PqConnection : public Connection {
public:
  explicit PqConnection(const std::string& conninfo) : lib_(libpq()) {
    conn_ = lib_.connectdb(conninfo.c_str());
    if (!conn_ || lib_.status(conn_) != CONNECTION_OK) {
      std::string msg = conn_ ? trimmed(lib_.error_message(conn_)) : "out of memory";
      if (conn_) lib_.finish(conn_);
      throw EnvironmentError("cannot connect to postgres: " + msg);
    }
    execute("SET client_min_messages = warning");
  }
  ~PqConnection() override { lib_.finish(conn_); }

  Dialect dialect() const override { return Dialect::postgres; }

  void execute(const std::string& sql) override { run(sql, nullptr); }

  QueryResult query(const std::string& sql) override {
    QueryResult out;
    run(sql, &out);
    return out;
  }

  void set_timeout(std::chrono::milliseconds limit) override {
    execute("SET statement_timeout = " + std::to_string(limit.count()));
  }

private:
  void run(const std::string& sql, QueryResult* out) {
    PGresult* res = lib_.exec(conn_, sql.c_str());
    if (!res) throw EnvironmentError("postgres: " + trimmed(lib_.error_message(conn_)));
    int status = lib_.result_status(res);
    if (status != PGRES_COMMAND_OK && status != PGRES_TUPLES_OK) {
      std::string msg = trimmed(lib_.result_error_message(res));
      const char* state = lib_.result_error_field(res, PG_DIAG_SQLSTATE);
      std::string code = state ? state : "";
      lib_.clear(res);
      if (code == "57014") throw TimeoutError("postgres: " + msg);
      if (code.rfind("08", 0) == 0) throw EnvironmentError("postgres: " + msg);
      throw StatementError("postgres: " + msg);
    }
    if (out) {
      int cols = lib_.nfields(res), rows = lib_.ntuples(res);
      for (int c = 0; c < cols; ++c) out->columns.emplace_back(lib_.fname(res, c));
      for (int r = 0; r < rows; ++r) {
        std::vector<Cell> row;
        for (int c = 0; c < cols; ++c) {
          if (lib_.getisnull(res, r, c)) row.emplace_back(std::nullopt);
          else row.emplace_back(std::string(lib_.getvalue(res, r, c)));
        }
        out->rows.push_back(std::move(row));
      }
    }
    lib_.clear(res);
  }

  const LibPq& lib_;
  PGconn* conn_ = nullptr;
};

}  // namespace

std::unique_ptr<Connection> connect_postgres(const std::string& conninfo) {
  return std::make_unique<PqConnection>(conninfo);
}

}  // namespace simpli2::db
