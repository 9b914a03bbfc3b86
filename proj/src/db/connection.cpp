#include "db/connection.hpp"

#include <cstdlib>

namespace simpli2::db {

std::unique_ptr<Connection> connect(const std::string& url) {
  if (url == "sqlite::memory:") return connect_sqlite(":memory:");
  if (url.rfind("sqlite://", 0) == 0) return connect_sqlite(url.substr(9));
  if (url.rfind("postgres://", 0) == 0 || url.rfind("postgresql://", 0) == 0) return connect_postgres(url);
  throw Error("unsupported database URL '" + url + "' (expected sqlite://... or postgres://...)");
}

std::optional<std::string> resolve_url(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("DB_URL"); env && *env) return std::string(env);
  return std::nullopt;
}

}  // namespace simpli2::db
