#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "simpli2/catalog.hpp"
#include "simpli2/costlab/table.hpp"
#include "simpli2/error.hpp"
#include "simpli2/join_graph.hpp"
#include "simpli2/query.hpp"

namespace simpli2::costlab {

enum class Topology { star, chain, snowflake, cyclic, mixed };

inline Topology parse_topology(std::string_view name) {
  if (name == "star") return Topology::star;
  if (name == "chain") return Topology::chain;
  if (name == "snowflake") return Topology::snowflake;
  if (name == "cyclic") return Topology::cyclic;
  if (name == "mixed") return Topology::mixed;
  throw ValidationError("unknown topology '" + std::string(name) + "'");
}

inline const char* to_string(Topology t) {
  switch (t) {
    case Topology::star: return "star";
    case Topology::chain: return "chain";
    case Topology::snowflake: return "snowflake";
    case Topology::cyclic: return "cyclic";
    default: return "mixed";
  }
}

struct GeneratorConfig {
  std::uint64_t seed = 1;
  Topology topology = Topology::mixed;
  std::size_t tables = 4;  // query instances
  std::size_t min_rows = 5;
  std::size_t max_rows = 500;
  double skew = 1.5;  // exponent on foreign-key value draws; 1 is uniform
  double many_to_many_share = 0.4;
  double null_share = 0.05;
  bool allow_aggregates = true;
  bool allow_self_join = true;
};

/// A self-contained random benchmark instance: schema, data, and one query.
struct Instance {
  GeneratorConfig config;
  Catalog catalog;
  TableSet data;
  std::string sql;
  QueryModel query;
};

namespace detail {

struct InstanceEdge {
  std::size_t a = 0, b = 0;
  bool many_to_many = false;  // else b is the key (parent) side
};

inline std::vector<std::pair<std::size_t, std::size_t>> topology_edges(Topology topology, std::size_t n,
                                                                       std::mt19937_64& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  auto pick = [&](std::size_t hi) { return std::uniform_int_distribution<std::size_t>(0, hi - 1)(rng); };
  if (topology == Topology::mixed) topology = static_cast<Topology>(pick(4));
  for (std::size_t i = 1; i < n; ++i) {
    switch (topology) {
      case Topology::star: edges.emplace_back(0, i); break;
      case Topology::chain: edges.emplace_back(i - 1, i); break;
      default: edges.emplace_back(pick(i), i); break;
    }
  }
  if (topology == Topology::cyclic && n >= 3) {
    std::size_t chords = 1 + pick(2);
    for (std::size_t k = 0; k < chords * 4 && chords > 0; ++k) {
      std::size_t x = pick(n), y = pick(n);
      if (x == y) continue;
      auto e = std::minmax(x, y);
      if (std::find(edges.begin(), edges.end(), std::pair(e.first, e.second)) != edges.end()) continue;
      edges.emplace_back(e.first, e.second);
      --chords;
    }
  }
  return edges;
}

}  // namespace detail

/// Fills every table of a generator catalog with fresh rows: `id` is the
/// key, `a` a small integer, `s` nullable text, `grp` the many-to-many join
/// column, and each `<parent>_id` a skewed draw over the parent's ids.
inline TableSet generate_dataset(const Catalog& cat, std::uint64_t seed, double skew = 1.5, double null_share = 0.05) {
  static const std::vector<std::string> vocab = {"alpha", "beta", "gamma", "delta", "epsilon", "zeta"};
  std::mt19937_64 rng(seed);
  auto coin = [&](double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; };
  auto pick = [&](std::size_t hi) { return std::uniform_int_distribution<std::size_t>(0, hi - 1)(rng); };
  TableSet out;
  for (const auto& [name, def] : cat.tables()) {
    MiniTable t;
    t.name = name;
    t.columns = def.columns;
    auto rows = static_cast<std::size_t>(def.row_count);
    std::size_t groups = std::max<std::size_t>(2, rows / 3);
    for (std::size_t r = 0; r < rows; ++r) {
      Row row;
      for (const auto& col : def.columns) {
        if (col == "id") {
          row.push_back(static_cast<std::int64_t>(r + 1));
        } else if (col == "a") {
          row.push_back(static_cast<std::int64_t>(pick(10)));
        } else if (col == "s") {
          row.push_back(coin(null_share) ? Value{} : Value(vocab[pick(vocab.size())]));
        } else if (col == "grp") {
          row.push_back(static_cast<std::int64_t>(1 + pick(groups)));
        } else if (coin(null_share)) {
          row.push_back(Value{});
        } else {
          auto parent = static_cast<double>(cat.row_count(col.substr(0, col.size() - 3)));
          double u = std::uniform_real_distribution<double>(0, 1)(rng);
          auto id = static_cast<std::int64_t>(std::floor(parent * std::pow(u, skew))) + 1;
          row.push_back(std::min<std::int64_t>(id, static_cast<std::int64_t>(parent)));
        }
      }
      t.rows.push_back(std::move(row));
    }
    out.emplace(name, std::move(t));
  }
  return out;
}

inline Instance generate_instance(const GeneratorConfig& config) {
  if (config.tables == 0) throw ValidationError("generator needs at least one table");
  if (config.min_rows == 0 || config.min_rows > config.max_rows) throw ValidationError("invalid row range");
  std::mt19937_64 rng(config.seed);
  auto coin = [&](double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; };
  auto pick = [&](std::size_t hi) { return std::uniform_int_distribution<std::size_t>(0, hi - 1)(rng); };
  auto range = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };

  const std::size_t n = config.tables;
  // Instance -> base table; optionally one base table appears twice.
  std::vector<std::size_t> base_of(n);
  for (std::size_t i = 0; i < n; ++i) base_of[i] = i;
  std::size_t bases = n;
  if (config.allow_self_join && n >= 3 && coin(0.25)) {
    base_of[n - 1] = pick(n - 1);
    bases = n - 1;
  }

  std::vector<detail::InstanceEdge> edges;
  for (auto [x, y] : detail::topology_edges(config.topology, n, rng)) {
    detail::InstanceEdge e;
    e.many_to_many = coin(config.many_to_many_share);
    if (coin(0.5)) std::swap(x, y);
    e.a = x;
    e.b = y;
    edges.push_back(e);
  }

  auto table_name = [](std::size_t b) { return "t" + std::to_string(b); };
  std::vector<bool> is_parent(bases, false);
  std::vector<std::set<std::size_t>> fk_targets(bases);
  for (const auto& e : edges) {
    if (e.many_to_many) continue;
    is_parent[base_of[e.b]] = true;
    fk_targets[base_of[e.a]].insert(base_of[e.b]);
  }

  std::vector<std::size_t> rows(bases);
  for (std::size_t b = 0; b < bases; ++b) {
    std::size_t small_hi = std::max(config.min_rows, config.max_rows / 4);
    rows[b] = is_parent[b] ? range(config.min_rows, small_hi) : range(std::min(small_hi, config.max_rows), config.max_rows);
  }

  std::vector<TableDef> defs;
  std::vector<ForeignKeyDef> fks;
  Instance inst;
  inst.config = config;
  for (std::size_t b = 0; b < bases; ++b) {
    TableDef def;
    def.name = table_name(b);
    def.row_count = rows[b];
    def.columns = {"id", "a", "s", "grp"};
    for (auto p : fk_targets[b]) {
      def.columns.push_back(table_name(p) + "_id");
      fks.push_back({def.name, {table_name(p) + "_id"}, table_name(p), {"id"}});
    }
    def.unique_keys = {{"id"}};
    defs.push_back(std::move(def));
  }
  inst.catalog = Catalog::make(std::move(defs), std::move(fks));
  inst.data = generate_dataset(inst.catalog, rng(), config.skew, config.null_share);

  static const std::vector<std::string> vocab = {"alpha", "beta", "gamma", "delta", "epsilon", "zeta"};
  auto alias = [](std::size_t i) { return "x" + std::to_string(i); };
  std::vector<std::string> conjuncts;
  for (const auto& e : edges) {
    std::string lhs, rhs;
    if (e.many_to_many) {
      lhs = alias(e.a) + ".grp";
      rhs = alias(e.b) + ".grp";
    } else {
      lhs = alias(e.a) + "." + table_name(base_of[e.b]) + "_id";
      rhs = alias(e.b) + ".id";
    }
    if (coin(0.5)) std::swap(lhs, rhs);
    conjuncts.push_back(lhs + " = " + rhs);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!coin(0.5)) continue;
    auto x = alias(i);
    auto k = std::to_string(pick(10));
    switch (pick(8)) {
      case 0: conjuncts.push_back(x + ".a < " + k); break;
      case 1: conjuncts.push_back(x + ".a BETWEEN " + k + " AND " + std::to_string(std::stoi(k) + 3)); break;
      case 2: conjuncts.push_back(x + ".s LIKE '%" + vocab[pick(vocab.size())].substr(1, 2) + "%'"); break;
      case 3: conjuncts.push_back(x + ".s IN ('beta', 'gamma', 'zeta')"); break;
      case 4: conjuncts.push_back("(" + x + ".a = " + k + " OR " + x + ".s = 'delta')"); break;
      case 5: conjuncts.push_back(x + ".s IS NOT NULL"); break;
      case 6: conjuncts.push_back(x + ".a <> " + k); break;
      default: conjuncts.push_back(x + ".s NOT LIKE 'a%'"); break;
    }
  }
  if (n >= 2 && coin(0.15)) {
    std::size_t x = pick(n), y = pick(n);
    if (x != y) conjuncts.push_back(alias(x) + ".a <= " + alias(y) + ".a");
  }
  std::shuffle(conjuncts.begin(), conjuncts.end(), rng);

  std::vector<std::string> output;
  if (config.allow_aggregates && coin(0.2)) {
    output.push_back("MIN(" + alias(pick(n)) + ".s) AS min_s");
    output.push_back("COUNT(*) AS cnt");
  } else {
    std::size_t cols = 1 + pick(3);
    static const char* names[] = {"id", "a", "s"};
    for (std::size_t c = 0; c < cols; ++c) output.push_back(alias(pick(n)) + "." + names[pick(3)]);
  }
  std::vector<std::size_t> from(n);
  for (std::size_t i = 0; i < n; ++i) from[i] = i;
  std::shuffle(from.begin(), from.end(), rng);

  std::string sql = "SELECT ";
  for (std::size_t i = 0; i < output.size(); ++i) sql += (i ? ", " : "") + output[i];
  sql += "\nFROM ";
  for (std::size_t i = 0; i < from.size(); ++i)
    sql += (i ? ", " : "") + table_name(base_of[from[i]]) + " AS " + alias(from[i]);
  for (std::size_t i = 0; i < conjuncts.size(); ++i) sql += (i ? "\n  AND " : "\nWHERE ") + conjuncts[i];
  sql += ";\n";
  inst.sql = sql;
  inst.query = parse_query(sql, inst.catalog);
  return inst;
}

struct GraphGeneratorConfig {
  std::uint64_t seed = 1;
  std::size_t min_vertices = 2;
  std::size_t max_vertices = 14;
  double many_to_many_share = 0.35;
  double extra_edge_share = 0.25;  // chords on top of the spanning tree
};

/// Random connected join graph with mixed 1:n / n:m edges. Sizes come from
/// a small pool so that equal sizes (and therefore alias tie-breaks) occur.
inline JoinGraph random_join_graph(const GraphGeneratorConfig& config) {
  std::mt19937_64 rng(config.seed);
  auto pick = [&](std::size_t hi) { return std::uniform_int_distribution<std::size_t>(0, hi - 1)(rng); };
  auto coin = [&](double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; };
  std::size_t n = config.min_vertices + pick(config.max_vertices - config.min_vertices + 1);

  static const std::uint64_t sizes[] = {4, 7, 12, 113, 134'170, 1'380'035, 2'528'312, 4'167'491, 14'835'720, 36'244'344};
  std::vector<std::uint64_t> base_size(n);
  for (auto& s : base_size) s = sizes[pick(std::size(sizes))];
  std::vector<TableInstance> vertices;
  for (std::size_t i = 0; i < n; ++i) {
    auto base = pick(n);  // repeated bases model self-joins
    vertices.push_back({"v" + std::to_string(i), "r" + std::to_string(base), base_size[base]});
  }
  std::vector<JoinPredicate> edges;
  auto add = [&](std::size_t a, std::size_t b) {
    JoinPredicate p;
    p.left = {vertices[a].alias, "c"};
    p.right = {vertices[b].alias, "c"};
    p.ordinal = edges.size();
    if (coin(config.many_to_many_share)) {
      p.kind = JoinKind::many_to_many;
      p.key_side = KeySide::none;
    } else {
      p.kind = JoinKind::one_to_many;
      p.key_side = coin(0.5) ? KeySide::left : KeySide::right;
    }
    edges.push_back(p);
  };
  for (std::size_t i = 1; i < n; ++i) add(pick(i), i);
  std::size_t chords = static_cast<std::size_t>(config.extra_edge_share * static_cast<double>(n));
  for (std::size_t k = 0; k < chords; ++k) {
    std::size_t a = pick(n), b = pick(n);
    if (a != b) add(a, b);
  }
  return JoinGraph(std::move(vertices), edges);
}

}  // namespace simpli2::costlab
