#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "simpli2/costlab/executor.hpp"
#include "simpli2/error.hpp"
#include "simpli2/join_graph.hpp"
#include "simpli2/planner.hpp"

namespace simpli2::costlab {

class BoundExceeded : public Error {
public:
  using Error::Error;
};

struct OptimalOptions {
  std::size_t max_tables = 10;
  bool cartesian_allowed = false;
  ExecOptions exec;
};

struct OptimalResult {
  JoinOrder order;
  CostReport cost;
};

/// Join graph of `q` as written, with edges classified as parsed.
inline JoinGraph query_graph(const QueryModel& q) { return JoinGraph(q.instances, q.joins); }

/// Minimum analytical cost over all left-deep orders, by dynamic
/// programming over table subsets with exactly computed subset
/// cardinalities. The cost of a prefix set does not depend on its internal
/// order, so best(S) = |S| + min over last table v of best(S - v). Ties go
/// to the lexicographically smallest sequence.
inline OptimalResult optimal_order(const TableSet& tables, const QueryModel& q, const OptimalOptions& options = {}) {
  const std::size_t n = q.instances.size();
  if (n > options.max_tables)
    throw BoundExceeded("exhaustive search is limited to " + std::to_string(options.max_tables) + " tables, query has " +
                        std::to_string(n));
  if (n == 0) throw ValidationError("query has no tables");
  auto g = query_graph(q);

  std::vector<std::uint32_t> neighbor_mask(n, 0);
  for (std::size_t v = 0; v < n; ++v)
    for (auto w : g.neighbors(v)) neighbor_mask[v] |= 1u << w;

  auto conjuncts = conjunct_exprs(q);
  std::vector<std::uint32_t> conjunct_mask;
  for (const auto& c : conjuncts) {
    std::uint32_t m = 0;
    sql::visit_columns(c, [&](const ColumnRef& ref) { m |= 1u << g.index_of(ref.qualifier); });
    conjunct_mask.push_back(m);
  }
  auto conjuncts_within = [&](std::uint32_t mask) {
    std::vector<sql::Expr> out;
    for (std::size_t i = 0; i < conjuncts.size(); ++i)
      if ((conjunct_mask[i] & ~mask) == 0) out.push_back(conjuncts[i]);
    return out;
  };
  auto base = [&](std::size_t v) {
    const auto& inst = q.instances[v];
    return instance_relation(tables, inst.base_table, inst.alias);
  };

  struct Best {
    std::uint64_t cost = 0;
    std::vector<std::string> sequence;
  };
  auto better = [](const Best& a, const Best& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.sequence < b.sequence;
  };

  const std::uint32_t full = n == 32 ? ~0u : (1u << n) - 1;
  std::map<std::uint32_t, Best> best;
  std::map<std::uint32_t, Relation> layer;  // materialized results of the previous subset size
  for (std::size_t v = 0; v < n; ++v) {
    std::uint32_t m = 1u << v;
    std::vector<Relation> in;
    in.push_back(base(v));
    layer[m] = join_left_deep(std::move(in), conjuncts_within(m), options.exec).result;
    best[m] = {0, {q.instances[v].alias}};
  }

  for (std::size_t size = 2; size <= n; ++size) {
    std::map<std::uint32_t, Relation> next;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != size) continue;
      std::optional<Best> winner;
      std::optional<std::uint64_t> cardinality;
      for (std::size_t v = 0; v < n; ++v) {
        if (!(mask & (1u << v))) continue;
        std::uint32_t prev = mask ^ (1u << v);
        auto it = best.find(prev);
        if (it == best.end()) continue;
        if (!options.cartesian_allowed && !(neighbor_mask[v] & prev)) continue;
        if (!cardinality) {
          std::vector<Relation> in;
          in.push_back(layer.at(prev));
          in.push_back(base(v));
          auto run = join_left_deep(std::move(in), conjuncts_within(mask), options.exec);
          cardinality = run.result.rows.size();
          next[mask] = std::move(run.result);
        }
        Best candidate{it->second.cost + *cardinality, it->second.sequence};
        candidate.sequence.push_back(q.instances[v].alias);
        if (!winner || better(candidate, *winner)) winner = std::move(candidate);
      }
      if (winner) best[mask] = std::move(*winner);
    }
    layer = std::move(next);
  }

  auto it = best.find(full);
  if (it == best.end()) throw ValidationError("the join graph is disconnected; no Cartesian-free order exists");
  OptimalResult out;
  out.order = sequence_order(g, it->second.sequence, "optimal");
  out.cost = execute_order(tables, q, out.order, options.exec).cost;
  return out;
}

}  // namespace simpli2::costlab
