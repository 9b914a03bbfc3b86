#pragma once

#include <optional>
#include <string>
#include <vector>

#include "simpli2/costlab/equivalence.hpp"
#include "simpli2/costlab/optimal.hpp"

namespace simpli2::costlab {

struct CompareOptions {
  std::size_t dp_bound = 10;
  /// Size baselines may take Cartesian steps (the optimum then searches
  /// all permutations too, so it stays a lower bound).
  bool cartesian_baselines = false;
  bool check_rewrites = true;
  ExecOptions exec;
};

enum class RowStatus { ok, skipped, failed };

inline const char* to_string(RowStatus s) {
  switch (s) {
    case RowStatus::ok: return "ok";
    case RowStatus::skipped: return "skipped";
    default: return "failed";
  }
}

struct CompareRow {
  std::string algorithm;
  RowStatus status = RowStatus::ok;
  std::optional<CostReport> cost;
  std::optional<bool> subquery_equivalent;
  std::optional<bool> leftdeep_equivalent;
  std::string note;
};

struct Comparison {
  std::vector<CompareRow> rows;

  const CompareRow* find(const std::string& algorithm) const {
    for (const auto& r : rows)
      if (r.algorithm == algorithm) return &r;
    return nullptr;
  }
};

/// Costs simpli2, both size sorts and, within the bound, the exhaustive
/// optimum on one dataset. Failures of one order never abort the others.
inline Comparison compare_orders(const TableSet& tables, const QueryModel& q, const JoinGraph& g,
                                 const CompareOptions& options = {}) {
  Comparison out;
  std::optional<ResultSet> reference;
  auto reference_rows = [&]() -> const ResultSet& {
    if (!reference) reference = normalized(reference_result(tables, q, options.exec));
    return *reference;
  };
  auto equivalent = [&](const RewrittenQuery& r) {
    return same_multiset(reference_rows(), evaluate_rewritten(tables, r, options.exec));
  };

  bool connected_baselines = !options.cartesian_baselines;
  std::vector<JoinOrder> heuristics = {
      simpli2_order(g),
      size_order(g, SizeDirection::ascending, connected_baselines),
      size_order(g, SizeDirection::descending, connected_baselines),
  };
  for (auto& o : heuristics) {
    CompareRow row;
    row.algorithm = o.algorithm;
    try {
      row.cost = execute_order(tables, q, o, options.exec).cost;
      if (options.check_rewrites) {
        if (!q.star || o.partitions.size() <= 1) row.subquery_equivalent = equivalent(rewrite_subquery(q, o));
        row.leftdeep_equivalent = equivalent(rewrite_leftdeep(q, o));
      }
    } catch (const Error& e) {
      row.status = RowStatus::failed;
      row.note = e.what();
    }
    out.rows.push_back(std::move(row));
  }

  CompareRow best;
  best.algorithm = "optimal";
  OptimalOptions opt;
  opt.max_tables = options.dp_bound;
  opt.cartesian_allowed = options.cartesian_baselines || !g.connected();
  opt.exec = options.exec;
  try {
    best.cost = optimal_order(tables, q, opt).cost;
  } catch (const BoundExceeded& e) {
    best.status = RowStatus::skipped;
    best.note = e.what();
  } catch (const Error& e) {
    best.status = RowStatus::failed;
    best.note = e.what();
  }
  out.rows.push_back(std::move(best));
  return out;
}

inline nlohmann::ordered_json to_json(const Comparison& c) {
  auto doc = nlohmann::ordered_json::array();
  for (const auto& r : c.rows) {
    nlohmann::ordered_json row = {{"algorithm", r.algorithm}, {"status", to_string(r.status)}};
    if (r.cost) {
      row["sequence"] = r.cost->order.sequence;
      row["step_cardinalities"] = r.cost->step_cardinalities;
      row["analytical_cost"] = r.cost->analytical_cost;
    }
    if (r.subquery_equivalent) row["subquery_equivalent"] = *r.subquery_equivalent;
    if (r.leftdeep_equivalent) row["leftdeep_equivalent"] = *r.leftdeep_equivalent;
    if (!r.note.empty()) row["note"] = r.note;
    doc.push_back(std::move(row));
  }
  return doc;
}

}  // namespace simpli2::costlab
