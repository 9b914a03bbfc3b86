#pragma once

#include <string>

#include "simpli2/costlab/executor.hpp"
#include "simpli2/join_graph.hpp"
#include "simpli2/planner.hpp"
#include "simpli2/rewriter.hpp"
#include "simpli2/sql/parser.hpp"

namespace simpli2::costlab {

/// Result of the query as written, evaluated through a connectivity-
/// respecting order so that the executor never materializes avoidable
/// Cartesian products.
inline ResultSet reference_result(const TableSet& tables, const QueryModel& q, const ExecOptions& options = {}) {
  auto g = JoinGraph(q.instances, q.joins);
  return execute_order(tables, q, size_order(g, SizeDirection::ascending, true), options).result;
}

/// Parses the rewritten SQL text and evaluates it level by level.
inline ResultSet evaluate_rewritten(const TableSet& tables, const RewrittenQuery& rewritten,
                                    const ExecOptions& options = {}, StatementTrace* trace = nullptr) {
  auto stmt = sql::parse_select(rewritten.sql, true);
  return evaluate(stmt, tables, options, trace);
}

/// True iff the rewritten form returns exactly the original's multiset.
inline bool check_equivalence(const TableSet& tables, const QueryModel& q, const RewrittenQuery& rewritten,
                              const ExecOptions& options = {}) {
  return same_multiset(reference_result(tables, q, options), evaluate_rewritten(tables, rewritten, options));
}

}  // namespace simpli2::costlab
