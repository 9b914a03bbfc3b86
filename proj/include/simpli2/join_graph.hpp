#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "simpli2/catalog.hpp"
#include "simpli2/error.hpp"
#include "simpli2/query.hpp"

namespace simpli2 {

/// Query join graph: table instances annotated with size, equi-join edges
/// annotated 1:n / n:m. Parallel edges are kept; adjacency is boolean.
class JoinGraph {
public:
  struct Edge {
    std::size_t left = 0;
    std::size_t right = 0;
    JoinPredicate predicate;
  };

  JoinGraph() = default;

  /// Builds directly from annotated parts. Edge endpoints are resolved by
  /// alias; throws ReferenceError on unknown aliases, ValidationError on
  /// duplicate aliases or self-loops.
  JoinGraph(std::vector<TableInstance> vertices, const std::vector<JoinPredicate>& edges)
      : vertices_(std::move(vertices)) {
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      if (!index_.emplace(vertices_[i].alias, i).second)
        throw ValidationError("duplicate vertex '" + vertices_[i].alias + "'");
    }
    adjacency_.resize(vertices_.size());
    many_to_many_.assign(vertices_.size(), false);
    for (const auto& pred : edges) {
      Edge e{index_of(pred.left.qualifier), index_of(pred.right.qualifier), pred};
      if (e.left == e.right) throw ValidationError("self-join edge on '" + pred.left.qualifier + "'");
      adjacency_[e.left].insert(e.right);
      adjacency_[e.right].insert(e.left);
      if (pred.kind == JoinKind::many_to_many) many_to_many_[e.left] = many_to_many_[e.right] = true;
      edges_.push_back(std::move(e));
    }
    compute_components();
  }

  std::size_t size() const { return vertices_.size(); }
  const std::vector<TableInstance>& vertices() const { return vertices_; }
  const TableInstance& vertex(std::size_t i) const { return vertices_.at(i); }
  const std::vector<Edge>& edges() const { return edges_; }

  std::size_t index_of(std::string_view alias) const {
    auto it = index_.find(alias);
    if (it == index_.end()) throw ReferenceError("join graph has no vertex '" + std::string(alias) + "'");
    return it->second;
  }
  bool contains(std::string_view alias) const { return index_.find(alias) != index_.end(); }

  const std::set<std::size_t>& neighbors(std::size_t v) const { return adjacency_.at(v); }
  bool adjacent(std::size_t a, std::size_t b) const { return adjacency_.at(a).count(b) != 0; }

  /// Vertex participates in at least one n:m edge.
  bool in_many_to_many(std::size_t v) const { return many_to_many_.at(v); }

  bool connected() const { return component_count_ <= 1; }
  std::size_t component_count() const { return component_count_; }
  std::size_t component_of(std::size_t v) const { return component_.at(v); }

private:
  void compute_components() {
    component_.assign(vertices_.size(), SIZE_MAX);
    component_count_ = 0;
    for (std::size_t start = 0; start < vertices_.size(); ++start) {
      if (component_[start] != SIZE_MAX) continue;
      std::vector<std::size_t> stack{start};
      component_[start] = component_count_;
      while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        for (auto w : adjacency_[v]) {
          if (component_[w] == SIZE_MAX) {
            component_[w] = component_count_;
            stack.push_back(w);
          }
        }
      }
      ++component_count_;
    }
  }

  std::vector<TableInstance> vertices_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<Edge> edges_;
  std::vector<std::set<std::size_t>> adjacency_;
  std::vector<bool> many_to_many_;
  std::vector<std::size_t> component_;
  std::size_t component_count_ = 0;
};

/// Annotates `q` as a join graph using only sizes and key membership from
/// `source`. With `transitive`, implied equi-joins are added first.
template <ConstraintSource Source>
JoinGraph build_join_graph(const QueryModel& q, const Source& source, bool transitive = false) {
  std::vector<TableInstance> vertices;
  for (const auto& inst : q.instances)
    vertices.push_back({inst.alias, inst.base_table, static_cast<std::uint64_t>(source.row_count(inst.base_table))});

  std::vector<JoinPredicate> edges = q.joins;
  if (transitive) {
    auto extra = implied_joins(q);
    edges.insert(edges.end(), extra.begin(), extra.end());
  }
  auto base_of = [&](const std::string& alias) -> const std::string& { return q.instance(alias).base_table; };
  for (auto& e : edges) classify_join(e, base_of(e.left.qualifier), base_of(e.right.qualifier), source);
  return JoinGraph(std::move(vertices), edges);
}

}  // namespace simpli2
