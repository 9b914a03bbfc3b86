#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "simpli2/error.hpp"
#include "simpli2/join_graph.hpp"

namespace simpli2 {

/// How a vertex entered the order.
///  - seed: first vertex when the graph has no n:m edge (or first of a baseline)
///  - fk_head: n:m participant opening a partition
///  - fk_candidate: 1:n neighbor appended after its partition head
///  - inserted_orphan: spliced after its leftmost ordered neighbor (bridges
///    between disconnected n:m splits and the final 1:n tables)
///  - inserted_disconnect: nothing joins the prefix; a Cartesian step
///  - ranked: placed by a size-sorting baseline or the exhaustive oracle
enum class Provenance { seed, fk_head, fk_candidate, inserted_orphan, inserted_disconnect, ranked };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::seed: return "seed";
    case Provenance::fk_head: return "fk_head";
    case Provenance::fk_candidate: return "fk_candidate";
    case Provenance::inserted_orphan: return "inserted_orphan";
    case Provenance::inserted_disconnect: return "inserted_disconnect";
    case Provenance::ranked: return "ranked";
  }
  return "?";
}

struct Partition {
  std::string head;
  std::vector<std::string> members;  // head first

  bool operator==(const Partition&) const = default;
};

/// A left-deep join order grouped into contiguous partitions.
struct JoinOrder {
  std::string algorithm;
  std::vector<std::string> sequence;
  std::vector<Partition> partitions;
  std::map<std::string, Provenance> provenance;
  std::map<std::string, std::string> anchors;  // spliced vertex -> neighbor it was placed after
  std::vector<std::string> warnings;

  std::size_t position(const std::string& alias) const {
    auto it = std::find(sequence.begin(), sequence.end(), alias);
    if (it == sequence.end()) throw ReferenceError("order has no alias '" + alias + "'");
    return static_cast<std::size_t>(it - sequence.begin());
  }

  std::size_t partition_of(const std::string& alias) const {
    for (std::size_t p = 0; p < partitions.size(); ++p) {
      const auto& m = partitions[p].members;
      if (std::find(m.begin(), m.end(), alias) != m.end()) return p;
    }
    throw ReferenceError("order has no alias '" + alias + "'");
  }
};

namespace detail {

class OrderBuilder {
public:
  explicit OrderBuilder(const JoinGraph& g) : g_(g), placed_(g.size(), false), anchor_(g.size()) {}

  /// Strict "smaller" on (row count, alias).
  bool smaller(std::size_t a, std::size_t b) const {
    const auto& x = g_.vertex(a);
    const auto& y = g_.vertex(b);
    if (x.size != y.size) return x.size < y.size;
    return x.alias < y.alias;
  }

  template <class Pred>
  std::optional<std::size_t> smallest(Pred&& keep) const {
    std::optional<std::size_t> best;
    for (std::size_t v = 0; v < g_.size(); ++v) {
      if (keep(v) && (!best || smaller(v, *best))) best = v;
    }
    return best;
  }

  bool empty() const { return parts_.empty(); }
  bool placed(std::size_t v) const { return placed_[v]; }
  bool complete() const { return std::all_of(placed_.begin(), placed_.end(), [](bool b) { return b; }); }

  bool joins_prefix(std::size_t v) const {
    for (auto w : g_.neighbors(v))
      if (placed_[w]) return true;
    return false;
  }

  void open_partition(std::size_t head, Provenance p) {
    parts_.push_back({head});
    mark(head, p);
  }

  void append(std::size_t v, Provenance p) {
    parts_.back().push_back(v);
    mark(v, p);
  }

  /// Inserts `v` after the leftmost placed neighbor; earlier insertions at
  /// the same anchor stay in front.
  void splice(std::size_t v, Provenance p) {
    std::optional<std::size_t> anchor;
    for (const auto& part : parts_) {
      for (auto w : part) {
        if (g_.adjacent(v, w)) {
          anchor = w;
          break;
        }
      }
      if (anchor) break;
    }
    if (!anchor) throw ValidationError("splice of '" + g_.vertex(v).alias + "' without an ordered neighbor");
    for (auto& part : parts_) {
      auto it = std::find(part.begin(), part.end(), *anchor);
      if (it == part.end()) continue;
      ++it;
      while (it != part.end() && anchor_[*it] == anchor) ++it;
      part.insert(it, v);
      break;
    }
    anchor_[v] = anchor;
    mark(v, p);
  }

  JoinOrder finish(std::string algorithm, std::vector<std::string> warnings) const {
    JoinOrder o;
    o.algorithm = std::move(algorithm);
    o.warnings = std::move(warnings);
    for (const auto& part : parts_) {
      Partition p;
      p.head = g_.vertex(part.front()).alias;
      for (auto v : part) {
        const auto& alias = g_.vertex(v).alias;
        p.members.push_back(alias);
        o.sequence.push_back(alias);
        o.provenance[alias] = provenance_.at(v);
        if (anchor_[v]) o.anchors[alias] = g_.vertex(*anchor_[v]).alias;
      }
      o.partitions.push_back(std::move(p));
    }
    return o;
  }

private:
  void mark(std::size_t v, Provenance p) {
    placed_[v] = true;
    provenance_[v] = p;
  }

  const JoinGraph& g_;
  std::vector<std::vector<std::size_t>> parts_;
  std::vector<bool> placed_;
  std::vector<std::optional<std::size_t>> anchor_;
  std::map<std::size_t, Provenance> provenance_;
};

inline std::string cartesian_warning(const JoinGraph& g, std::size_t v) {
  return "Cartesian product: '" + g.vertex(v).alias + "' shares no join predicate with the preceding tables";
}

}  // namespace detail

/// Splits the join graph along its many-to-many edges, orders
/// the splits by the size of their n:m table, fills each split with its 1:n
/// neighbors smallest first, then splices the remaining 1:n tables after the
/// leftmost table they join. Uses nothing but sizes and edge kinds.
inline JoinOrder simpli2_order(const JoinGraph& g) {
  if (g.size() == 0) throw ValidationError("join graph has no vertices");
  detail::OrderBuilder b(g);
  std::vector<std::string> warnings;

  std::set<std::size_t> fk;
  for (std::size_t v = 0; v < g.size(); ++v)
    if (g.in_many_to_many(v)) fk.insert(v);

  while (!fk.empty()) {
    std::optional<std::size_t> f;
    if (b.empty()) {
      f = b.smallest([&](std::size_t v) { return fk.count(v) != 0; });
    } else {
      f = b.smallest([&](std::size_t v) { return fk.count(v) && b.joins_prefix(v); });
    }
    Provenance head_provenance = Provenance::fk_head;
    if (!f) {
      // Disconnected n:m splits: bridge with the smallest table that joins
      // the current order.
      auto bridge = b.smallest([&](std::size_t v) { return !b.placed(v) && b.joins_prefix(v); });
      if (bridge) {
        b.splice(*bridge, Provenance::inserted_orphan);
        continue;
      }
      auto loose = *b.smallest([&](std::size_t v) { return !b.placed(v); });
      warnings.push_back(detail::cartesian_warning(g, loose));
      if (!fk.count(loose)) {
        b.append(loose, Provenance::inserted_disconnect);
        continue;
      }
      f = loose;
      head_provenance = Provenance::inserted_disconnect;
    }

    b.open_partition(*f, head_provenance);
    std::vector<std::size_t> candidates;
    for (auto w : g.neighbors(*f))
      if (!fk.count(w) && !b.placed(w)) candidates.push_back(w);
    std::sort(candidates.begin(), candidates.end(), [&](auto x, auto y) { return b.smaller(x, y); });
    for (auto c : candidates) b.append(c, Provenance::fk_candidate);
    fk.erase(*f);
  }

  if (b.empty()) b.open_partition(*b.smallest([](std::size_t) { return true; }), Provenance::seed);

  while (!b.complete()) {
    auto next = b.smallest([&](std::size_t v) { return !b.placed(v) && b.joins_prefix(v); });
    if (next) {
      b.splice(*next, Provenance::inserted_orphan);
      continue;
    }
    auto loose = *b.smallest([&](std::size_t v) { return !b.placed(v); });
    warnings.push_back(detail::cartesian_warning(g, loose));
    b.append(loose, Provenance::inserted_disconnect);
  }
  return b.finish("simpli2", std::move(warnings));
}

enum class SizeDirection { ascending, descending };

/// Size-sorting baselines. Descending without adjacency is the MapD
/// optimizer's order. With `avoid_cartesian`, each step takes the
/// extreme-size table adjacent to the prefix when one exists.
inline JoinOrder size_order(const JoinGraph& g, SizeDirection direction, bool avoid_cartesian) {
  if (g.size() == 0) throw ValidationError("join graph has no vertices");
  auto better = [&](std::size_t a, std::size_t b) {
    const auto& x = g.vertex(a);
    const auto& y = g.vertex(b);
    if (x.size != y.size) return direction == SizeDirection::ascending ? x.size < y.size : x.size > y.size;
    return x.alias < y.alias;
  };
  std::vector<bool> placed(g.size(), false);
  std::vector<std::size_t> sequence;
  auto joins_prefix = [&](std::size_t v) {
    for (auto w : g.neighbors(v))
      if (placed[w]) return true;
    return false;
  };
  while (sequence.size() < g.size()) {
    std::optional<std::size_t> pick;
    for (std::size_t v = 0; v < g.size(); ++v) {
      if (placed[v]) continue;
      if (avoid_cartesian && !sequence.empty() && !joins_prefix(v)) continue;
      if (!pick || better(v, *pick)) pick = v;
    }
    if (!pick) {
      for (std::size_t v = 0; v < g.size(); ++v)
        if (!placed[v] && (!pick || better(v, *pick))) pick = v;
    }
    placed[*pick] = true;
    sequence.push_back(*pick);
  }

  JoinOrder o;
  o.algorithm = std::string(direction == SizeDirection::ascending ? "size-asc" : "size-desc") +
                (avoid_cartesian ? "-connected" : "");
  Partition p;
  std::vector<bool> seen(g.size(), false);
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    auto v = sequence[i];
    const auto& alias = g.vertex(v).alias;
    o.sequence.push_back(alias);
    p.members.push_back(alias);
    bool cartesian = false;
    if (i > 0) {
      cartesian = true;
      for (auto w : g.neighbors(v))
        if (seen[w]) cartesian = false;
    }
    seen[v] = true;
    o.provenance[alias] = i == 0 ? Provenance::seed : (cartesian ? Provenance::inserted_disconnect : Provenance::ranked);
    if (cartesian) o.warnings.push_back(detail::cartesian_warning(g, v));
  }
  p.head = p.members.front();
  o.partitions.push_back(std::move(p));
  return o;
}

/// Wraps an arbitrary sequence as a single-partition order (used for
/// externally supplied and exhaustive-search orders).
inline JoinOrder sequence_order(const JoinGraph& g, const std::vector<std::string>& sequence, std::string algorithm) {
  JoinOrder o;
  o.algorithm = std::move(algorithm);
  o.sequence = sequence;
  if (!sequence.empty()) o.partitions.push_back({sequence.front(), sequence});
  std::set<std::size_t> prefix;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    auto v = g.index_of(sequence[i]);
    bool cartesian = i > 0 && std::none_of(prefix.begin(), prefix.end(), [&](auto w) { return g.adjacent(v, w); });
    o.provenance[sequence[i]] = i == 0 ? Provenance::seed : (cartesian ? Provenance::inserted_disconnect : Provenance::ranked);
    if (cartesian) o.warnings.push_back(detail::cartesian_warning(g, v));
    prefix.insert(v);
  }
  return o;
}

struct OrderViolation {
  std::size_t position = 0;
  std::string alias;

  bool operator==(const OrderViolation&) const = default;
};

/// Positions i > 0 whose table shares no edge with sequence[0..i). Throws
/// ValidationError unless the sequence is a permutation of the vertices.
inline std::vector<OrderViolation> validate_order(const JoinGraph& g, const JoinOrder& o) {
  if (o.sequence.size() != g.size()) throw ValidationError("order length differs from the join graph's vertex count");
  std::vector<bool> seen(g.size(), false);
  std::vector<OrderViolation> out;
  for (std::size_t i = 0; i < o.sequence.size(); ++i) {
    if (!g.contains(o.sequence[i])) throw ValidationError("order names unknown table '" + o.sequence[i] + "'");
    auto v = g.index_of(o.sequence[i]);
    if (seen[v]) throw ValidationError("order repeats '" + o.sequence[i] + "'");
    if (i > 0) {
      bool joined = false;
      for (auto w : g.neighbors(v))
        if (seen[w]) joined = true;
      if (!joined) out.push_back({i, o.sequence[i]});
    }
    seen[v] = true;
  }
  return out;
}

inline nlohmann::ordered_json to_json(const JoinOrder& o) {
  nlohmann::ordered_json doc;
  doc["algorithm"] = o.algorithm;
  doc["sequence"] = o.sequence;
  doc["partitions"] = nlohmann::ordered_json::array();
  for (const auto& p : o.partitions) doc["partitions"].push_back({{"head", p.head}, {"members", p.members}});
  doc["provenance"] = nlohmann::ordered_json::object();
  for (const auto& alias : o.sequence) {
    nlohmann::ordered_json entry = {{"kind", to_string(o.provenance.at(alias))}};
    if (auto it = o.anchors.find(alias); it != o.anchors.end()) entry["after"] = it->second;
    doc["provenance"][alias] = std::move(entry);
  }
  doc["warnings"] = o.warnings;
  return doc;
}

/// Plain-text report: one line per field, partitions in brackets.
inline std::string render_report(const JoinOrder& o) {
  auto list = [](const std::vector<std::string>& xs) {
    std::string out = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + xs[i];
    return out + "]";
  };
  std::string out = "algorithm:  " + o.algorithm + "\n";
  out += "sequence:   " + list(o.sequence) + "\n";
  out += "partitions: [";
  for (std::size_t i = 0; i < o.partitions.size(); ++i) out += (i ? ", " : "") + list(o.partitions[i].members);
  out += "]\nprovenance:\n";
  for (const auto& alias : o.sequence) {
    out += "  " + alias + ": " + to_string(o.provenance.at(alias));
    if (auto it = o.anchors.find(alias); it != o.anchors.end()) out += " (after " + it->second + ")";
    out += "\n";
  }
  for (const auto& w : o.warnings) out += "warning: " + w + "\n";
  return out;
}

}  // namespace simpli2
