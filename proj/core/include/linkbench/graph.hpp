#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "linkbench/matrix.hpp"

namespace linkbench {

enum class Role : std::uint8_t { Source, Target };
enum class Relation : std::uint8_t { SS, ST, TT };
enum class GraphVariant : std::uint8_t { Bipartite, SExpanded, TExpanded, STExpanded };

std::string_view to_string(Role r);
std::string_view to_string(Relation r);
std::string_view to_string(GraphVariant v);
Relation parse_relation(std::string_view s);       // "ss" / "st" / "tt"
GraphVariant parse_variant(std::string_view s);    // "bipartite", "s_expanded", ...

/// Endpoint roles of a relation: SS = (Source, Source), ST = (Source, Target), ...
std::pair<Role, Role> endpoint_roles(Relation r);

/// Node identity inside one graph: role plus dense index into that role's table.
struct NodeRef {
  Role role;
  std::uint32_t index;
  friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

/// An undirected pair of node indices. For ST, u indexes sources and v targets;
/// for SS/TT the pair is stored canonically with u < v.
struct EdgePair {
  std::uint32_t u;
  std::uint32_t v;
  friend auto operator<=>(const EdgePair&, const EdgePair&) = default;
};

inline std::uint64_t edge_key(EdgePair e) noexcept {
  return (static_cast<std::uint64_t>(e.u) << 32) | e.v;
}

struct TypedEdgeList {
  Relation relation;
  std::vector<EdgePair> pairs;
};

/// Edges still expressed with external string ids (as read from disk).
struct RawEdgeList {
  Relation relation;
  std::vector<std::pair<std::string, std::string>> pairs;
};

class NodeTable {
 public:
  NodeTable() = default;

  /// Validates unique ids, row count == id count, finite values.
  static NodeTable create(Role role, std::vector<std::string> ids, Matrix features);

  Role role() const noexcept { return role_; }
  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return features_.cols(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::string& id(std::uint32_t i) const { return ids_.at(i); }
  const Matrix& features() const noexcept { return features_; }
  std::optional<std::uint32_t> find(std::string_view id) const;

  /// Keeps only the listed rows, in the given order.
  NodeTable subset(std::span<const std::uint32_t> rows) const;

  friend bool operator==(const NodeTable& a, const NodeTable& b) {
    return a.role_ == b.role_ && a.ids_ == b.ids_ && a.features_ == b.features_;
  }

 private:
  Role role_ = Role::Source;
  std::vector<std::string> ids_;
  Matrix features_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct Neighbor {
  Relation relation;
  NodeRef node;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Counters filled in while building a graph from raw edges.
struct BuildStats {
  std::size_t dropped_missing = 0;    // an endpoint had no feature row
  std::size_t merged_duplicates = 0;  // same undirected pair seen again
  std::size_t dropped_self_loops = 0;
};

enum class MissingIdPolicy { Drop, Error };

/// Immutable typed graph. Edges are stored once per undirected pair; the
/// adjacency index exposes both directions.
class HeteroGraph {
 public:
  HeteroGraph() = default;
  HeteroGraph(NodeTable sources, NodeTable targets, TypedEdgeList ss, TypedEdgeList st,
              TypedEdgeList tt, GraphVariant variant, BuildStats stats = {});

  const NodeTable& sources() const noexcept { return sources_; }
  const NodeTable& targets() const noexcept { return targets_; }
  const NodeTable& table(Role r) const noexcept {
    return r == Role::Source ? sources_ : targets_;
  }
  const TypedEdgeList& edges(Relation r) const noexcept;
  const TypedEdgeList& ss() const noexcept { return ss_; }
  const TypedEdgeList& st() const noexcept { return st_; }
  const TypedEdgeList& tt() const noexcept { return tt_; }
  GraphVariant variant() const noexcept { return variant_; }
  const BuildStats& build_stats() const noexcept { return stats_; }

  std::size_t num_nodes() const noexcept { return sources_.size() + targets_.size(); }
  std::size_t num_edges() const noexcept {
    return ss_.pairs.size() + st_.pairs.size() + tt_.pairs.size();
  }

  /// Global node numbering: sources first, then targets.
  std::uint32_t global(NodeRef n) const noexcept {
    return n.role == Role::Source ? n.index
                                  : static_cast<std::uint32_t>(sources_.size()) + n.index;
  }
  NodeRef node_at(std::uint32_t global_index) const noexcept;

  /// Neighbors ordered by relation (SS < ST < TT), then by neighbor index.
  std::span<const Neighbor> adjacency(NodeRef n) const;
  std::size_t degree(NodeRef n) const { return adjacency(n).size(); }

  friend bool operator==(const HeteroGraph& a, const HeteroGraph& b);

 private:
  void validate() const;
  void build_adjacency();

  NodeTable sources_;
  NodeTable targets_;
  TypedEdgeList ss_{Relation::SS, {}};
  TypedEdgeList st_{Relation::ST, {}};
  TypedEdgeList tt_{Relation::TT, {}};
  GraphVariant variant_ = GraphVariant::STExpanded;
  BuildStats stats_;
  std::vector<std::size_t> adj_offsets_;
  std::vector<Neighbor> adj_;
};

/// Builds from index-based edge lists. Out-of-range indices raise
/// UnknownNodeId; duplicates are merged and self-loops dropped (both counted).
HeteroGraph build_graph(NodeTable sources, NodeTable targets,
                        std::span<const TypedEdgeList> edges,
                        GraphVariant variant = GraphVariant::STExpanded);

/// Builds from id-based edge lists. Under MissingIdPolicy::Drop an edge whose
/// endpoint has no feature row is dropped and counted; under Error it raises
/// UnknownNodeId.
HeteroGraph build_graph(NodeTable sources, NodeTable targets,
                        std::span<const RawEdgeList> edges,
                        MissingIdPolicy policy = MissingIdPolicy::Drop,
                        GraphVariant variant = GraphVariant::STExpanded);

/// Restricts an STExpanded graph to the relations of `kind`, dropping nodes
/// left without incident edges.
HeteroGraph derive_variant(const HeteroGraph& g, GraphVariant kind);

struct RoleDegreeStats {
  double average = 0.0;
  double median = 0.0;
};

struct DegreeStats {
  RoleDegreeStats sources;
  RoleDegreeStats targets;
};

DegreeStats degree_stats(const HeteroGraph& g);

/// Same statistics recomputed through adjacency() rather than edge lists.
DegreeStats degree_stats_from_adjacency(const HeteroGraph& g);

}  // namespace linkbench
