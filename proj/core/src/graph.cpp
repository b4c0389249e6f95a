#include "linkbench/graph.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <fmt/format.h>

#include "linkbench/error.hpp"

namespace linkbench {

std::string_view to_string(Role r) {
  return r == Role::Source ? "source" : "target";
}

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::SS: return "ss";
    case Relation::ST: return "st";
    case Relation::TT: return "tt";
  }
  return "?";
}

std::string_view to_string(GraphVariant v) {
  switch (v) {
    case GraphVariant::Bipartite: return "bipartite";
    case GraphVariant::SExpanded: return "s_expanded";
    case GraphVariant::TExpanded: return "t_expanded";
    case GraphVariant::STExpanded: return "st_expanded";
  }
  return "?";
}

Relation parse_relation(std::string_view s) {
  if (s == "ss") return Relation::SS;
  if (s == "st") return Relation::ST;
  if (s == "tt") return Relation::TT;
  fail(ErrorCode::UnknownRelation, fmt::format("relation tag '{}'", s));
}

GraphVariant parse_variant(std::string_view s) {
  if (s == "bipartite") return GraphVariant::Bipartite;
  if (s == "s_expanded") return GraphVariant::SExpanded;
  if (s == "t_expanded") return GraphVariant::TExpanded;
  if (s == "st_expanded") return GraphVariant::STExpanded;
  fail(ErrorCode::ConfigInvalid, fmt::format("unknown graph variant '{}'", s));
}

std::pair<Role, Role> endpoint_roles(Relation r) {
  switch (r) {
    case Relation::SS: return {Role::Source, Role::Source};
    case Relation::ST: return {Role::Source, Role::Target};
    case Relation::TT: return {Role::Target, Role::Target};
  }
  return {Role::Source, Role::Target};
}

// ---------------------------------------------------------------------------
// NodeTable

NodeTable NodeTable::create(Role role, std::vector<std::string> ids, Matrix features) {
  if (features.rows() != ids.size()) {
    fail(ErrorCode::DimensionMismatch,
         fmt::format("{} table has {} ids but {} feature rows", to_string(role),
                     ids.size(), features.rows()));
  }
  if (!ids.empty() && features.cols() == 0) {
    fail(ErrorCode::DimensionMismatch,
         fmt::format("{} table has zero feature columns", to_string(role)));
  }
  if (!features.all_finite()) {
    fail(ErrorCode::NonFinite, fmt::format("{} features contain NaN/Inf", to_string(role)));
  }
  NodeTable t;
  t.role_ = role;
  t.index_.reserve(ids.size());
  for (std::uint32_t i = 0; i < ids.size(); ++i) {
    if (!t.index_.emplace(ids[i], i).second) {
      fail(ErrorCode::DuplicateId, fmt::format("{} id '{}'", to_string(role), ids[i]));
    }
  }
  t.ids_ = std::move(ids);
  t.features_ = std::move(features);
  return t;
}

std::optional<std::uint32_t> NodeTable::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeTable NodeTable::subset(std::span<const std::uint32_t> rows) const {
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  Matrix feats(rows.size(), dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ids.push_back(ids_.at(rows[i]));
    auto src = features_.row(rows[i]);
    std::copy(src.begin(), src.end(), feats.row(i).begin());
  }
  return create(role_, std::move(ids), std::move(feats));
}

// ---------------------------------------------------------------------------
// HeteroGraph

HeteroGraph::HeteroGraph(NodeTable sources, NodeTable targets, TypedEdgeList ss,
                         TypedEdgeList st, TypedEdgeList tt, GraphVariant variant,
                         BuildStats stats)
    : sources_(std::move(sources)),
      targets_(std::move(targets)),
      ss_(std::move(ss)),
      st_(std::move(st)),
      tt_(std::move(tt)),
      variant_(variant),
      stats_(stats) {
  validate();
  build_adjacency();
}

const TypedEdgeList& HeteroGraph::edges(Relation r) const noexcept {
  switch (r) {
    case Relation::SS: return ss_;
    case Relation::ST: return st_;
    case Relation::TT: return tt_;
  }
  return st_;
}

NodeRef HeteroGraph::node_at(std::uint32_t g) const noexcept {
  const auto ns = static_cast<std::uint32_t>(sources_.size());
  return g < ns ? NodeRef{Role::Source, g} : NodeRef{Role::Target, g - ns};
}

void HeteroGraph::validate() const {
  if (sources_.role() != Role::Source || targets_.role() != Role::Target) {
    fail(ErrorCode::ConfigInvalid, "node tables passed with swapped roles");
  }
  if (ss_.relation != Relation::SS || st_.relation != Relation::ST ||
      tt_.relation != Relation::TT) {
    fail(ErrorCode::ConfigInvalid, "edge lists passed with wrong relation tags");
  }
  for (const TypedEdgeList* list : {&ss_, &st_, &tt_}) {
    auto [ru, rv] = endpoint_roles(list->relation);
    const std::size_t nu = table(ru).size();
    const std::size_t nv = table(rv).size();
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(list->pairs.size());
    for (const auto& e : list->pairs) {
      if (e.u >= nu || e.v >= nv) {
        fail(ErrorCode::UnknownNodeId,
             fmt::format("{} edge ({}, {}) out of range", to_string(list->relation), e.u, e.v));
      }
      if (list->relation != Relation::ST && e.u >= e.v) {
        fail(ErrorCode::ConfigInvalid,
             fmt::format("{} edge ({}, {}) is not canonical or is a self-loop",
                         to_string(list->relation), e.u, e.v));
      }
      if (!seen.insert(edge_key(e)).second) {
        fail(ErrorCode::ConfigInvalid,
             fmt::format("duplicate {} edge ({}, {})", to_string(list->relation), e.u, e.v));
      }
    }
  }
  const bool has_ss = !ss_.pairs.empty();
  const bool has_tt = !tt_.pairs.empty();
  const bool ok = variant_ == GraphVariant::STExpanded ||
                  (variant_ == GraphVariant::Bipartite && !has_ss && !has_tt) ||
                  (variant_ == GraphVariant::SExpanded && !has_tt) ||
                  (variant_ == GraphVariant::TExpanded && !has_ss);
  if (!ok) {
    fail(ErrorCode::ConfigInvalid,
         fmt::format("edge relations present violate variant {}", to_string(variant_)));
  }
}

void HeteroGraph::build_adjacency() {
  const std::size_t n = num_nodes();
  std::vector<std::vector<Neighbor>> lists(n);
  const auto add = [&](Relation rel, NodeRef a, NodeRef b) {
    lists[global(a)].push_back({rel, b});
    lists[global(b)].push_back({rel, a});
  };
  for (const auto& e : ss_.pairs) add(Relation::SS, {Role::Source, e.u}, {Role::Source, e.v});
  for (const auto& e : st_.pairs) add(Relation::ST, {Role::Source, e.u}, {Role::Target, e.v});
  for (const auto& e : tt_.pairs) add(Relation::TT, {Role::Target, e.u}, {Role::Target, e.v});

  adj_offsets_.assign(n + 1, 0);
  adj_.clear();
  adj_.reserve(2 * num_edges());
  for (std::size_t i = 0; i < n; ++i) {
    auto& l = lists[i];
    std::sort(l.begin(), l.end(), [](const Neighbor& a, const Neighbor& b) {
      if (a.relation != b.relation) return a.relation < b.relation;
      return a.node < b.node;
    });
    adj_.insert(adj_.end(), l.begin(), l.end());
    adj_offsets_[i + 1] = adj_.size();
  }
}

std::span<const Neighbor> HeteroGraph::adjacency(NodeRef n) const {
  if (n.index >= table(n.role).size()) {
    fail(ErrorCode::IndexOutOfRange,
         fmt::format("{} index {} (table size {})", to_string(n.role), n.index,
                     table(n.role).size()));
  }
  const auto g = global(n);
  return {adj_.data() + adj_offsets_[g], adj_offsets_[g + 1] - adj_offsets_[g]};
}

bool operator==(const HeteroGraph& a, const HeteroGraph& b) {
  return a.variant_ == b.variant_ && a.sources_ == b.sources_ && a.targets_ == b.targets_ &&
         a.ss_.pairs == b.ss_.pairs && a.st_.pairs == b.st_.pairs &&
         a.tt_.pairs == b.tt_.pairs;
}

// ---------------------------------------------------------------------------
// Construction

namespace {

struct EdgeAccumulator {
  Relation relation;
  std::vector<EdgePair> pairs;
  std::unordered_set<std::uint64_t> seen;

  void add(std::uint32_t u, std::uint32_t v, BuildStats& stats) {
    if (relation != Relation::ST) {
      if (u == v) {
        ++stats.dropped_self_loops;
        return;
      }
      if (u > v) std::swap(u, v);
    }
    EdgePair e{u, v};
    if (!seen.insert(edge_key(e)).second) {
      ++stats.merged_duplicates;
      return;
    }
    pairs.push_back(e);
  }

  TypedEdgeList finish() {
    std::sort(pairs.begin(), pairs.end());
    return {relation, std::move(pairs)};
  }
};

}  // namespace

HeteroGraph build_graph(NodeTable sources, NodeTable targets,
                        std::span<const TypedEdgeList> edges, GraphVariant variant) {
  BuildStats stats;
  EdgeAccumulator acc[3] = {{Relation::SS, {}, {}}, {Relation::ST, {}, {}},
                            {Relation::TT, {}, {}}};
  for (const auto& list : edges) {
    auto [ru, rv] = endpoint_roles(list.relation);
    const std::size_t nu = (ru == Role::Source ? sources : targets).size();
    const std::size_t nv = (rv == Role::Source ? sources : targets).size();
    for (const auto& e : list.pairs) {
      if (e.u >= nu || e.v >= nv) {
        fail(ErrorCode::UnknownNodeId, fmt::format("{} edge ({}, {}) references a missing node",
                                                   to_string(list.relation), e.u, e.v));
      }
      acc[static_cast<int>(list.relation)].add(e.u, e.v, stats);
    }
  }
  return HeteroGraph(std::move(sources), std::move(targets), acc[0].finish(), acc[1].finish(),
                     acc[2].finish(), variant, stats);
}

HeteroGraph build_graph(NodeTable sources, NodeTable targets,
                        std::span<const RawEdgeList> edges, MissingIdPolicy policy,
                        GraphVariant variant) {
  BuildStats stats;
  EdgeAccumulator acc[3] = {{Relation::SS, {}, {}}, {Relation::ST, {}, {}},
                            {Relation::TT, {}, {}}};
  for (const auto& list : edges) {
    auto [ru, rv] = endpoint_roles(list.relation);
    const NodeTable& tu = ru == Role::Source ? sources : targets;
    const NodeTable& tv = rv == Role::Source ? sources : targets;
    for (const auto& [a, b] : list.pairs) {
      auto iu = tu.find(a);
      auto iv = tv.find(b);
      if (!iu || !iv) {
        if (policy == MissingIdPolicy::Error) {
          fail(ErrorCode::UnknownNodeId,
               fmt::format("{} edge ({}, {}): '{}' has no feature row", to_string(list.relation),
                           a, b, iu ? b : a));
        }
        ++stats.dropped_missing;
        continue;
      }
      acc[static_cast<int>(list.relation)].add(*iu, *iv, stats);
    }
  }
  return HeteroGraph(std::move(sources), std::move(targets), acc[0].finish(), acc[1].finish(),
                     acc[2].finish(), variant, stats);
}

HeteroGraph derive_variant(const HeteroGraph& g, GraphVariant kind) {
  if (g.variant() != GraphVariant::STExpanded) {
    fail(ErrorCode::ConfigInvalid, "derive_variant expects an st_expanded graph");
  }
  const bool keep_ss = kind == GraphVariant::SExpanded || kind == GraphVariant::STExpanded;
  const bool keep_tt = kind == GraphVariant::TExpanded || kind == GraphVariant::STExpanded;

  std::vector<char> src_used(g.sources().size(), 0);
  std::vector<char> tgt_used(g.targets().size(), 0);
  for (const auto& e : g.st().pairs) src_used[e.u] = tgt_used[e.v] = 1;
  if (keep_ss)
    for (const auto& e : g.ss().pairs) src_used[e.u] = src_used[e.v] = 1;
  if (keep_tt)
    for (const auto& e : g.tt().pairs) tgt_used[e.u] = tgt_used[e.v] = 1;

  const auto compact = [](const std::vector<char>& used, std::vector<std::uint32_t>& kept) {
    std::vector<std::uint32_t> remap(used.size(), UINT32_MAX);
    for (std::uint32_t i = 0; i < used.size(); ++i) {
      if (used[i]) {
        remap[i] = static_cast<std::uint32_t>(kept.size());
        kept.push_back(i);
      }
    }
    return remap;
  };
  std::vector<std::uint32_t> src_kept, tgt_kept;
  const auto src_map = compact(src_used, src_kept);
  const auto tgt_map = compact(tgt_used, tgt_kept);

  const auto remap_list = [](const TypedEdgeList& in, const std::vector<std::uint32_t>& mu,
                             const std::vector<std::uint32_t>& mv, bool keep) {
    TypedEdgeList out{in.relation, {}};
    if (!keep) return out;
    out.pairs.reserve(in.pairs.size());
    for (const auto& e : in.pairs) out.pairs.push_back({mu[e.u], mv[e.v]});
    // Compaction is monotone so canonical order and u < v survive.
    return out;
  };

  return HeteroGraph(g.sources().subset(src_kept), g.targets().subset(tgt_kept),
                     remap_list(g.ss(), src_map, src_map, keep_ss),
                     remap_list(g.st(), src_map, tgt_map, true),
                     remap_list(g.tt(), tgt_map, tgt_map, keep_tt), kind, g.build_stats());
}

// ---------------------------------------------------------------------------
// Degree statistics

namespace {

RoleDegreeStats summarize(std::vector<std::size_t> degrees) {
  RoleDegreeStats s;
  if (degrees.empty()) return s;
  double total = 0.0;
  for (auto d : degrees) total += static_cast<double>(d);
  s.average = total / static_cast<double>(degrees.size());
  std::sort(degrees.begin(), degrees.end());
  const std::size_t m = degrees.size() / 2;
  s.median = degrees.size() % 2 == 1
                 ? static_cast<double>(degrees[m])
                 : 0.5 * static_cast<double>(degrees[m - 1] + degrees[m]);
  return s;
}

}  // namespace

DegreeStats degree_stats(const HeteroGraph& g) {
  std::vector<std::size_t> ds(g.sources().size(), 0), dt(g.targets().size(), 0);
  for (const auto& e : g.ss().pairs) ++ds[e.u], ++ds[e.v];
  for (const auto& e : g.st().pairs) ++ds[e.u], ++dt[e.v];
  for (const auto& e : g.tt().pairs) ++dt[e.u], ++dt[e.v];
  return {summarize(std::move(ds)), summarize(std::move(dt))};
}

DegreeStats degree_stats_from_adjacency(const HeteroGraph& g) {
  std::vector<std::size_t> ds, dt;
  for (std::uint32_t i = 0; i < g.sources().size(); ++i)
    ds.push_back(g.degree({Role::Source, i}));
  for (std::uint32_t i = 0; i < g.targets().size(); ++i)
    dt.push_back(g.degree({Role::Target, i}));
  return {summarize(std::move(ds)), summarize(std::move(dt))};
}

}  // namespace linkbench
