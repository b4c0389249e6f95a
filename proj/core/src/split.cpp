#include "linkbench/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "csv.hpp"
#include "linkbench/error.hpp"
#include "linkbench/random.hpp"

namespace linkbench {

std::string_view to_string(SplitMode m) {
  switch (m) {
    case SplitMode::Random: return "random";
    case SplitMode::ColdSource: return "cold_source";
    case SplitMode::ColdTarget: return "cold_target";
  }
  return "?";
}

std::string_view to_string(SplitLabel l) {
  switch (l) {
    case SplitLabel::Train: return "train";
    case SplitLabel::Val: return "val";
    case SplitLabel::Test: return "test";
  }
  return "?";
}

SplitMode parse_split_mode(std::string_view s) {
  if (s == "random") return SplitMode::Random;
  if (s == "cold_source") return SplitMode::ColdSource;
  if (s == "cold_target") return SplitMode::ColdTarget;
  fail(ErrorCode::ConfigInvalid, fmt::format("unknown split mode '{}'", s));
}

SplitLabel parse_split_label(std::string_view s) {
  if (s == "train") return SplitLabel::Train;
  if (s == "val") return SplitLabel::Val;
  if (s == "test") return SplitLabel::Test;
  fail(ErrorCode::ParseError, fmt::format("unknown partition '{}'", s));
}

void SplitSpec::validate() const {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) fail(ErrorCode::ConfigInvalid, "split ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(ErrorCode::ConfigInvalid, "split ratios must sum to 1");
}

std::array<std::size_t, 3> allocate_counts(std::size_t n, const std::array<double, 3>& ratios) {
  // The epsilon absorbs representation error such as 0.1 * 30 = 2.9999999999999996.
  const auto take = [n](double r) {
    return static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9));
  };
  const std::size_t val = take(ratios[1]);
  const std::size_t test = take(ratios[2]);
  return {n - val - test, val, test};
}

const std::vector<EdgePair>& MessageEdges::of(Relation r) const {
  return r == Relation::SS ? ss : r == Relation::ST ? st : tt;
}
std::vector<EdgePair>& MessageEdges::of(Relation r) {
  return r == Relation::SS ? ss : r == Relation::ST ? st : tt;
}
const std::vector<SplitLabel>& EdgeLabels::of(Relation r) const {
  return r == Relation::SS ? ss : r == Relation::ST ? st : tt;
}
std::vector<SplitLabel>& EdgeLabels::of(Relation r) {
  return r == Relation::SS ? ss : r == Relation::ST ? st : tt;
}

std::optional<Role> SplitResult::cold_role() const {
  switch (spec.mode) {
    case SplitMode::ColdSource: return Role::Source;
    case SplitMode::ColdTarget: return Role::Target;
    case SplitMode::Random: return std::nullopt;
  }
  return std::nullopt;
}

SplitLabel SplitResult::label_of(NodeRef n) const {
  const auto cold = cold_role();
  if (!cold || n.role != *cold || n.index >= node_labels.size()) return SplitLabel::Train;
  return node_labels[n.index];
}

namespace {

constexpr std::array<Relation, 3> kRelations = {Relation::SS, Relation::ST, Relation::TT};

/// Seeded shuffle of [0, n) followed by floor allocation: first block Train,
/// then Val, then Test.
std::vector<SplitLabel> shuffled_labels(std::size_t n, const SplitSpec& spec,
                                        std::uint64_t stream) {
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(derive_seed(spec.seed, stream));
  shuffle(order, rng);
  const auto counts = allocate_counts(n, spec.ratios);
  std::vector<SplitLabel> labels(n, SplitLabel::Train);
  for (std::size_t i = counts[0]; i < counts[0] + counts[1]; ++i) labels[order[i]] = SplitLabel::Val;
  for (std::size_t i = counts[0] + counts[1]; i < n; ++i) labels[order[i]] = SplitLabel::Test;
  return labels;
}

SplitResult split_cold(const HeteroGraph& g, const SplitSpec& spec, Role cold) {
  const std::size_t n = g.table(cold).size();
  if (n == 0 || g.st().pairs.empty()) fail(ErrorCode::EmptyGraph, "graph has no nodes or ST edges");
  auto node_labels = shuffled_labels(n, spec, cold == Role::Source ? 11 : 12);
  const auto counts = allocate_counts(n, spec.ratios);
  for (std::size_t p = 0; p < 3; ++p) {
    if (counts[p] == 0) {
      fail(ErrorCode::DegenerateSplit,
           fmt::format("{} partition receives zero {} nodes", to_string(kAllPartitions[p]),
                       to_string(cold)));
    }
  }

  EdgeLabels labels;
  const Relation same = cold == Role::Source ? Relation::SS : Relation::TT;
  for (Relation rel : kRelations) {
    const auto& pairs = g.edges(rel).pairs;
    auto& out = labels.of(rel);
    out.resize(pairs.size(), SplitLabel::Train);
    if (rel == Relation::ST) {
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        out[i] = node_labels[cold == Role::Source ? pairs[i].u : pairs[i].v];
      }
    } else if (rel == same) {
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        out[i] = std::max(node_labels[pairs[i].u], node_labels[pairs[i].v]);
      }
    }
  }
  return assemble_split(g, spec, std::move(labels), std::move(node_labels));
}

}  // namespace

SplitResult split_random(const HeteroGraph& g, const SplitSpec& spec) {
  spec.validate();
  if (spec.mode != SplitMode::Random) fail(ErrorCode::ConfigInvalid, "split_random needs Random mode");
  if (g.st().pairs.empty()) fail(ErrorCode::EmptyGraph, "graph has no ST edges");
  EdgeLabels labels;
  labels.st = shuffled_labels(g.st().pairs.size(), spec, 10);
  labels.ss.assign(g.ss().pairs.size(), SplitLabel::Train);
  labels.tt.assign(g.tt().pairs.size(), SplitLabel::Train);
  return assemble_split(g, spec, std::move(labels), {});
}

SplitResult split_cold_source(const HeteroGraph& g, const SplitSpec& spec) {
  spec.validate();
  if (spec.mode != SplitMode::ColdSource)
    fail(ErrorCode::ConfigInvalid, "split_cold_source needs ColdSource mode");
  return split_cold(g, spec, Role::Source);
}

SplitResult split_cold_target(const HeteroGraph& g, const SplitSpec& spec) {
  spec.validate();
  if (spec.mode != SplitMode::ColdTarget)
    fail(ErrorCode::ConfigInvalid, "split_cold_target needs ColdTarget mode");
  return split_cold(g, spec, Role::Target);
}

SplitResult split_graph(const HeteroGraph& g, const SplitSpec& spec) {
  switch (spec.mode) {
    case SplitMode::Random: return split_random(g, spec);
    case SplitMode::ColdSource: return split_cold_source(g, spec);
    case SplitMode::ColdTarget: return split_cold_target(g, spec);
  }
  fail(ErrorCode::ConfigInvalid, "unknown split mode");
}

SplitResult assemble_split(const HeteroGraph& g, const SplitSpec& spec, EdgeLabels edge_labels,
                           std::vector<SplitLabel> node_labels) {
  for (Relation rel : kRelations) {
    if (edge_labels.of(rel).size() != g.edges(rel).pairs.size()) {
      fail(ErrorCode::LengthMismatch,
           fmt::format("{} labels do not cover the graph's edges", to_string(rel)));
    }
  }
  SplitResult r;
  r.spec = spec;
  const std::size_t train = index_of(SplitLabel::Train);

  for (Relation rel : kRelations) {
    const auto& pairs = g.edges(rel).pairs;
    const auto& labels = edge_labels.of(rel);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto p = index_of(labels[i]);
      if (rel == Relation::ST) r.supervision[p].push_back(pairs[i]);
      if (p == train) r.message[train].of(rel).push_back(pairs[i]);
    }
  }
  // Val/Test see everything visible at training plus their own cold-relation
  // edges (SS for cold-source, TT for cold-target). An edge joining a Val and
  // a Test cold node is visible to neither. Supervision ST edges of Val/Test
  // are never message edges.
  r.node_labels = node_labels;
  for (SplitLabel p : {SplitLabel::Val, SplitLabel::Test}) {
    const bool sees_val = spec.test_sees_val_edges && p == SplitLabel::Test;
    const auto visible = [&](SplitLabel l) {
      return l == SplitLabel::Train || l == p || (sees_val && l == SplitLabel::Val);
    };
    MessageEdges m = r.message[train];
    for (Relation rel : {Relation::SS, Relation::TT}) {
      const auto [ru, rv] = endpoint_roles(rel);
      const auto& pairs = g.edges(rel).pairs;
      const auto& labels = edge_labels.of(rel);
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (labels[i] == SplitLabel::Train || !visible(labels[i])) continue;
        if (visible(r.label_of({ru, pairs[i].u})) && visible(r.label_of({rv, pairs[i].v}))) {
          m.of(rel).push_back(pairs[i]);
        }
      }
      std::sort(m.of(rel).begin(), m.of(rel).end());
    }
    r.message[index_of(p)] = std::move(m);
  }

  r.source_seen.assign(g.sources().size(), false);
  r.target_seen.assign(g.targets().size(), false);
  const auto mark = [&](Relation rel, EdgePair e) {
    auto [ru, rv] = endpoint_roles(rel);
    (ru == Role::Source ? r.source_seen : r.target_seen)[e.u] = true;
    (rv == Role::Source ? r.source_seen : r.target_seen)[e.v] = true;
  };
  for (Relation rel : kRelations)
    for (const auto& e : r.message[train].of(rel)) mark(rel, e);
  for (const auto& e : r.supervision[train]) mark(Relation::ST, e);

  r.edge_labels = std::move(edge_labels);
  return r;
}

// ---------------------------------------------------------------------------
// Leakage audit

LeakageReport assert_no_leakage(const HeteroGraph& g, const SplitResult& r) {
  LeakageReport rep;

  std::unordered_map<std::uint64_t, std::size_t> membership;
  membership.reserve(g.st().pairs.size());
  for (const auto& e : g.st().pairs) membership.emplace(edge_key(e), 0);
  for (const auto& part : r.supervision) {
    for (const auto& e : part) {
      auto it = membership.find(edge_key(e));
      if (it == membership.end()) {
        ++rep.supervision_missing;
      } else {
        ++it->second;
      }
    }
  }
  for (const auto& [key, count] : membership) {
    if (count == 0) ++rep.supervision_missing;
    if (count > 1) rep.supervision_overlap += count - 1;
  }

  if (const auto cold = r.cold_role()) {
    const auto touches = [&](Relation rel, EdgePair e, auto&& bad_label) {
      auto [ru, rv] = endpoint_roles(rel);
      return (ru == *cold && bad_label(r.label_of({ru, e.u}))) ||
             (rv == *cold && bad_label(r.label_of({rv, e.v})));
    };
    const auto not_train = [](SplitLabel l) { return l != SplitLabel::Train; };
    const auto& train_msg = r.message_of(SplitLabel::Train);
    for (Relation rel : kRelations)
      for (const auto& e : train_msg.of(rel))
        if (touches(rel, e, not_train)) ++rep.cold_node_in_train;
    for (const auto& e : r.supervision_of(SplitLabel::Train))
      if (touches(Relation::ST, e, not_train)) ++rep.cold_node_in_train;

    const auto is_test = [](SplitLabel l) { return l == SplitLabel::Test; };
    const auto is_val = [](SplitLabel l) { return l == SplitLabel::Val; };
    for (Relation rel : kRelations) {
      for (const auto& e : r.message_of(SplitLabel::Val).of(rel))
        if (touches(rel, e, is_test)) ++rep.cold_node_cross_partition;
      if (!r.spec.test_sees_val_edges) {
        for (const auto& e : r.message_of(SplitLabel::Test).of(rel))
          if (touches(rel, e, is_val)) ++rep.cold_node_cross_partition;
      }
    }
  } else {
    std::unordered_set<std::uint64_t> eval_edges;
    for (SplitLabel p : {SplitLabel::Val, SplitLabel::Test})
      for (const auto& e : r.supervision_of(p)) eval_edges.insert(edge_key(e));
    for (const auto& m : r.message)
      for (const auto& e : m.st)
        if (eval_edges.count(edge_key(e))) ++rep.eval_edge_in_message;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Manifest

void write_split_manifest(const std::filesystem::path& path, const HeteroGraph& g,
                          const SplitResult& r) {
  auto out = detail::open_for_write(path);
  out << "edge_or_node,identifier,partition\n";
  out << "meta,mode," << to_string(r.spec.mode) << '\n';
  out << "meta,seed," << r.spec.seed << '\n';
  out << fmt::format("meta,ratios,{};{};{}\n", r.spec.ratios[0], r.spec.ratios[1],
                     r.spec.ratios[2]);
  out << "meta,test_sees_val_edges," << (r.spec.test_sees_val_edges ? 1 : 0) << '\n';
  if (const auto cold = r.cold_role()) {
    const char prefix = *cold == Role::Source ? 's' : 't';
    const auto& table = g.table(*cold);
    for (std::uint32_t i = 0; i < r.node_labels.size(); ++i) {
      out << "node," << prefix << ':' << table.id(i) << ',' << to_string(r.node_labels[i]) << '\n';
    }
  }
  for (Relation rel : kRelations) {
    auto [ru, rv] = endpoint_roles(rel);
    const auto& pairs = g.edges(rel).pairs;
    const auto& labels = r.edge_labels.of(rel);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      out << "edge," << to_string(rel) << ':' << g.table(ru).id(pairs[i].u) << '|'
          << g.table(rv).id(pairs[i].v) << ',' << to_string(labels[i]) << '\n';
    }
  }
}

SplitResult read_split_manifest(const std::filesystem::path& path, const HeteroGraph& g) {
  const auto lines = detail::read_lines(path);
  if (lines.empty() || lines[0] != "edge_or_node,identifier,partition") {
    fail(ErrorCode::ParseError, fmt::format("{}:1: bad split manifest header", path.string()));
  }
  const auto where = [&](std::size_t ln) { return fmt::format("{}:{}", path.string(), ln + 1); };

  SplitSpec spec;
  std::vector<SplitLabel> node_labels;
  EdgeLabels labels;
  std::array<std::unordered_map<std::uint64_t, std::size_t>, 3> edge_pos;
  std::array<std::vector<char>, 3> assigned;
  for (Relation rel : kRelations) {
    const auto& pairs = g.edges(rel).pairs;
    auto& pos = edge_pos[static_cast<int>(rel)];
    for (std::size_t i = 0; i < pairs.size(); ++i) pos.emplace(edge_key(pairs[i]), i);
    labels.of(rel).assign(pairs.size(), SplitLabel::Train);
    assigned[static_cast<int>(rel)].assign(pairs.size(), 0);
  }
  std::vector<char> node_assigned;

  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const auto cells = detail::split_row(lines[ln]);
    if (cells.size() != 3) fail(ErrorCode::ParseError, where(ln) + ": expected 3 columns");
    const auto kind = cells[0];
    const auto ident = cells[1];
    if (kind == "meta") {
      if (ident == "mode") {
        spec.mode = parse_split_mode(cells[2]);
      } else if (ident == "seed") {
        if (!detail::parse_u64(cells[2], spec.seed))
          fail(ErrorCode::ParseError, where(ln) + ": bad seed");
      } else if (ident == "ratios") {
        const auto v = cells[2];
        std::size_t a = v.find(';'), b = v.find(';', a == v.npos ? a : a + 1);
        if (a == v.npos || b == v.npos ||
            !detail::parse_double(v.substr(0, a), spec.ratios[0]) ||
            !detail::parse_double(v.substr(a + 1, b - a - 1), spec.ratios[1]) ||
            !detail::parse_double(v.substr(b + 1), spec.ratios[2])) {
          fail(ErrorCode::ParseError, where(ln) + ": bad ratios");
        }
      } else if (ident == "test_sees_val_edges") {
        spec.test_sees_val_edges = cells[2] == "1";
      }
      continue;
    }
    const SplitLabel label = parse_split_label(cells[2]);
    const auto colon = ident.find(':');
    if (colon == std::string_view::npos)
      fail(ErrorCode::ParseError, where(ln) + ": identifier lacks a ':' prefix");
    const auto prefix = ident.substr(0, colon);
    const auto rest = ident.substr(colon + 1);
    if (kind == "node") {
      const Role role = prefix == "s" ? Role::Source : Role::Target;
      if (prefix != "s" && prefix != "t") fail(ErrorCode::ParseError, where(ln) + ": bad node prefix");
      const auto idx = g.table(role).find(rest);
      if (!idx) fail(ErrorCode::UnknownNodeId, where(ln) + ": " + std::string(rest));
      if (node_labels.empty()) {
        node_labels.assign(g.table(role).size(), SplitLabel::Train);
        node_assigned.assign(g.table(role).size(), 0);
      }
      node_labels[*idx] = label;
      node_assigned[*idx] = 1;
    } else if (kind == "edge") {
      const Relation rel = parse_relation(prefix);
      const auto bar = rest.find('|');
      if (bar == std::string_view::npos) fail(ErrorCode::ParseError, where(ln) + ": edge lacks '|'");
      auto [ru, rv] = endpoint_roles(rel);
      auto iu = g.table(ru).find(rest.substr(0, bar));
      auto iv = g.table(rv).find(rest.substr(bar + 1));
      if (!iu || !iv) fail(ErrorCode::UnknownNodeId, where(ln) + ": " + std::string(rest));
      EdgePair e{*iu, *iv};
      if (rel != Relation::ST && e.u > e.v) std::swap(e.u, e.v);
      const auto& pos = edge_pos[static_cast<int>(rel)];
      auto it = pos.find(edge_key(e));
      if (it == pos.end()) fail(ErrorCode::UnknownNodeId, where(ln) + ": edge not in graph");
      labels.of(rel)[it->second] = label;
      assigned[static_cast<int>(rel)][it->second] = 1;
    } else {
      fail(ErrorCode::ParseError, where(ln) + ": first column must be meta/node/edge");
    }
  }
  for (Relation rel : kRelations) {
    const auto& a = assigned[static_cast<int>(rel)];
    if (std::find(a.begin(), a.end(), 0) != a.end()) {
      fail(ErrorCode::ParseError,
           fmt::format("{}: some {} edges have no partition", path.string(), to_string(rel)));
    }
  }
  if (spec.mode != SplitMode::Random &&
      (node_assigned.empty() || std::find(node_assigned.begin(), node_assigned.end(), 0) !=
                                    node_assigned.end())) {
    fail(ErrorCode::ParseError, fmt::format("{}: cold split lacks node labels", path.string()));
  }
  spec.validate();
  return assemble_split(g, spec, std::move(labels), std::move(node_labels));
}

}  // namespace linkbench
