#include "linkbench/sampling.hpp"

#include <algorithm>
#include <unordered_set>

#include <fmt/format.h>

#include "linkbench/error.hpp"

namespace linkbench {

void SamplerConfig::validate() const {
  if (batch_size == 0) fail(ErrorCode::ConfigInvalid, "batch_size must be positive");
  if (ratio == 0) fail(ErrorCode::ConfigInvalid, "negative ratio must be >= 1");
  if (tries == 0) fail(ErrorCode::ConfigInvalid, "sampling tries must be >= 1");
}

StEdgeSet::StEdgeSet(std::span<const EdgePair> st) {
  keys_.reserve(st.size() * 2);
  for (const auto& e : st) {
    keys_.insert(edge_key(e));
    sources_.push_back(e.u);
    targets_.push_back(e.v);
  }
  const auto uniq = [](std::vector<std::uint32_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(sources_);
  uniq(targets_);
}

namespace {

std::vector<std::uint32_t> unique_endpoints(std::span<const EdgePair> edges, bool heads) {
  std::vector<std::uint32_t> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.push_back(heads ? e.u : e.v);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<EdgePair> oversample_and_reject(const StEdgeSet& st,
                                            const std::vector<std::uint32_t>& sources,
                                            const std::vector<std::uint32_t>& targets,
                                            std::size_t count, std::size_t ratio,
                                            std::size_t tries, Rng& rng) {
  const std::size_t need = count * ratio;
  const std::size_t draws = 2 * need;
  if (need == 0) return {};
  if (!sources.empty() && !targets.empty()) {
    std::vector<EdgePair> pool;
    std::unordered_set<std::uint64_t> in_pool;
    for (std::size_t attempt = 0; attempt < tries; ++attempt) {
      pool.clear();
      in_pool.clear();
      for (std::size_t d = 0; d < draws; ++d) {
        const EdgePair e{sources[uniform_index(rng, sources.size())],
                         targets[uniform_index(rng, targets.size())]};
        if (st.contains(e) || !in_pool.insert(edge_key(e)).second) continue;
        pool.push_back(e);
      }
      if (pool.size() >= need) {
        for (std::size_t j = 0; j < need; ++j) {
          std::swap(pool[j], pool[j + uniform_index(rng, pool.size() - j)]);
        }
        pool.resize(need);
        return pool;
      }
    }
  }
  fail(ErrorCode::SamplingExhausted,
       fmt::format("no {} negatives after {} tries ({} x {} candidate pairs)", need, tries,
                   sources.size(), targets.size()));
}

}  // namespace

std::vector<EdgePair> negative_sample_cold(const StEdgeSet& st, std::span<const EdgePair> positives,
                                           std::size_t ratio, std::size_t tries, Rng& rng,
                                           Role cold_role) {
  if (cold_role == Role::Source) {
    return oversample_and_reject(st, unique_endpoints(positives, true), st.targets(),
                                 positives.size(), ratio, tries, rng);
  }
  return oversample_and_reject(st, st.sources(), unique_endpoints(positives, false),
                               positives.size(), ratio, tries, rng);
}

std::vector<EdgePair> negative_sample_random(const StEdgeSet& st,
                                             std::span<const EdgePair> positives,
                                             std::size_t ratio, std::size_t tries, Rng& rng) {
  return oversample_and_reject(st, unique_endpoints(positives, true),
                               unique_endpoints(positives, false), positives.size(), ratio, tries,
                               rng);
}

// ---------------------------------------------------------------------------
// Subgraphs

MessageIndex::MessageIndex(const HeteroGraph& g, const MessageEdges& edges)
    : num_sources_(static_cast<std::uint32_t>(g.sources().size())) {
  const std::size_t n = g.num_nodes();
  std::vector<std::size_t> deg(n, 0);
  const auto for_each = [&](auto&& fn) {
    for (Relation rel : {Relation::SS, Relation::ST, Relation::TT}) {
      auto [ru, rv] = endpoint_roles(rel);
      for (const auto& e : edges.of(rel)) fn(rel, g.global({ru, e.u}), g.global({rv, e.v}));
    }
  };
  for_each([&](Relation, std::uint32_t a, std::uint32_t b) { ++deg[a], ++deg[b]; });
  offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + deg[i];
  entries_.resize(offsets_[n]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for_each([&](Relation rel, std::uint32_t a, std::uint32_t b) {
    entries_[fill[a]++] = {b, rel};
    entries_[fill[b]++] = {a, rel};
  });
}

std::optional<std::uint32_t> Subgraph::local(std::uint32_t global) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), global);
  if (it == nodes.end() || *it != global) return std::nullopt;
  return static_cast<std::uint32_t>(it - nodes.begin());
}

namespace {

bool excluded(const MessageIndex& msg, std::uint32_t a, const MessageIndex::Entry& nb,
              const std::unordered_set<std::uint64_t>* ex) {
  if (!ex || nb.relation != Relation::ST) return false;
  const std::uint32_t ns = msg.num_sources();
  const EdgePair e = a < ns ? EdgePair{a, nb.node - ns} : EdgePair{nb.node, a - ns};
  return ex->count(edge_key(e)) != 0;
}

}  // namespace

Subgraph induced_subgraph(const MessageIndex& msg, std::vector<std::uint32_t> nodes,
                          const std::unordered_set<std::uint64_t>* excluded_st) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  Subgraph sg;
  sg.nodes = std::move(nodes);
  sg.global_num_sources = msg.num_sources();
  sg.num_sources = static_cast<std::uint32_t>(
      std::lower_bound(sg.nodes.begin(), sg.nodes.end(), msg.num_sources()) - sg.nodes.begin());

  std::vector<std::vector<std::uint32_t>> adj(sg.nodes.size());
  for (std::uint32_t lu = 0; lu < sg.nodes.size(); ++lu) {
    const std::uint32_t gu = sg.nodes[lu];
    for (const auto& nb : msg.neighbors(gu)) {
      if (nb.node <= gu) continue;
      const auto lv = sg.local(nb.node);
      if (!lv || excluded(msg, gu, nb, excluded_st)) continue;
      sg.edges.push_back({lu, *lv, nb.relation});
      adj[lu].push_back(*lv);
      adj[*lv].push_back(lu);
    }
  }
  sg.offsets.assign(sg.nodes.size() + 1, 0);
  for (std::size_t i = 0; i < adj.size(); ++i) {
    std::sort(adj[i].begin(), adj[i].end());
    sg.offsets[i + 1] = sg.offsets[i] + static_cast<std::uint32_t>(adj[i].size());
    sg.neighbors.insert(sg.neighbors.end(), adj[i].begin(), adj[i].end());
  }
  return sg;
}

Subgraph subgraph_khop(const MessageIndex& msg, std::span<const std::uint32_t> seeds,
                       std::size_t hops, const std::unordered_set<std::uint64_t>* excluded_st) {
  std::vector<char> visited(msg.num_nodes(), 0);
  std::vector<std::uint32_t> frontier, reached;
  for (auto s : seeds) {
    if (s >= msg.num_nodes()) {
      fail(ErrorCode::IndexOutOfRange, fmt::format("seed node {} out of range", s));
    }
    if (!visited[s]) {
      visited[s] = 1;
      frontier.push_back(s);
      reached.push_back(s);
    }
  }
  for (std::size_t h = 0; h < hops && !frontier.empty(); ++h) {
    std::vector<std::uint32_t> next;
    for (auto u : frontier) {
      for (const auto& nb : msg.neighbors(u)) {
        if (visited[nb.node] || excluded(msg, u, nb, excluded_st)) continue;
        visited[nb.node] = 1;
        next.push_back(nb.node);
        reached.push_back(nb.node);
      }
    }
    frontier = std::move(next);
  }
  return induced_subgraph(msg, std::move(reached), excluded_st);
}

// ---------------------------------------------------------------------------
// Batches

std::vector<EdgePair> Batch::local_edges() const {
  std::vector<EdgePair> out;
  out.reserve(positives.size() + negatives.size());
  for (const auto* list : {&positives, &negatives}) {
    for (const auto& e : *list) {
      const auto u = mp.local(e.u);
      const auto v = mp.local(mp.global_num_sources + e.v);
      if (!u || !v) fail(ErrorCode::MissingEmbedding, "supervision endpoint missing from subgraph");
      out.push_back({*u, *v});
    }
  }
  return out;
}

std::vector<double> Batch::labels() const {
  std::vector<double> y(positives.size() + negatives.size(), 0.0);
  std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(positives.size()), 1.0);
  return y;
}

BatchSampler::BatchSampler(const HeteroGraph& g, const SplitResult& split, SplitLabel partition,
                           SamplerConfig cfg, std::size_t hops)
    : graph_(&g),
      split_(&split),
      partition_(partition),
      cfg_(cfg),
      hops_(hops),
      positives_(split.supervision_of(partition)),
      st_(g.st().pairs),
      msg_(g, split.message_of(partition)) {
  cfg_.validate();
  if (positives_.empty()) {
    fail(ErrorCode::EmptyPartition,
         fmt::format("{} partition has no supervision edges", to_string(partition)));
  }
}

std::size_t BatchSampler::num_batches() const {
  return (positives_.size() + cfg_.batch_size - 1) / cfg_.batch_size;
}

std::vector<std::vector<EdgePair>> BatchSampler::chunks(std::size_t epoch) const {
  std::vector<EdgePair> order = positives_;
  Rng rng(derive_seed(cfg_.seed, 0xBA7C, epoch));
  shuffle(order, rng);
  std::vector<std::vector<EdgePair>> out;
  for (std::size_t i = 0; i < order.size(); i += cfg_.batch_size) {
    const auto end = std::min(order.size(), i + cfg_.batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

Batch BatchSampler::make_batch(std::vector<EdgePair> positives, std::size_t epoch,
                               std::size_t index) const {
  Batch b;
  Rng rng(derive_seed(cfg_.seed, 0x7E6A, epoch, index));
  switch (split_->spec.mode) {
    case SplitMode::Random:
      b.negatives = negative_sample_random(st_, positives, cfg_.ratio, cfg_.tries, rng);
      break;
    case SplitMode::ColdSource:
      b.negatives =
          negative_sample_cold(st_, positives, cfg_.ratio, cfg_.tries, rng, Role::Source);
      break;
    case SplitMode::ColdTarget:
      b.negatives =
          negative_sample_cold(st_, positives, cfg_.ratio, cfg_.tries, rng, Role::Target);
      break;
  }
  // The batch's own positives never serve as message edges for that batch.
  std::unordered_set<std::uint64_t> own;
  own.reserve(positives.size() * 2);
  for (const auto& e : positives) own.insert(edge_key(e));

  std::vector<std::uint32_t> seeds;
  seeds.reserve(2 * (positives.size() + b.negatives.size()));
  for (const auto* list : {&positives, &b.negatives}) {
    for (const auto& e : *list) {
      seeds.push_back(graph_->global({Role::Source, e.u}));
      seeds.push_back(graph_->global({Role::Target, e.v}));
    }
  }
  b.mp = subgraph_khop(msg_, seeds, hops_, &own);
  b.positives = std::move(positives);
  return b;
}

std::vector<Batch> BatchSampler::epoch(std::size_t epoch) const {
  auto parts = chunks(epoch);
  std::vector<Batch> out;
  out.reserve(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) out.push_back(make_batch(std::move(parts[i]), epoch, i));
  return out;
}

std::vector<Batch> sample_batches(const HeteroGraph& g, const SplitResult& split,
                                  SplitLabel partition, const SamplerConfig& cfg) {
  return BatchSampler(g, split, partition, cfg).epoch(0);
}

std::size_t audit_batch(const HeteroGraph& g, const SplitResult& split, SplitLabel partition,
                        const Batch& batch) {
  const auto cold = split.cold_role();
  if (!cold) return 0;
  const auto visible = [&](SplitLabel l) {
    if (l == SplitLabel::Train || l == partition) return true;
    return partition == SplitLabel::Test && l == SplitLabel::Val && split.spec.test_sees_val_edges;
  };
  std::size_t violations = 0;
  for (const auto& e : batch.mp.edges) {
    const NodeRef a = g.node_at(batch.mp.nodes[e.u]);
    const NodeRef b = g.node_at(batch.mp.nodes[e.v]);
    if ((a.role == *cold && !visible(split.label_of(a))) ||
        (b.role == *cold && !visible(split.label_of(b)))) {
      ++violations;
    }
  }
  return violations;
}

}  // namespace linkbench
