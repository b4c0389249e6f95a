#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "linkbench/graph.hpp"
#include "linkbench/random.hpp"
#include "linkbench/split.hpp"

namespace linkbench {

struct SamplerConfig {
  std::size_t batch_size = 512;
  std::size_t ratio = 1;  // negatives per positive
  std::size_t tries = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Ground-truth ST edges with O(1) membership and the sorted endpoint sets.
class StEdgeSet {
 public:
  StEdgeSet() = default;
  explicit StEdgeSet(std::span<const EdgePair> st);

  bool contains(EdgePair e) const { return keys_.count(edge_key(e)) != 0; }
  std::size_t size() const { return keys_.size(); }
  /// Every source (resp. target) index appearing in some ST edge, ascending.
  const std::vector<std::uint32_t>& sources() const { return sources_; }
  const std::vector<std::uint32_t>& targets() const { return targets_; }

 private:
  std::unordered_set<std::uint64_t> keys_;
  std::vector<std::uint32_t> sources_;
  std::vector<std::uint32_t> targets_;
};

/// Negative sampling for cold splits. Heads come from the batch's nodes of the
/// cold role, tails from every node of the other role that appears in ground
/// truth. Each try draws 2*c*r candidate pairs with replacement, drops ground
/// truth members and duplicates, and returns a uniform subsample of c*r once
/// enough survive. Raises SamplingExhausted after `tries` failures.
std::vector<EdgePair> negative_sample_cold(const StEdgeSet& st, std::span<const EdgePair> positives,
                                           std::size_t ratio, std::size_t tries, Rng& rng,
                                           Role cold_role = Role::Source);

/// Random-split variant: heads and tails both drawn from the batch's own
/// unique sources and targets.
std::vector<EdgePair> negative_sample_random(const StEdgeSet& st,
                                             std::span<const EdgePair> positives,
                                             std::size_t ratio, std::size_t tries, Rng& rng);

/// Message-edge adjacency in the graph's global node numbering.
class MessageIndex {
 public:
  struct Entry {
    std::uint32_t node;  // global index
    Relation relation;
  };

  MessageIndex() = default;
  MessageIndex(const HeteroGraph& g, const MessageEdges& edges);

  std::span<const Entry> neighbors(std::uint32_t global) const {
    return {entries_.data() + offsets_[global], offsets_[global + 1] - offsets_[global]};
  }
  std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::uint32_t num_sources() const { return num_sources_; }

 private:
  std::uint32_t num_sources_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<Entry> entries_;
};

struct LocalEdge {
  std::uint32_t u;
  std::uint32_t v;
  Relation relation;
};

/// Induced message-passing subgraph in a compact local index space. Local
/// nodes are ordered by global index, so all sources precede all targets.
struct Subgraph {
  std::vector<std::uint32_t> nodes;  // global indices, ascending
  std::uint32_t num_sources = 0;         // local sources are [0, num_sources)
  std::uint32_t global_num_sources = 0;  // offset of target 0 in global numbering
  std::vector<LocalEdge> edges;      // each undirected edge once
  std::vector<std::uint32_t> offsets;    // CSR over local nodes, both directions
  std::vector<std::uint32_t> neighbors;

  std::size_t num_nodes() const { return nodes.size(); }
  std::optional<std::uint32_t> local(std::uint32_t global) const;
  std::span<const std::uint32_t> neighbors_of(std::uint32_t local) const {
    return {neighbors.data() + offsets[local], offsets[local + 1] - offsets[local]};
  }
};

/// All nodes within `hops` of any seed over the message edges, plus every
/// message edge among them. ST edges listed in `excluded_st` are invisible.
Subgraph subgraph_khop(const MessageIndex& msg, std::span<const std::uint32_t> seeds,
                       std::size_t hops,
                       const std::unordered_set<std::uint64_t>* excluded_st = nullptr);

/// Builds a Subgraph with the given node set and all message edges among them.
Subgraph induced_subgraph(const MessageIndex& msg, std::vector<std::uint32_t> nodes,
                          const std::unordered_set<std::uint64_t>* excluded_st = nullptr);

struct Batch {
  std::vector<EdgePair> positives;  // (source, target) table indices
  std::vector<EdgePair> negatives;
  Subgraph mp;

  /// Positives then negatives, as local (source, target) indices into mp.
  std::vector<EdgePair> local_edges() const;
  /// 1 for positives, 0 for negatives, aligned with local_edges().
  std::vector<double> labels() const;
};

/// Deterministic minibatch stream over one partition's supervision edges.
/// Batch (epoch, i) depends only on the seed, the split and (epoch, i).
class BatchSampler {
 public:
  BatchSampler(const HeteroGraph& g, const SplitResult& split, SplitLabel partition,
               SamplerConfig cfg, std::size_t hops = 2);

  std::size_t num_batches() const;
  std::size_t num_positives() const { return positives_.size(); }
  const SamplerConfig& config() const { return cfg_; }
  SplitLabel partition() const { return partition_; }
  const MessageIndex& message_index() const { return msg_; }
  const StEdgeSet& ground_truth() const { return st_; }

  /// Positive chunks for an epoch: seeded shuffle, then chunks of batch_size.
  std::vector<std::vector<EdgePair>> chunks(std::size_t epoch) const;
  /// Adds negatives and the induced subgraph to one chunk.
  Batch make_batch(std::vector<EdgePair> positives, std::size_t epoch, std::size_t index) const;
  std::vector<Batch> epoch(std::size_t epoch) const;

 private:
  const HeteroGraph* graph_;
  const SplitResult* split_;
  SplitLabel partition_;
  SamplerConfig cfg_;
  std::size_t hops_;
  std::vector<EdgePair> positives_;
  StEdgeSet st_;
  MessageIndex msg_;
};

std::vector<Batch> sample_batches(const HeteroGraph& g, const SplitResult& split,
                                  SplitLabel partition, const SamplerConfig& cfg);

/// Message edges in the batch subgraph that touch a cold node whose label is
/// not visible when evaluating `partition`. Zero for well-formed batches.
std::size_t audit_batch(const HeteroGraph& g, const SplitResult& split, SplitLabel partition,
                        const Batch& batch);

}  // namespace linkbench
