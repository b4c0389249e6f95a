#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "linkbench/graph.hpp"

namespace linkbench {

struct DatasetManifest {
  std::string name;
  std::filesystem::path source_features_path;
  std::filesystem::path target_features_path;
  std::filesystem::path edges_path;
  std::uint64_t seed = 0;
};

/// Planted-block generator settings. Nodes are assigned to blocks round-robin;
/// ST edges are denser inside a block than across blocks.
struct SynthConfig {
  std::size_t num_sources = 100;
  std::size_t num_targets = 100;
  std::size_t feature_dim_s = 16;
  std::size_t feature_dim_t = 16;
  std::size_t num_blocks = 4;
  double intra_block_st_prob = 0.2;
  double ss_prob = 0.05;
  double tt_prob = 0.05;
  double feature_noise = 0.5;
  std::uint64_t seed = 0;

  void validate() const;  // ConfigInvalid
};

struct SynthDataset {
  NodeTable sources;
  NodeTable targets;
  std::vector<TypedEdgeList> edges;  // ss, st, tt
  std::vector<std::uint32_t> source_blocks;
  std::vector<std::uint32_t> target_blocks;

  HeteroGraph graph() const;
};

/// `id,f0,f1,...` header then one row per node.
NodeTable load_node_features(const std::filesystem::path& path, Role role);

/// `src_id,dst_id,rel` header. Always returns three lists in SS, ST, TT order;
/// ids are resolved later by build_graph.
std::vector<RawEdgeList> load_edges(const std::filesystem::path& path);

HeteroGraph load_dataset(const DatasetManifest& manifest,
                         MissingIdPolicy policy = MissingIdPolicy::Drop);

SynthDataset synth_generate(const SynthConfig& cfg);

void write_node_features(const std::filesystem::path& path, const NodeTable& table);
void write_edges(const std::filesystem::path& path, const HeteroGraph& g);

/// Writes sources.csv, targets.csv, edges.csv and blocks.csv into `dir` and
/// returns a manifest pointing at them.
DatasetManifest write_synth_dataset(const std::filesystem::path& dir, const SynthDataset& ds,
                                    const std::string& name = "synthetic");

}  // namespace linkbench
