#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "linkbench/error.hpp"
#include "linkbench/graph.hpp"
#include "linkbench/harness.hpp"
#include "linkbench/ingest.hpp"
#include "linkbench/sampling.hpp"
#include "linkbench/split.hpp"

namespace fixture {

/// Node table with ids prefix0..prefix(n-1) and a deterministic feature pattern.
linkbench::NodeTable table(linkbench::Role role, std::size_t n, std::size_t dim,
                           const std::string& prefix);

/// Index-based graph from explicit pair lists.
linkbench::HeteroGraph graph(std::size_t ns, std::size_t nt,
                             std::vector<linkbench::EdgePair> ss,
                             std::vector<linkbench::EdgePair> st,
                             std::vector<linkbench::EdgePair> tt, std::size_t dim = 3);

/// Small planted-block config for fast tests.
linkbench::SynthConfig small_synth(std::uint64_t seed, std::size_t ns = 60, std::size_t nt = 80);

/// Run config around small_synth with a tiny encoder.
linkbench::RunConfig small_run(std::uint64_t seed, linkbench::ModelKind kind,
                               linkbench::SplitMode mode = linkbench::SplitMode::Random);

/// A graph, its split and one training batch whose subgraph has about 20 nodes.
struct SmallBatch {
  linkbench::HeteroGraph graph;
  linkbench::SplitResult split;
  linkbench::Batch batch;
};
SmallBatch small_batch(std::uint64_t seed,
                       linkbench::SplitMode mode = linkbench::SplitMode::Random);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

std::string read_file(const std::filesystem::path& p);

/// Code of the linkbench::Error thrown by `f`, or nullopt if it returned.
inline std::optional<linkbench::ErrorCode> error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const linkbench::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace fixture
