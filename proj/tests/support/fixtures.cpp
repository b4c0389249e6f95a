#include "fixtures.hpp"

#include <fstream>
#include <sstream>

namespace fixture {

using namespace linkbench;

NodeTable table(Role role, std::size_t n, std::size_t dim, const std::string& prefix) {
  std::vector<std::string> ids;
  Matrix f(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back(prefix + std::to_string(i));
    for (std::size_t c = 0; c < dim; ++c)
      f(i, c) = 0.1 * static_cast<double>((i * 7 + c * 3) % 11) - 0.5;
  }
  return NodeTable::create(role, std::move(ids), std::move(f));
}

HeteroGraph graph(std::size_t ns, std::size_t nt, std::vector<EdgePair> ss,
                  std::vector<EdgePair> st, std::vector<EdgePair> tt, std::size_t dim) {
  const std::vector<TypedEdgeList> lists{{Relation::SS, std::move(ss)},
                                         {Relation::ST, std::move(st)},
                                         {Relation::TT, std::move(tt)}};
  return build_graph(table(Role::Source, ns, dim, "s"), table(Role::Target, nt, dim, "t"),
                     std::span<const TypedEdgeList>(lists));
}

SynthConfig small_synth(std::uint64_t seed, std::size_t ns, std::size_t nt) {
  SynthConfig c;
  c.num_sources = ns;
  c.num_targets = nt;
  c.feature_dim_s = 8;
  c.feature_dim_t = 8;
  c.num_blocks = 8;
  c.intra_block_st_prob = 0.25;
  c.ss_prob = 0.1;
  c.tt_prob = 0.1;
  c.feature_noise = 0.5;
  c.seed = seed;
  return c;
}

RunConfig small_run(std::uint64_t seed, ModelKind kind, SplitMode mode) {
  RunConfig c;
  c.synth = small_synth(seed);
  c.split.mode = mode;
  c.split.seed = seed;
  c.model.kind = kind;
  c.model.hidden_dim = 8;
  c.allow_any_dim = true;
  c.lr = 5e-3;
  c.batch_size = 64;
  c.epochs = 5;
  c.k = 0;
  c.seed = seed;
  return c;
}

SmallBatch small_batch(std::uint64_t seed, SplitMode mode) {
  SynthConfig c;
  c.num_sources = 8;
  c.num_targets = 12;
  c.feature_dim_s = 5;
  c.feature_dim_t = 4;
  c.num_blocks = 2;
  c.intra_block_st_prob = 0.5;
  c.ss_prob = 0.4;
  c.tt_prob = 0.3;
  c.feature_noise = 0.7;
  c.seed = seed;
  SmallBatch out;
  out.graph = synth_generate(c).graph();
  SplitSpec spec;
  spec.mode = mode;
  spec.seed = seed;
  spec.ratios = {0.5, 0.25, 0.25};
  out.split = split_graph(out.graph, spec);
  SamplerConfig sc;
  sc.batch_size = 6;
  sc.seed = seed;
  BatchSampler sampler(out.graph, out.split, SplitLabel::Train, sc);
  // Take the first chunk whose negatives can be drawn from its own endpoints.
  const auto chunks = sampler.chunks(0);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    try {
      out.batch = sampler.make_batch(chunks[i], 0, i);
      return out;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SamplingExhausted) throw;
    }
  }
  fail(ErrorCode::SamplingExhausted, "no usable batch in the small fixture");
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("linkbench_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fixture
