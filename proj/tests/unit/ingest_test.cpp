#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "fixtures.hpp"
#include "linkbench/ingest.hpp"

using namespace linkbench;
using fixture::error_code;

namespace {

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST(Ingest, LoadsFeatureTable) {
  const auto dir = fixture::temp_dir("ingest_features");
  write(dir / "s.csv", "id,f0,f1,f2,f3\na,1,2,3,4\nb,0,0,0,0\nc,-1,0.5,1e-3,2\n");
  const auto t = load_node_features(dir / "s.csv", Role::Source);
  EXPECT_EQ(t.size(), 3u);
  EXPECT_EQ(t.dim(), 4u);
  EXPECT_DOUBLE_EQ(t.features()(2, 2), 1e-3);
  EXPECT_EQ(t.find("b"), 1u);
}

TEST(Ingest, RaggedRowNamesLine) {
  const auto dir = fixture::temp_dir("ingest_ragged");
  write(dir / "s.csv", "id,f0,f1,f2,f3\na,1,2,3,4\nb,1,2,3\n");
  try {
    load_node_features(dir / "s.csv", Role::Source);
    FAIL() << "expected ParseError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(Ingest, BadNumberIsParseError) {
  const auto dir = fixture::temp_dir("ingest_badnum");
  write(dir / "s.csv", "id,f0\na,x1\n");
  EXPECT_EQ(error_code([&] { load_node_features(dir / "s.csv", Role::Source); }),
            ErrorCode::ParseError);
}

TEST(Ingest, EdgesSplitByRelation) {
  const auto dir = fixture::temp_dir("ingest_edges");
  write(dir / "e.csv", "src_id,dst_id,rel\ns1,t1,st\ns1,s2,ss\n");
  const auto e = load_edges(dir / "e.csv");
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e[0].relation, Relation::SS);
  EXPECT_EQ(e[0].pairs.size(), 1u);
  EXPECT_EQ(e[1].pairs.size(), 1u);
  EXPECT_TRUE(e[2].pairs.empty());
}

TEST(Ingest, UnknownRelationTag) {
  const auto dir = fixture::temp_dir("ingest_gg");
  write(dir / "e.csv", "src_id,dst_id,rel\nt1,t2,gg\n");
  EXPECT_EQ(error_code([&] { load_edges(dir / "e.csv"); }), ErrorCode::UnknownRelation);
}

TEST(Ingest, MissingFileIsIoError) {
  EXPECT_EQ(error_code([] { load_edges("/nonexistent/edges.csv"); }), ErrorCode::IoError);
}

TEST(Ingest, SynthRoundTripThroughFiles) {
  const auto ds = synth_generate(fixture::small_synth(9));
  const auto dir = fixture::temp_dir("ingest_roundtrip");
  const auto m = write_synth_dataset(dir, ds);
  const auto g = load_dataset(m, MissingIdPolicy::Error);
  const auto ref = ds.graph();
  EXPECT_EQ(g.sources(), ref.sources());
  EXPECT_EQ(g.targets(), ref.targets());
  EXPECT_EQ(g.ss().pairs, ref.ss().pairs);
  EXPECT_EQ(g.st().pairs, ref.st().pairs);
  EXPECT_EQ(g.tt().pairs, ref.tt().pairs);
}

TEST(Ingest, SynthCompleteBipartite) {
  auto c = fixture::small_synth(1, 6, 7);
  c.num_blocks = 1;
  c.intra_block_st_prob = 1.0;
  c.ss_prob = c.tt_prob = 0.0;
  const auto g = synth_generate(c).graph();
  EXPECT_EQ(g.st().pairs.size(), 42u);
  EXPECT_TRUE(g.ss().pairs.empty());
  EXPECT_TRUE(g.tt().pairs.empty());
}

TEST(Ingest, SynthNoiselessBlocksShareFeatures) {
  auto c = fixture::small_synth(2);
  c.feature_noise = 0.0;
  const auto ds = synth_generate(c);
  const auto& f = ds.sources.features();
  for (std::size_t i = 0; i < ds.sources.size(); ++i)
    for (std::size_t j = i + 1; j < ds.sources.size(); ++j)
      if (ds.source_blocks[i] == ds.source_blocks[j]) {
        for (std::size_t k = 0; k < c.num_blocks; ++k) ASSERT_EQ(f(i, k), f(j, k));
      }
}

TEST(Ingest, SynthDeterministicBytes) {
  auto c = fixture::small_synth(7);
  const auto a = fixture::temp_dir("ingest_det_a");
  const auto b = fixture::temp_dir("ingest_det_b");
  write_synth_dataset(a, synth_generate(c));
  write_synth_dataset(b, synth_generate(c));
  for (const char* f : {"sources.csv", "targets.csv", "edges.csv", "blocks.csv"})
    EXPECT_EQ(fixture::read_file(a / f), fixture::read_file(b / f)) << f;
}

TEST(Ingest, SynthStCountWithinThreeSigma) {
  auto c = fixture::small_synth(4, 200, 300);
  c.num_blocks = 5;
  const auto ds = synth_generate(c);
  double mean = 0.0, var = 0.0;
  for (std::size_t s = 0; s < c.num_sources; ++s)
    for (std::size_t t = 0; t < c.num_targets; ++t) {
      const double p = ds.source_blocks[s] == ds.target_blocks[t] ? c.intra_block_st_prob
                                                                  : c.intra_block_st_prob / 10.0;
      mean += p;
      var += p * (1 - p);
    }
  const double n = static_cast<double>(ds.edges[1].pairs.size());
  EXPECT_LT(std::abs(n - mean), 3.0 * std::sqrt(var));
}

TEST(Ingest, SynthConfigValidation) {
  auto c = fixture::small_synth(1);
  c.intra_block_st_prob = 1.5;
  EXPECT_EQ(error_code([&] { c.validate(); }), ErrorCode::ConfigInvalid);
  c = fixture::small_synth(1);
  c.num_blocks = 0;
  EXPECT_EQ(error_code([&] { c.validate(); }), ErrorCode::ConfigInvalid);
}
