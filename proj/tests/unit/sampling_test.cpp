#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <set>

#include "fixtures.hpp"
#include "linkbench/sampling.hpp"
#include "oracles.hpp"

using namespace linkbench;
using fixture::error_code;

namespace {

SplitResult split_of(const HeteroGraph& g, SplitMode m, std::uint64_t seed = 1) {
  SplitSpec s;
  s.mode = m;
  s.seed = seed;
  return split_graph(g, s);
}

MessageEdges all_edges(const HeteroGraph& g) {
  MessageEdges m;
  m.ss = g.ss().pairs;
  m.st = g.st().pairs;
  m.tt = g.tt().pairs;
  return m;
}

}  // namespace

TEST(Sampling, BatchSizesFourFourTwo) {
  std::vector<EdgePair> st;
  for (std::uint32_t i = 0; i < 10; ++i) st.push_back({i, i});
  auto g = fixture::graph(10, 10, {}, st, {});
  SplitResult r = split_of(g, SplitMode::Random);
  // Put every edge in Train so the partition holds exactly 10 positives.
  EdgeLabels all_train;
  all_train.st.assign(10, SplitLabel::Train);
  r = assemble_split(g, r.spec, all_train, {});
  SamplerConfig c;
  c.batch_size = 4;
  BatchSampler sampler(g, r, SplitLabel::Train, c);
  const auto chunks = sampler.chunks(0);
  ASSERT_EQ(chunks.size(), 3u);
  EXPECT_EQ(chunks[0].size(), 4u);
  EXPECT_EQ(chunks[1].size(), 4u);
  EXPECT_EQ(chunks[2].size(), 2u);
  EXPECT_EQ(sampler.num_batches(), 3u);
  std::set<EdgePair> seen;
  for (const auto& ch : chunks) seen.insert(ch.begin(), ch.end());
  EXPECT_EQ(seen.size(), 10u);
}

TEST(Sampling, SameSeedSameBatches) {
  const auto g = synth_generate(fixture::small_synth(2)).graph();
  for (auto m : {SplitMode::Random, SplitMode::ColdSource, SplitMode::ColdTarget}) {
    const auto r = split_of(g, m);
    SamplerConfig c;
    c.batch_size = 16;
    c.seed = 99;
    const auto a = BatchSampler(g, r, SplitLabel::Train, c).epoch(3);
    const auto b = BatchSampler(g, r, SplitLabel::Train, c).epoch(3);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].positives, b[i].positives);
      EXPECT_EQ(a[i].negatives, b[i].negatives);
      EXPECT_EQ(a[i].mp.nodes, b[i].mp.nodes);
    }
    c.seed = 100;
    const auto d = BatchSampler(g, r, SplitLabel::Train, c).epoch(3);
    EXPECT_NE(a[0].positives, d[0].positives);
  }
}

TEST(Sampling, ColdTwoEdgeContract) {
  const std::vector<EdgePair> bp{{1, 1}, {2, 2}};
  StEdgeSet st(bp);
  Rng rng(5);
  const auto neg = negative_sample_cold(st, bp, 1, 10, rng);
  ASSERT_EQ(neg.size(), 2u);
  for (const auto& e : neg) {
    EXPECT_TRUE(e.u == 1 || e.u == 2);
    EXPECT_TRUE(e.v == 1 || e.v == 2);
    EXPECT_FALSE(st.contains(e));
  }
}

TEST(Sampling, RandomTwoEdgeContract) {
  const std::vector<EdgePair> bp{{1, 1}, {2, 2}};
  StEdgeSet st(bp);
  Rng rng(8);
  const auto neg = negative_sample_random(st, bp, 1, 10, rng);
  const std::set<EdgePair> got(neg.begin(), neg.end());
  EXPECT_EQ(got, (std::set<EdgePair>{{1, 2}, {2, 1}}));
}

TEST(Sampling, CompleteGroundTruthExhausts) {
  std::vector<EdgePair> all;
  for (std::uint32_t s = 0; s < 3; ++s)
    for (std::uint32_t t = 0; t < 4; ++t) all.push_back({s, t});
  StEdgeSet st(all);
  Rng rng(1);
  EXPECT_EQ(error_code([&] { negative_sample_cold(st, std::span(all).first(2), 1, 10, rng); }),
            ErrorCode::SamplingExhausted);
  EXPECT_EQ(error_code([&] { negative_sample_random(st, std::span(all).first(1), 1, 10, rng); }),
            ErrorCode::SamplingExhausted);
}

TEST(Sampling, TenToOneAtTestTime) {
  // 100 positives from 100 sources, 400 targets; each source links to 4 targets.
  std::vector<EdgePair> st;
  for (std::uint32_t s = 0; s < 100; ++s)
    for (std::uint32_t k = 0; k < 4; ++k) st.push_back({s, (s * 4 + k) % 400});
  StEdgeSet gt(st);
  std::vector<EdgePair> positives;
  for (std::uint32_t s = 0; s < 100; ++s) positives.push_back(st[s * 4]);
  Rng rng(3);
  const auto neg = negative_sample_cold(gt, positives, 10, 10, rng);
  ASSERT_EQ(neg.size(), 1000u);
  std::set<EdgePair> uniq(neg.begin(), neg.end());
  EXPECT_EQ(uniq.size(), 1000u);
  for (const auto& n : neg)
    for (const auto& p : st) ASSERT_FALSE(n == p);
}

TEST(Sampling, ConfigValidation) {
  SamplerConfig c;
  c.ratio = 0;
  EXPECT_EQ(error_code([&] { c.validate(); }), ErrorCode::ConfigInvalid);
  c = {};
  c.batch_size = 0;
  EXPECT_EQ(error_code([&] { c.validate(); }), ErrorCode::ConfigInvalid);
}

TEST(Sampling, KHopChain) {
  // s0-t0 (ST), t0-t1, t1-t2 (TT).
  auto g = fixture::graph(1, 3, {}, {{0, 0}}, {{0, 1}, {1, 2}});
  MessageIndex idx(g, all_edges(g));
  const std::vector<std::uint32_t> seed{g.global({Role::Source, 0})};
  auto sg = subgraph_khop(idx, seed, 2);
  const std::vector<std::uint32_t> expected{g.global({Role::Source, 0}), g.global({Role::Target, 0}),
                                            g.global({Role::Target, 1})};
  EXPECT_EQ(sg.nodes, expected);
  EXPECT_EQ(sg.edges.size(), 2u);
  EXPECT_EQ(sg.num_sources, 1u);

  auto zero = subgraph_khop(idx, seed, 0);
  EXPECT_EQ(zero.nodes, seed);
  EXPECT_TRUE(zero.edges.empty());
}

TEST(Sampling, IsolatedSeed) {
  auto g = fixture::graph(2, 1, {}, {{0, 0}}, {});
  MessageIndex idx(g, all_edges(g));
  const std::vector<std::uint32_t> seed{g.global({Role::Source, 1})};
  auto sg = subgraph_khop(idx, seed, 2);
  EXPECT_EQ(sg.num_nodes(), 1u);
  EXPECT_TRUE(sg.edges.empty());
  EXPECT_TRUE(sg.neighbors_of(0).empty());
}

TEST(Sampling, ExcludedStEdgeIsInvisible) {
  auto g = fixture::graph(1, 1, {}, {{0, 0}}, {});
  MessageIndex idx(g, all_edges(g));
  std::unordered_set<std::uint64_t> ex{edge_key({0, 0})};
  const std::vector<std::uint32_t> seed{0};
  auto sg = subgraph_khop(idx, seed, 2, &ex);
  EXPECT_EQ(sg.num_nodes(), 1u);
}

TEST(Sampling, KHopMatchesDistanceOracle) {
  const auto g = synth_generate(fixture::small_synth(21, 20, 25)).graph();
  const auto msg = all_edges(g);
  MessageIndex idx(g, msg);
  const auto dist = oracle::all_pairs_hops(g, msg);
  for (std::size_t hops : {0u, 1u, 2u, 3u}) {
    const std::vector<std::uint32_t> seeds{0, 7, static_cast<std::uint32_t>(g.sources().size() + 3)};
    const auto sg = subgraph_khop(idx, seeds, hops);
    std::vector<std::uint32_t> expected;
    for (std::uint32_t v = 0; v < g.num_nodes(); ++v) {
      std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
      for (auto s : seeds) best = std::min(best, dist[s][v]);
      if (best <= hops) expected.push_back(v);
    }
    EXPECT_EQ(sg.nodes, expected) << hops;
    // Every message edge among the kept nodes is present.
    std::size_t inside = 0;
    const std::set<std::uint32_t> kept(expected.begin(), expected.end());
    const auto ns = static_cast<std::uint32_t>(g.sources().size());
    for (const auto& e : msg.ss) inside += kept.count(e.u) && kept.count(e.v);
    for (const auto& e : msg.st) inside += kept.count(e.u) && kept.count(ns + e.v);
    for (const auto& e : msg.tt) inside += kept.count(ns + e.u) && kept.count(ns + e.v);
    EXPECT_EQ(sg.edges.size(), inside) << hops;
  }
}

TEST(Sampling, BatchesRespectContracts) {
  const auto g = synth_generate(fixture::small_synth(4)).graph();
  for (auto m : {SplitMode::Random, SplitMode::ColdSource, SplitMode::ColdTarget}) {
    const auto r = split_of(g, m, 2);
    for (auto p : kAllPartitions) {
      SamplerConfig c;
      c.batch_size = 8;
      c.ratio = p == SplitLabel::Test ? 10 : 1;
      BatchSampler sampler(g, r, p, c);
      for (std::size_t i = 0; i < sampler.num_batches(); ++i) {
        auto chunk = sampler.chunks(0)[i];
        Batch b;
        try {
          b = sampler.make_batch(chunk, 0, i);
        } catch (const Error& e) {
          ASSERT_EQ(e.code(), ErrorCode::SamplingExhausted);
          continue;
        }
        EXPECT_EQ(b.negatives.size(), b.positives.size() * c.ratio);
        for (const auto& n : b.negatives) EXPECT_FALSE(sampler.ground_truth().contains(n));
        EXPECT_EQ(audit_batch(g, r, p, b), 0u);
        // Every scored endpoint has a local index.
        for (const auto& e : b.local_edges()) {
          EXPECT_LT(e.u, b.mp.num_sources);
          EXPECT_GE(e.v, b.mp.num_sources);
          EXPECT_LT(e.v, b.mp.num_nodes());
        }
      }
    }
  }
}

TEST(Sampling, EmptyPartition) {
  std::vector<EdgePair> st;
  for (std::uint32_t i = 0; i < 10; ++i) st.push_back({i, i});
  auto g = fixture::graph(10, 10, {}, st, {});
  SplitSpec s;
  EdgeLabels all_train;
  all_train.st.assign(10, SplitLabel::Train);
  const auto r = assemble_split(g, s, all_train, {});
  EXPECT_EQ(error_code([&] { BatchSampler(g, r, SplitLabel::Val, SamplerConfig{}); }),
            ErrorCode::EmptyPartition);
}
