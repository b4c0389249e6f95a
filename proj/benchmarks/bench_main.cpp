#include <benchmark/benchmark.h>

#include "linkbench/ingest.hpp"
#include "linkbench/metrics.hpp"
#include "linkbench/models.hpp"
#include "linkbench/random.hpp"
#include "linkbench/sampling.hpp"
#include "linkbench/split.hpp"

using namespace linkbench;

namespace {

SynthConfig bench_synth(std::size_t ns, std::size_t nt) {
  SynthConfig c;
  c.num_sources = ns;
  c.num_targets = nt;
  c.feature_dim_s = 32;
  c.feature_dim_t = 32;
  c.num_blocks = 20;
  c.intra_block_st_prob = 0.2;
  c.ss_prob = 0.1;
  c.tt_prob = 0.1;
  c.seed = 1;
  return c;
}

void BM_Split(benchmark::State& state) {
  const HeteroGraph g = synth_generate(bench_synth(500, 800)).graph();
  SplitSpec spec;
  spec.mode = static_cast<SplitMode>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(split_graph(g, spec));
}
BENCHMARK(BM_Split)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_SampleEpoch(benchmark::State& state) {
  const HeteroGraph g = synth_generate(bench_synth(500, 800)).graph();
  const SplitResult split = split_graph(g, SplitSpec{});
  SamplerConfig sc;
  sc.batch_size = static_cast<std::size_t>(state.range(0));
  const BatchSampler sampler(g, split, SplitLabel::Train, sc);
  std::size_t epoch = 0;
  for (auto _ : state) {
    const auto chunks = sampler.chunks(epoch);
    for (std::size_t i = 0; i < chunks.size(); ++i)
      benchmark::DoNotOptimize(sampler.make_batch(chunks[i], epoch, i));
    ++epoch;
  }
}
BENCHMARK(BM_SampleEpoch)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  const HeteroGraph g = synth_generate(bench_synth(500, 800)).graph();
  const SplitResult split = split_graph(g, SplitSpec{});
  SamplerConfig sc;
  sc.batch_size = 512;
  const BatchSampler sampler(g, split, SplitLabel::Train, sc);
  const Batch batch = sampler.make_batch(sampler.chunks(0).front(), 0, 0);
  ModelConfig mc;
  mc.kind = static_cast<ModelKind>(state.range(0));
  mc.hidden_dim = 64;
  LinkModel model(mc, g, 1);
  const auto y = batch.labels();
  for (auto _ : state) {
    nn::Tape t;
    nn::Var loss = nn::bce_loss(model.forward(t, g, batch), y);
    t.backward(loss);
    model.params().zero_grad();
  }
  state.SetLabel(std::string(to_string(mc.kind)));
}
BENCHMARK(BM_ForwardBackward)
    ->DenseRange(static_cast<int>(ModelKind::SageCP), static_cast<int>(ModelKind::Bilinear))
    ->Unit(benchmark::kMillisecond);

void BM_HitsAtK(benchmark::State& state) {
  Rng rng(3);
  ScoredEdges s;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    s.scores.push_back(uniform_real(rng, 0.0, 1.0));
    s.labels.push_back(i % 11 == 0 ? 1 : 0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(hits_at_k(s, 100));
    benchmark::DoNotOptimize(precision_at_k(s, 500));
  }
}
BENCHMARK(BM_HitsAtK)->Arg(10'000)->Arg(100'000);

}  // namespace

BENCHMARK_MAIN();
