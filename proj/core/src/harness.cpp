#include "linkbench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <type_traits>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "linkbench/error.hpp"
#include "linkbench/sampling.hpp"

namespace linkbench {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

void RunConfig::validate() const {
  auto in = [](double x, double lo, double hi) { return x == 0.0 || (x >= lo && x <= hi); };
  if (!in(lr, 1e-6, 1e-2)) fail(ErrorCode::ConfigInvalid, fmt::format("lr {} outside [1e-6, 1e-2]", lr));
  if (!in(weight_decay, 1e-5, 1.0)) {
    fail(ErrorCode::ConfigInvalid, fmt::format("weight_decay {} outside [1e-5, 1]", weight_decay));
  }
  if (batch_size == 0) fail(ErrorCode::ConfigInvalid, "batch_size must be positive");
  if (eval_every == 0) fail(ErrorCode::ConfigInvalid, "eval_every must be positive");
  for (auto r : neg_ratio)
    if (r == 0) fail(ErrorCode::ConfigInvalid, "negative ratios must be positive");
  if (sampler_tries == 0) fail(ErrorCode::ConfigInvalid, "sampler_tries must be positive");
  if (threads == 0) fail(ErrorCode::ConfigInvalid, "threads must be positive");
  model.validate(allow_any_dim);
  split.validate();
  if (!dataset) synth.validate();
}

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) fail(ErrorCode::ConfigInvalid, fmt::format("{} must be an object", where));
  for (const auto& [k, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      fail(ErrorCode::ConfigInvalid, fmt::format("unknown key '{}' in {}", k, where));
    }
  }
}

template <typename T>
void get_opt(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
    // nlohmann truncates 0.5 to 0 and wraps -1; reject both.
    if (!j.at(key).is_number_unsigned()) {
      fail(ErrorCode::ConfigInvalid, fmt::format("'{}' must be a non-negative integer", key));
    }
  }
  out = j.at(key).get<T>();
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig c;
  try {
    const json j = json::parse(text);
    check_keys(j,
               {"dataset", "synth", "variant", "split", "model", "lr", "weight_decay", "batch_size",
                "eval_batch_size", "epochs", "eval_every", "neg_ratio", "k", "sampler_tries", "hops",
                "seed", "out_dir", "threads", "allow_any_dim"},
               "config");
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      check_keys(d, {"name", "sources", "targets", "edges", "seed"}, "dataset");
      DatasetManifest m;
      get_opt(d, "name", m.name);
      m.source_features_path = d.at("sources").get<std::string>();
      m.target_features_path = d.at("targets").get<std::string>();
      m.edges_path = d.at("edges").get<std::string>();
      get_opt(d, "seed", m.seed);
      c.dataset = m;
    }
    if (j.contains("synth")) {
      const auto& s = j.at("synth");
      check_keys(s,
                 {"num_sources", "num_targets", "feature_dim_s", "feature_dim_t", "num_blocks",
                  "intra_block_st_prob", "ss_prob", "tt_prob", "feature_noise", "seed"},
                 "synth");
      get_opt(s, "num_sources", c.synth.num_sources);
      get_opt(s, "num_targets", c.synth.num_targets);
      get_opt(s, "feature_dim_s", c.synth.feature_dim_s);
      get_opt(s, "feature_dim_t", c.synth.feature_dim_t);
      get_opt(s, "num_blocks", c.synth.num_blocks);
      get_opt(s, "intra_block_st_prob", c.synth.intra_block_st_prob);
      get_opt(s, "ss_prob", c.synth.ss_prob);
      get_opt(s, "tt_prob", c.synth.tt_prob);
      get_opt(s, "feature_noise", c.synth.feature_noise);
      get_opt(s, "seed", c.synth.seed);
    }
    if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("split")) {
      const auto& s = j.at("split");
      check_keys(s, {"mode", "ratios", "seed", "test_sees_val_edges"}, "split");
      if (s.contains("mode")) c.split.mode = parse_split_mode(s.at("mode").get<std::string>());
      get_opt(s, "ratios", c.split.ratios);
      get_opt(s, "seed", c.split.seed);
      get_opt(s, "test_sees_val_edges", c.split.test_sees_val_edges);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      check_keys(m, {"kind", "hidden_dim", "gatv2_heads", "gin_eps"}, "model");
      if (m.contains("kind")) c.model.kind = parse_model_kind(m.at("kind").get<std::string>());
      get_opt(m, "hidden_dim", c.model.hidden_dim);
      get_opt(m, "gatv2_heads", c.model.gatv2_heads);
      get_opt(m, "gin_eps", c.model.gin_eps);
    }
    get_opt(j, "lr", c.lr);
    get_opt(j, "weight_decay", c.weight_decay);
    get_opt(j, "batch_size", c.batch_size);
    get_opt(j, "eval_batch_size", c.eval_batch_size);
    get_opt(j, "epochs", c.epochs);
    get_opt(j, "eval_every", c.eval_every);
    get_opt(j, "neg_ratio", c.neg_ratio);
    get_opt(j, "k", c.k);
    get_opt(j, "sampler_tries", c.sampler_tries);
    get_opt(j, "hops", c.hops);
    get_opt(j, "seed", c.seed);
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    get_opt(j, "threads", c.threads);
    get_opt(j, "allow_any_dim", c.allow_any_dim);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigInvalid, fmt::format("config: {}", e.what()));
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, fmt::format("cannot open config {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string to_json(const RunConfig& c) {
  json j;
  if (c.dataset) {
    j["dataset"] = {{"name", c.dataset->name},
                    {"sources", c.dataset->source_features_path.string()},
                    {"targets", c.dataset->target_features_path.string()},
                    {"edges", c.dataset->edges_path.string()},
                    {"seed", c.dataset->seed}};
  } else {
    j["synth"] = {{"num_sources", c.synth.num_sources},
                  {"num_targets", c.synth.num_targets},
                  {"feature_dim_s", c.synth.feature_dim_s},
                  {"feature_dim_t", c.synth.feature_dim_t},
                  {"num_blocks", c.synth.num_blocks},
                  {"intra_block_st_prob", c.synth.intra_block_st_prob},
                  {"ss_prob", c.synth.ss_prob},
                  {"tt_prob", c.synth.tt_prob},
                  {"feature_noise", c.synth.feature_noise},
                  {"seed", c.synth.seed}};
  }
  j["variant"] = std::string(to_string(c.variant));
  j["split"] = {{"mode", std::string(to_string(c.split.mode))},
                {"ratios", c.split.ratios},
                {"seed", c.split.seed},
                {"test_sees_val_edges", c.split.test_sees_val_edges}};
  j["model"] = {{"kind", std::string(to_string(c.model.kind))},
                {"hidden_dim", c.model.hidden_dim},
                {"gatv2_heads", c.model.gatv2_heads},
                {"gin_eps", c.model.gin_eps}};
  j["lr"] = c.lr;
  j["weight_decay"] = c.weight_decay;
  j["batch_size"] = c.batch_size;
  j["eval_batch_size"] = c.eval_batch_size;
  j["epochs"] = c.epochs;
  j["eval_every"] = c.eval_every;
  j["neg_ratio"] = c.neg_ratio;
  j["k"] = c.k;
  j["sampler_tries"] = c.sampler_tries;
  j["hops"] = c.hops;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir.string();
  j["threads"] = c.threads;
  j["allow_any_dim"] = c.allow_any_dim;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Data

HeteroGraph load_graph(const RunConfig& cfg) {
  HeteroGraph g = cfg.dataset ? load_dataset(*cfg.dataset) : synth_generate(cfg.synth).graph();
  if (cfg.variant != GraphVariant::STExpanded) g = derive_variant(g, cfg.variant);
  return g;
}

Experiment prepare(const RunConfig& cfg) {
  Experiment e;
  e.graph = load_graph(cfg);
  e.split = split_graph(e.graph, cfg.split);
  return e;
}

namespace {

class RunLog {
 public:
  explicit RunLog(const std::filesystem::path& dir) {
    if (!dir.empty()) out_ = detail::open_for_write(dir / "run.log");
  }
  template <typename... Args>
  void line(fmt::format_string<Args...> f, Args&&... args) {
    if (!out_.is_open()) return;
    out_ << fmt::format(f, std::forward<Args>(args)...) << '\n';
  }

 private:
  std::ofstream out_;
};

BatchSampler eval_sampler(const RunConfig& cfg, const Experiment& exp, SplitLabel p) {
  SamplerConfig sc;
  const auto n = exp.split.supervision_of(p).size();
  sc.batch_size = cfg.eval_batch_size ? cfg.eval_batch_size : std::max<std::size_t>(n, 1);
  sc.ratio = cfg.neg_ratio[index_of(p)];
  sc.tries = cfg.sampler_tries;
  // Fixed by the split seed so every model and run seed sees the same negatives.
  sc.seed = derive_seed(exp.split.spec.seed, 0xE7A1, index_of(p));
  return BatchSampler(exp.graph, exp.split, p, sc, cfg.hops);
}

nn::Checkpoint snapshot(const LinkModel& m) {
  nn::Checkpoint ck;
  ck.meta = m.checkpoint_meta();
  for (const auto& p : m.params()) ck.tensors.emplace_back(p.name, p.value);
  return ck;
}

/// k for non-test partitions: the configured value, capped by the negatives.
std::size_t eval_k(const RunConfig& cfg, const ScoredEdges& s, SplitLabel p) {
  const std::size_t k = resolve_k(cfg.k, s);
  return p == SplitLabel::Test ? k : std::max<std::size_t>(1, std::min(k, s.num_negatives()));
}

EvalReport report_for(const RunConfig& cfg, const Experiment& exp, const ScoredEdges& s,
                      SplitLabel p, double threshold) {
  return evaluate_scored(s, threshold, eval_k(cfg, s, p), exp.split.source_seen,
                         exp.split.target_seen);
}

template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t w = std::min(threads, n);
  if (w <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < w; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void write_outputs(const RunConfig& cfg, const Experiment& exp, const RunResult& r) {
  if (cfg.out_dir.empty()) return;
  const auto& dir = cfg.out_dir;
  const MetricsRow row = metrics_row(cfg, r.test);
  write_metrics_table(dir / "metrics.csv", std::span(&row, 1));
  write_node_ap_table(dir / "node_ap.csv", exp.graph, r.test.node_ap);
  const auto hist = seen_unseen_report(r.test.node_ap);
  write_ap_histogram(dir / "ap_histogram.csv", hist);
  {
    auto out = detail::open_for_write(dir / "loss.csv");
    out << "epoch,loss\n";
    for (std::size_t e = 0; e < r.loss_curve.size(); ++e) fmt::print(out, "{},{:.10f}\n", e + 1, r.loss_curve[e]);
  }
  {
    auto out = detail::open_for_write(dir / "config.json");
    out << to_json(cfg) << '\n';
  }
  write_split_manifest(dir / "split.csv", exp.graph, exp.split);
  if (!r.checkpoint.tensors.empty()) {
    nn::ParamStore ps;
    for (const auto& [name, value] : r.checkpoint.tensors) ps.add(name, value);
    nn::save_checkpoint(dir / "checkpoint.bin", ps, r.checkpoint.meta);
  }
}

}  // namespace

MetricsRow metrics_row(const RunConfig& cfg, const EvalReport& r, std::string seed_label) {
  MetricsRow row;
  row.split = std::string(to_string(cfg.split.mode));
  row.model = std::string(to_string(cfg.model.kind));
  row.seed = seed_label.empty() ? std::to_string(cfg.seed) : std::move(seed_label);
  row.f1 = r.f1;
  row.hits_at_k = r.hits_at_k;
  row.precision_at_k = r.precision_at_k;
  row.threshold = r.threshold;
  return row;
}

ScoredEdges score_partition(LinkModel& model, const RunConfig& cfg, const Experiment& exp,
                            SplitLabel partition) {
  const BatchSampler sampler = eval_sampler(cfg, exp, partition);
  ScoredEdges out;
  for (const Batch& b : sampler.epoch(0)) {
    nn::Tape tape(false);
    const Matrix& probs = model.forward(tape, exp.graph, b).value();
    for (const auto* list : {&b.positives, &b.negatives})
      out.edges.insert(out.edges.end(), list->begin(), list->end());
    out.scores.insert(out.scores.end(), probs.data().begin(), probs.data().end());
    out.labels.insert(out.labels.end(), b.positives.size(), 1);
    out.labels.insert(out.labels.end(), b.negatives.size(), 0);
  }
  return out;
}

ScoredEdges score_shortest_path(const RunConfig& cfg, const Experiment& exp, SplitLabel partition) {
  require_split_support(ModelKind::ShortestPath, exp.split.spec.mode);
  const BatchSampler sampler = eval_sampler(cfg, exp, partition);
  ScoredEdges out;
  const auto chunks = sampler.chunks(0);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    // Same pairs as score_partition; the subgraph is not needed.
    const Batch b = sampler.make_batch(chunks[i], 0, i);
    for (const auto* list : {&b.positives, &b.negatives})
      out.edges.insert(out.edges.end(), list->begin(), list->end());
    out.labels.insert(out.labels.end(), b.positives.size(), 1);
    out.labels.insert(out.labels.end(), b.negatives.size(), 0);
  }
  out.scores = shortest_path_scores(exp.graph, exp.split.message_of(SplitLabel::Train), out.edges,
                                    exp.split.spec.mode);
  return out;
}

// ---------------------------------------------------------------------------
// Training

RunResult train(const RunConfig& cfg, const Experiment& exp) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  require_split_support(cfg.model.kind, exp.split.spec.mode);
  const LeakageReport leak = assert_no_leakage(exp.graph, exp.split);
  if (!leak.ok()) {
    fail(ErrorCode::LeakageDetected,
         fmt::format("split leaks: overlap {}, missing {}, cold-in-train {}, cross-partition {}, "
                     "eval-in-message {}",
                     leak.supervision_overlap, leak.supervision_missing, leak.cold_node_in_train,
                     leak.cold_node_cross_partition, leak.eval_edge_in_message));
  }

  RunLog log(cfg.out_dir);
  log.line("model {} split {} variant {} seed {}", to_string(cfg.model.kind),
           to_string(cfg.split.mode), to_string(cfg.variant), cfg.seed);
  log.line("nodes {} sources {} targets {} edges ss {} st {} tt {}", exp.graph.num_nodes(),
           exp.graph.sources().size(), exp.graph.targets().size(), exp.graph.ss().pairs.size(),
           exp.graph.st().pairs.size(), exp.graph.tt().pairs.size());
  for (auto p : kAllPartitions) {
    log.line("partition {} supervision {} message st {}", to_string(p),
             exp.split.supervision_of(p).size(), exp.split.message_of(p).st.size());
  }

  RunResult r;
  r.config = cfg;

  if (cfg.model.kind == ModelKind::ShortestPath) {
    const ScoredEdges val = score_shortest_path(cfg, exp, SplitLabel::Val);
    r.threshold = best_threshold(val);
    r.val = report_for(cfg, exp, val, SplitLabel::Val, r.threshold);
    r.test = report_for(cfg, exp, score_shortest_path(cfg, exp, SplitLabel::Test), SplitLabel::Test,
                        r.threshold);
  } else {
    LinkModel model(cfg.model, exp.graph, cfg.seed, cfg.allow_any_dim);
    log.line("parameters {} values {}", model.params().size(), model.params().num_values());
    nn::Adam opt(model.params(), {.lr = cfg.lr, .weight_decay = cfg.weight_decay});

    SamplerConfig sc;
    sc.batch_size = cfg.batch_size;
    sc.ratio = cfg.neg_ratio[0];
    sc.tries = cfg.sampler_tries;
    sc.seed = derive_seed(cfg.seed, 0x7A1);
    const BatchSampler sampler(exp.graph, exp.split, SplitLabel::Train, sc, cfg.hops);

    double best_f1 = -1.0;
    auto validate = [&](std::size_t epoch) {
      const ScoredEdges val = score_partition(model, cfg, exp, SplitLabel::Val);
      const double f1 = f1_at_threshold(val, best_threshold(val));
      r.val_f1_curve.push_back(f1);
      log.line("epoch {} val_f1 {:.6f}", epoch, f1);
      if (f1 > best_f1) {
        best_f1 = f1;
        r.best_epoch = epoch;
        r.checkpoint = snapshot(model);
      }
    };

    if (cfg.epochs == 0) validate(0);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      double loss_sum = 0.0;
      std::size_t loss_n = 0;
      const auto chunks = sampler.chunks(epoch);
      for (std::size_t i = 0; i < chunks.size(); ++i) {
        Batch b;
        try {
          b = sampler.make_batch(chunks[i], epoch, i);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::SamplingExhausted) throw;
          ++r.skipped_batches;
          log.line("epoch {} batch {} skipped: {}", epoch + 1, i, e.what());
          continue;
        }
        model.params().zero_grad();
        nn::Tape tape;
        double loss_value = 0.0;
        try {
          nn::Var loss = nn::bce_loss(model.forward(tape, exp.graph, b), b.labels());
          loss_value = loss.value()(0, 0);
          tape.backward(loss);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NonFinite) throw;
          fail(ErrorCode::NonFiniteLoss,
               fmt::format("epoch {} batch {} ({} positives): {}", epoch + 1, i, b.positives.size(), e.what()));
        }
        if (!std::isfinite(loss_value)) {
          fail(ErrorCode::NonFiniteLoss, fmt::format("epoch {} batch {}: loss {}", epoch + 1, i, loss_value));
        }
        opt.step();
        const double w = static_cast<double>(b.positives.size() + b.negatives.size());
        loss_sum += loss_value * w;
        loss_n += b.positives.size() + b.negatives.size();
      }
      if (loss_n == 0) {
        fail(ErrorCode::SamplingExhausted, fmt::format("epoch {}: every batch exhausted the sampler", epoch + 1));
      }
      r.loss_curve.push_back(loss_sum / static_cast<double>(loss_n));
      log.line("epoch {} loss {:.10f}", epoch + 1, r.loss_curve.back());
      if ((epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs) validate(epoch + 1);
    }

    model.load(r.checkpoint);
    const ScoredEdges val = score_partition(model, cfg, exp, SplitLabel::Val);
    r.threshold = best_threshold(val);
    r.val = report_for(cfg, exp, val, SplitLabel::Val, r.threshold);
    r.test = report_for(cfg, exp, score_partition(model, cfg, exp, SplitLabel::Test),
                        SplitLabel::Test, r.threshold);
    r.checkpoint.meta["threshold"] = fmt::format("{}", r.threshold);
    r.checkpoint.meta["best_epoch"] = std::to_string(r.best_epoch);
  }

  log.line("threshold {:.6f} best_epoch {} skipped_batches {}", r.threshold, r.best_epoch,
           r.skipped_batches);
  log.line("val f1 {:.6f} hits@{} {:.6f} precision@{} {:.6f}", r.val.f1, r.val.k, r.val.hits_at_k,
           r.val.k, r.val.precision_at_k);
  log.line("test f1 {:.6f} hits@{} {:.6f} precision@{} {:.6f}", r.test.f1, r.test.k,
           r.test.hits_at_k, r.test.k, r.test.precision_at_k);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log.line("wall_seconds {:.3f}", r.wall_seconds);
  write_outputs(cfg, exp, r);
  return r;
}

RunResult train(const RunConfig& cfg) { return train(cfg, prepare(cfg)); }

EvalReport evaluate(const nn::Checkpoint& ckpt, const RunConfig& cfg, const Experiment& exp,
                    SplitLabel partition) {
  require_split_support(cfg.model.kind, exp.split.spec.mode);
  if (cfg.model.kind == ModelKind::ShortestPath) {
    const double t = best_threshold(score_shortest_path(cfg, exp, SplitLabel::Val));
    return report_for(cfg, exp, score_shortest_path(cfg, exp, partition), partition, t);
  }
  LinkModel model(cfg.model, exp.graph, cfg.seed, cfg.allow_any_dim);
  model.load(ckpt);
  double threshold = 0.0;
  if (auto it = ckpt.meta.find("threshold"); it != ckpt.meta.end()) {
    if (!detail::parse_double(it->second, threshold)) {
      fail(ErrorCode::CheckpointMismatch, fmt::format("bad threshold '{}'", it->second));
    }
  } else {
    threshold = best_threshold(score_partition(model, cfg, exp, SplitLabel::Val));
  }
  return report_for(cfg, exp, score_partition(model, cfg, exp, partition), partition, threshold);
}

EvalReport evaluate(const std::filesystem::path& checkpoint, const RunConfig& cfg,
                    const Experiment& exp, SplitLabel partition) {
  if (cfg.model.kind == ModelKind::ShortestPath) return evaluate(nn::Checkpoint{}, cfg, exp, partition);
  return evaluate(nn::load_checkpoint(checkpoint), cfg, exp, partition);
}

// ---------------------------------------------------------------------------
// Search, ablation, suite

std::vector<TrialRow> sample_trials(std::size_t trials, std::uint64_t seed) {
  constexpr std::array<std::size_t, 3> kDims{64, 128, 256};
  Rng rng(derive_seed(seed, 0x5EA2C));
  std::vector<TrialRow> out(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    out[i].trial = i;
    out[i].lr = std::pow(10.0, uniform_real(rng, -6.0, -2.0));
    out[i].weight_decay = std::pow(10.0, uniform_real(rng, -5.0, 0.0));
    out[i].hidden_dim = kDims[uniform_index(rng, kDims.size())];
  }
  return out;
}

std::vector<TrialRow> hyperparam_search(const RunConfig& base, std::size_t trials, std::uint64_t seed) {
  if (trials == 0) fail(ErrorCode::ConfigInvalid, "search needs at least one trial");
  auto rows = sample_trials(trials, seed);
  const Experiment exp = prepare(base);
  parallel_for(rows.size(), base.threads, [&](std::size_t i) {
    RunConfig c = base;
    c.lr = rows[i].lr;
    c.weight_decay = rows[i].weight_decay;
    c.model.hidden_dim = rows[i].hidden_dim;
    if (!base.out_dir.empty()) c.out_dir = base.out_dir / fmt::format("trial_{}", i);
    const RunResult r = train(c, exp);
    rows[i].val_f1 = r.val.f1;
    rows[i].test = r.test;
  });
  std::stable_sort(rows.begin(), rows.end(),
                   [](const TrialRow& a, const TrialRow& b) { return a.val_f1 > b.val_f1; });
  if (!base.out_dir.empty()) write_trial_table(base.out_dir / "search.csv", rows);
  return rows;
}

void write_trial_table(const std::filesystem::path& path, std::span<const TrialRow> rows) {
  auto out = detail::open_for_write(path);
  out << "rank,trial,lr,weight_decay,hidden_dim,val_f1,test_f1,test_hits_at_k,test_precision_at_k\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    fmt::print(out, "{},{},{:.6e},{:.6e},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", i + 1, r.trial, r.lr,
               r.weight_decay, r.hidden_dim, r.val_f1, r.test.f1, r.test.hits_at_k,
               r.test.precision_at_k);
  }
}

std::vector<AblationRow> run_ablation(const RunConfig& base, std::span<const GraphVariant> variants) {
  RunConfig full_cfg = base;
  full_cfg.variant = GraphVariant::STExpanded;
  const HeteroGraph full = load_graph(full_cfg);

  std::vector<Experiment> exps;
  for (GraphVariant v : variants) {
    Experiment e;
    e.graph = v == GraphVariant::STExpanded ? full : derive_variant(full, v);
    e.split = split_graph(e.graph, base.split);
    exps.push_back(std::move(e));
  }

  struct Job {
    std::size_t exp;
    ModelKind model;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < exps.size(); ++i)
    for (ModelKind m : {ModelKind::SageCP, ModelKind::SageEmbs})
      if (supports_split(m, base.split.mode)) jobs.push_back({i, m});

  std::vector<AblationRow> rows(jobs.size());
  parallel_for(jobs.size(), base.threads, [&](std::size_t j) {
    RunConfig c = base;
    c.variant = variants[jobs[j].exp];
    c.model.kind = jobs[j].model;
    if (!base.out_dir.empty()) {
      c.out_dir = base.out_dir / fmt::format("{}_{}", to_string(c.variant), to_string(c.model.kind));
    }
    const Experiment& e = exps[jobs[j].exp];
    rows[j].variant = c.variant;
    rows[j].model = c.model.kind;
    rows[j].message_st_edges = e.split.message_of(SplitLabel::Train).st.size();
    rows[j].test = train(c, e).test;
  });
  if (!base.out_dir.empty()) write_ablation_table(base.out_dir / "ablation.csv", base, rows);
  return rows;
}

void write_ablation_table(const std::filesystem::path& path, const RunConfig& base,
                          std::span<const AblationRow> rows) {
  auto out = detail::open_for_write(path);
  out << "variant,split,model,seed,message_st_edges,f1,hits_at_k,precision_at_k,threshold\n";
  for (const auto& r : rows) {
    fmt::print(out, "{},{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", to_string(r.variant),
               to_string(base.split.mode), to_string(r.model), base.seed, r.message_st_edges,
               r.test.f1, r.test.hits_at_k, r.test.precision_at_k, r.test.threshold);
  }
}

std::vector<MetricsRow> SuiteResult::table() const {
  std::vector<MetricsRow> t = runs;
  t.push_back(mean);
  t.push_back(std);
  return t;
}

SuiteResult run_suite(const RunConfig& base, std::size_t repeats) {
  if (repeats < 2) fail(ErrorCode::ConfigInvalid, "suite needs at least two repeats");
  const Experiment exp = prepare(base);
  SuiteResult s;
  s.runs.resize(repeats);
  parallel_for(repeats, base.threads, [&](std::size_t i) {
    RunConfig c = base;
    c.seed = base.seed + i;
    if (!base.out_dir.empty()) c.out_dir = base.out_dir / fmt::format("run_{}", i);
    s.runs[i] = metrics_row(c, train(c, exp).test);
  });

  auto stat = [&](double MetricsRow::*field, MetricsRow& mean, MetricsRow& sd) {
    double m = 0.0;
    for (const auto& r : s.runs) m += r.*field;
    m /= static_cast<double>(repeats);
    double v = 0.0;
    for (const auto& r : s.runs) v += (r.*field - m) * (r.*field - m);
    mean.*field = m;
    sd.*field = std::sqrt(v / static_cast<double>(repeats - 1));
  };
  s.mean = metrics_row(base, EvalReport{}, "mean");
  s.std = metrics_row(base, EvalReport{}, "std");
  for (auto f : {&MetricsRow::f1, &MetricsRow::hits_at_k, &MetricsRow::precision_at_k, &MetricsRow::threshold})
    stat(f, s.mean, s.std);
  if (!base.out_dir.empty()) {
    const auto rows = s.table();
    write_metrics_table(base.out_dir / "suite.csv", rows);
  }
  return s;
}

AuditReport run_audit(const RunConfig& cfg, const Experiment& exp) {
  AuditReport a;
  a.leakage = assert_no_leakage(exp.graph, exp.split);
  for (SplitLabel p : kAllPartitions) {
    if (exp.split.supervision_of(p).empty()) continue;
    std::vector<Batch> batches;
    if (p == SplitLabel::Train) {
      SamplerConfig sc;
      sc.batch_size = cfg.batch_size;
      sc.ratio = cfg.neg_ratio[0];
      sc.tries = cfg.sampler_tries;
      sc.seed = derive_seed(cfg.seed, 0x7A1);
      batches = BatchSampler(exp.graph, exp.split, p, sc, cfg.hops).epoch(0);
    } else {
      batches = eval_sampler(cfg, exp, p).epoch(0);
    }
    for (const auto& b : batches) a.batch_violations[index_of(p)] += audit_batch(exp.graph, exp.split, p, b);
  }
  return a;
}

}  // namespace linkbench
