#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "linkbench/graph.hpp"
#include "linkbench/ingest.hpp"
#include "linkbench/metrics.hpp"
#include "linkbench/models.hpp"
#include "linkbench/optim.hpp"
#include "linkbench/split.hpp"

namespace linkbench {

struct RunConfig {
  std::optional<DatasetManifest> dataset;  // synthetic data when absent
  SynthConfig synth;
  GraphVariant variant = GraphVariant::STExpanded;
  SplitSpec split;
  ModelConfig model;
  double lr = 1e-3;
  double weight_decay = 1e-5;
  std::size_t batch_size = 512;
  std::size_t eval_batch_size = 0;  // 0: one batch per partition
  std::size_t epochs = 1000;
  std::size_t eval_every = 1;  // epochs between validation passes
  std::array<std::size_t, 3> neg_ratio{1, 1, 10};  // train, val, test
  std::size_t k = 500;  // 0: 1% of scored test edges
  std::size_t sampler_tries = 10;
  std::size_t hops = 2;
  std::uint64_t seed = 0;  // run seed: initialization, batch order, training negatives
  std::filesystem::path out_dir;
  std::size_t threads = 1;  // workers for search/suite/ablate
  bool allow_any_dim = false;

  /// lr is 0 or in [1e-6, 1e-2]; weight decay 0 or in [1e-5, 1]. Raises ConfigInvalid.
  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string to_json(const RunConfig& cfg);

/// Graph (with the configured variant applied) and its split.
struct Experiment {
  HeteroGraph graph;
  SplitResult split;
};

HeteroGraph load_graph(const RunConfig& cfg);
Experiment prepare(const RunConfig& cfg);

struct RunResult {
  RunConfig config;
  std::vector<double> loss_curve;  // mean training loss per epoch
  std::vector<double> val_f1_curve;
  std::size_t best_epoch = 0;
  double threshold = 0.5;
  EvalReport val;
  EvalReport test;
  std::size_t skipped_batches = 0;  // SamplingExhausted during training
  double wall_seconds = 0.0;
  nn::Checkpoint checkpoint;  // best-validation parameters
};

/// Trains, selects the F1 threshold on validation, evaluates test. Runs the
/// leakage audit first. Writes tables, log and checkpoint into out_dir if set.
RunResult train(const RunConfig& cfg, const Experiment& exp);
RunResult train(const RunConfig& cfg);

/// Positives then negatives of one partition, scored by a model.
ScoredEdges score_partition(LinkModel& model, const RunConfig& cfg, const Experiment& exp,
                            SplitLabel partition);
ScoredEdges score_shortest_path(const RunConfig& cfg, const Experiment& exp, SplitLabel partition);

/// Reloads a checkpoint and scores a partition with its stored threshold.
/// Raises CheckpointMismatch when model shapes disagree.
EvalReport evaluate(const std::filesystem::path& checkpoint, const RunConfig& cfg,
                    const Experiment& exp, SplitLabel partition);
EvalReport evaluate(const nn::Checkpoint& checkpoint, const RunConfig& cfg, const Experiment& exp,
                    SplitLabel partition);

MetricsRow metrics_row(const RunConfig& cfg, const EvalReport& r, std::string seed_label = {});

struct TrialRow {
  std::size_t trial = 0;
  double lr = 0.0;
  double weight_decay = 0.0;
  std::size_t hidden_dim = 0;
  double val_f1 = 0.0;
  EvalReport test;
};

/// Draws `trials` configurations (log-uniform lr and weight decay, uniform
/// hidden size) and trains each. Sorted by validation F1, best first.
std::vector<TrialRow> sample_trials(std::size_t trials, std::uint64_t seed);
std::vector<TrialRow> hyperparam_search(const RunConfig& base, std::size_t trials,
                                        std::uint64_t seed);
void write_trial_table(const std::filesystem::path& path, std::span<const TrialRow> rows);

struct AblationRow {
  GraphVariant variant = GraphVariant::STExpanded;
  ModelKind model = ModelKind::SageCP;
  std::size_t message_st_edges = 0;
  EvalReport test;
};

/// For each variant: derive, re-split with the same seed, train SageCP and SageEmbs.
std::vector<AblationRow> run_ablation(const RunConfig& base, std::span<const GraphVariant> variants);
void write_ablation_table(const std::filesystem::path& path, const RunConfig& base,
                          std::span<const AblationRow> rows);

struct SuiteResult {
  std::vector<MetricsRow> runs;
  MetricsRow mean;
  MetricsRow std;  // sample standard deviation
  std::vector<MetricsRow> table() const;  // runs, then mean and std
};

/// `repeats` runs with run seeds seed, seed+1, ...; everything else fixed.
SuiteResult run_suite(const RunConfig& base, std::size_t repeats = 5);

/// Split leakage report plus the per-batch cold-node audit over every
/// partition's batches.
struct AuditReport {
  LeakageReport leakage;
  std::array<std::size_t, 3> batch_violations{0, 0, 0};
  std::size_t total() const {
    return leakage.total() + batch_violations[0] + batch_violations[1] + batch_violations[2];
  }
};
AuditReport run_audit(const RunConfig& cfg, const Experiment& exp);

}  // namespace linkbench
