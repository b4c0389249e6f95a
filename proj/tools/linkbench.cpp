// Command-line front end: synth, split, train, evaluate, search, ablate,
// suite and audit.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "linkbench/error.hpp"
#include "linkbench/harness.hpp"
#include "linkbench/ingest.hpp"
#include "linkbench/split.hpp"

namespace lb = linkbench;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string variant;
  std::string split;
  std::string model;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> k;
  std::string out;
  std::optional<std::size_t> threads;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON run configuration");
    app->add_option("--seed", seed, "run seed");
    app->add_option("--variant", variant, "bipartite | s_expanded | t_expanded | st_expanded");
    app->add_option("--split", split, "random | cold_source | cold_target");
    app->add_option("--model", model,
                    "sage_cp | gin_cp | gatv2_cp | sage_embs | mlp | bilinear | shortest_path");
    app->add_option("--epochs", epochs, "training epochs");
    app->add_option("--k", k, "rank cutoff for Hits@k and Precision@k (0: 1% of test edges)");
    app->add_option("--out", out, "output directory");
    app->add_option("--threads", threads, "parallel workers for search/suite/ablate");
  }

  lb::RunConfig resolve() const {
    lb::RunConfig c = config.empty() ? lb::RunConfig{} : lb::load_run_config(config);
    if (seed) c.seed = *seed;
    if (!variant.empty()) c.variant = lb::parse_variant(variant);
    if (!split.empty()) c.split.mode = lb::parse_split_mode(split);
    if (!model.empty()) c.model.kind = lb::parse_model_kind(model);
    if (epochs) c.epochs = *epochs;
    if (k) c.k = *k;
    if (!out.empty()) c.out_dir = out;
    if (threads) c.threads = *threads;
    c.validate();
    return c;
  }
};

void print_report(const char* label, const lb::EvalReport& r) {
  fmt::print("{:<5} f1 {:.6f}  hits@{} {:.6f}  precision@{} {:.6f}  threshold {:.6f}\n", label, r.f1,
             r.k, r.hits_at_k, r.k, r.precision_at_k, r.threshold);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"linkbench: link prediction benchmark on source/target graphs"};
  app.require_subcommand(1);
  Overrides o;

  auto* synth = app.add_subcommand("synth", "write a synthetic planted-block dataset");
  o.attach(synth);

  auto* split = app.add_subcommand("split", "write a split manifest");
  o.attach(split);

  auto* train = app.add_subcommand("train", "train one model and report test metrics");
  o.attach(train);

  auto* evaluate = app.add_subcommand("evaluate", "score a partition from a checkpoint");
  o.attach(evaluate);
  std::string checkpoint;
  std::string partition = "test";
  evaluate->add_option("--checkpoint", checkpoint, "checkpoint written by train");
  evaluate->add_option("--partition", partition, "train | val | test");

  auto* search = app.add_subcommand("search", "random hyperparameter search");
  o.attach(search);
  std::size_t trials = 10;
  std::uint64_t search_seed = 0;
  search->add_option("--trials", trials, "number of sampled configurations");
  search->add_option("--search-seed", search_seed, "seed for the sampled configurations");

  auto* ablate = app.add_subcommand("ablate", "compare graph variants with feature and embedding models");
  o.attach(ablate);
  std::vector<std::string> variants{"bipartite", "s_expanded", "t_expanded", "st_expanded"};
  ablate->add_option("--variants", variants, "variants to compare");

  auto* suite = app.add_subcommand("suite", "repeat a run over consecutive seeds");
  o.attach(suite);
  std::size_t repeats = 5;
  suite->add_option("--repeats", repeats, "number of runs");

  auto* audit = app.add_subcommand("audit", "run the leakage checks only");
  o.attach(audit);

  CLI11_PARSE(app, argc, argv);

  try {
    const lb::RunConfig cfg = o.resolve();

    if (synth->parsed()) {
      if (cfg.out_dir.empty()) throw CLI::RequiredError("--out");
      const auto ds = lb::synth_generate(cfg.synth);
      const auto m = lb::write_synth_dataset(cfg.out_dir, ds);
      fmt::print("wrote {} sources, {} targets to {}\n", ds.sources.size(), ds.targets.size(),
                 cfg.out_dir.string());
      fmt::print("edges: {}\n", m.edges_path.string());
    } else if (split->parsed()) {
      if (cfg.out_dir.empty()) throw CLI::RequiredError("--out");
      const auto exp = lb::prepare(cfg);
      lb::write_split_manifest(cfg.out_dir / "split.csv", exp.graph, exp.split);
      for (auto p : lb::kAllPartitions) {
        fmt::print("{:<5} supervision {}\n", lb::to_string(p), exp.split.supervision_of(p).size());
      }
    } else if (train->parsed()) {
      const auto r = lb::train(cfg);
      print_report("val", r.val);
      print_report("test", r.test);
      if (!r.loss_curve.empty()) {
        fmt::print("loss first {:.6f} last {:.6f}  best epoch {}\n", r.loss_curve.front(),
                   r.loss_curve.back(), r.best_epoch);
      }
    } else if (evaluate->parsed()) {
      const auto exp = lb::prepare(cfg);
      const auto p = lb::parse_split_label(partition);
      if (checkpoint.empty() && cfg.model.kind != lb::ModelKind::ShortestPath) {
        throw CLI::RequiredError("--checkpoint");
      }
      const auto r = lb::evaluate(std::filesystem::path(checkpoint), cfg, exp, p);
      print_report(std::string(lb::to_string(p)).c_str(), r);
      if (!cfg.out_dir.empty()) {
        const auto row = lb::metrics_row(cfg, r);
        lb::write_metrics_table(cfg.out_dir / "metrics.csv", std::span(&row, 1));
        lb::write_node_ap_table(cfg.out_dir / "node_ap.csv", exp.graph, r.node_ap);
        const auto hist = lb::seen_unseen_report(r.node_ap);
        lb::write_ap_histogram(cfg.out_dir / "ap_histogram.csv", hist);
      }
    } else if (search->parsed()) {
      const auto rows = lb::hyperparam_search(cfg, trials, search_seed);
      lb::write_trial_table(cfg.out_dir.empty() ? "/dev/stdout" : cfg.out_dir / "search.csv", rows);
    } else if (ablate->parsed()) {
      std::vector<lb::GraphVariant> vs;
      for (const auto& v : variants) vs.push_back(lb::parse_variant(v));
      const auto rows = lb::run_ablation(cfg, vs);
      lb::write_ablation_table(cfg.out_dir.empty() ? "/dev/stdout" : cfg.out_dir / "ablation.csv",
                               cfg, rows);
    } else if (suite->parsed()) {
      const auto s = lb::run_suite(cfg, repeats);
      const auto rows = s.table();
      lb::write_metrics_table(std::cout, rows);
    } else if (audit->parsed()) {
      const auto exp = lb::prepare(cfg);
      const auto a = lb::run_audit(cfg, exp);
      const auto& l = a.leakage;
      fmt::print("supervision_overlap {}\nsupervision_missing {}\ncold_node_in_train {}\n"
                 "cold_node_cross_partition {}\neval_edge_in_message {}\n",
                 l.supervision_overlap, l.supervision_missing, l.cold_node_in_train,
                 l.cold_node_cross_partition, l.eval_edge_in_message);
      fmt::print("batch_violations train {} val {} test {}\n", a.batch_violations[0],
                 a.batch_violations[1], a.batch_violations[2]);
      fmt::print("{}\n", a.total() == 0 ? "OK" : "LEAKAGE");
      return a.total() == 0 ? 0 : 1;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const lb::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
