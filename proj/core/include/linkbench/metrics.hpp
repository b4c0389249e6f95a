#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "linkbench/graph.hpp"

namespace linkbench {

/// Scored ST pairs with {0,1} labels, all three aligned.
struct ScoredEdges {
  std::vector<EdgePair> edges;
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;

  std::size_t num_positives() const;
  std::size_t num_negatives() const { return labels.size() - num_positives(); }
  /// Raises LengthMismatch or NonFinite.
  void validate() const;
};

/// Threshold maximizing F1 among 0, 1 and midpoints of consecutive distinct
/// scores; ties go to the larger threshold. Raises DegenerateLabels.
double best_threshold(const ScoredEdges& s);

/// F1 of predicting positive when score >= threshold; 0 without true positives.
double f1_at_threshold(const ScoredEdges& s, double threshold);

/// Fraction of positives scoring strictly above the k-th highest negative.
/// Raises InsufficientNegatives.
double hits_at_k(const ScoredEdges& s, std::size_t k = 500);

/// Fraction of positives among the k highest pooled scores, negatives ranked
/// first on ties. Raises TooFewEdges.
double precision_at_k(const ScoredEdges& s, std::size_t k = 500);

struct NodeAp {
  Role role = Role::Source;
  std::uint32_t node = 0;
  double ap = 0.0;
  std::size_t num_positives = 0;
  bool seen = false;
};

/// AP of each endpoint's incident scored edges, per role, skipping nodes with
/// no positive. Ties rank negatives first. Seen flags default to false when
/// the tables are shorter than the node index.
std::vector<NodeAp> per_node_average_precision(const ScoredEdges& s,
                                               const std::vector<bool>& source_seen = {},
                                               const std::vector<bool>& target_seen = {});

struct ApHistogramRow {
  Role role = Role::Source;
  bool seen = false;
  std::size_t bin = 0;  // [bin/10, (bin+1)/10), the last bin closed on the right
  std::size_t count = 0;
};

/// Ten AP bins per (role, seen) stratum; every stratum lists all bins.
std::vector<ApHistogramRow> seen_unseen_report(std::span<const NodeAp> aps);

struct EvalReport {
  double f1 = 0.0;
  double hits_at_k = 0.0;
  double precision_at_k = 0.0;
  double threshold = 0.5;
  std::size_t k = 0;
  std::size_t num_positives = 0;
  std::size_t num_negatives = 0;
  std::vector<NodeAp> node_ap;
};

/// k = 0 means 1% of the scored edges, rounded down, at least 1.
std::size_t resolve_k(std::size_t k, const ScoredEdges& s);

EvalReport evaluate_scored(const ScoredEdges& s, double threshold, std::size_t k,
                           const std::vector<bool>& source_seen = {},
                           const std::vector<bool>& target_seen = {});

struct MetricsRow {
  std::string split;
  std::string model;
  std::string seed;
  double f1 = 0.0;
  double hits_at_k = 0.0;
  double precision_at_k = 0.0;
  double threshold = 0.0;
};

/// `split,model,seed,f1,hits_at_k,precision_at_k,threshold`, fixed 6 decimals.
void write_metrics_table(std::ostream& out, std::span<const MetricsRow> rows);
void write_metrics_table(const std::filesystem::path& path, std::span<const MetricsRow> rows);

/// `role,node_id,seen,ap,num_positives`.
void write_node_ap_table(const std::filesystem::path& path, const HeteroGraph& g,
                         std::span<const NodeAp> aps);
/// `role,seen,bin_lo,bin_hi,count`.
void write_ap_histogram(const std::filesystem::path& path, std::span<const ApHistogramRow> rows);

}  // namespace linkbench
