#include "linkbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "csv.hpp"
#include "linkbench/error.hpp"

namespace linkbench {

std::size_t ScoredEdges::num_positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

void ScoredEdges::validate() const {
  if (scores.size() != labels.size() || (!edges.empty() && edges.size() != scores.size())) {
    fail(ErrorCode::LengthMismatch, fmt::format("{} edges, {} scores, {} labels", edges.size(),
                                                scores.size(), labels.size()));
  }
  for (double s : scores)
    if (!std::isfinite(s)) fail(ErrorCode::NonFinite, "non-finite score");
  for (auto l : labels)
    if (l > 1) fail(ErrorCode::ConfigInvalid, "labels must be 0 or 1");
}

namespace {

double f1_from(std::size_t tp, std::size_t fp, std::size_t fn) {
  if (tp == 0) return 0.0;
  const double t = static_cast<double>(tp);
  return 2.0 * t / (2.0 * t + static_cast<double>(fp) + static_cast<double>(fn));
}

/// Indices sorted by score descending, negatives before positives on ties,
/// then by index for a total order.
std::vector<std::size_t> pessimistic_order(std::span<const double> scores,
                                           std::span<const std::uint8_t> labels) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (labels[a] != labels[b]) return labels[a] < labels[b];
    return a < b;
  });
  return idx;
}

}  // namespace

double best_threshold(const ScoredEdges& s) {
  s.validate();
  const std::size_t pos = s.num_positives();
  if (pos == 0 || pos == s.labels.size()) {
    fail(ErrorCode::DegenerateLabels, "threshold selection needs positives and negatives");
  }
  std::vector<std::size_t> idx(s.scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return s.scores[a] > s.scores[b]; });

  std::vector<double> candidates{1.0};
  for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
    const double a = s.scores[idx[i]], b = s.scores[idx[i + 1]];
    if (a != b) candidates.push_back(0.5 * (a + b));
  }
  candidates.push_back(0.0);
  std::stable_sort(candidates.begin(), candidates.end(), std::greater<>());

  double best_t = candidates.front();
  double best_f1 = -1.0;
  std::size_t tp = 0, fp = 0, cursor = 0;
  for (double t : candidates) {
    while (cursor < idx.size() && s.scores[idx[cursor]] >= t) {
      (s.labels[idx[cursor]] ? tp : fp)++;
      ++cursor;
    }
    const double f1 = f1_from(tp, fp, pos - tp);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_t = t;
    }
  }
  return best_t;
}

double f1_at_threshold(const ScoredEdges& s, double threshold) {
  s.validate();
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    const bool pred = s.scores[i] >= threshold;
    if (pred && s.labels[i]) ++tp;
    else if (pred) ++fp;
    else if (s.labels[i]) ++fn;
  }
  return f1_from(tp, fp, fn);
}

double hits_at_k(const ScoredEdges& s, std::size_t k) {
  s.validate();
  if (k == 0) fail(ErrorCode::ConfigInvalid, "k must be positive");
  std::vector<double> neg, pos;
  for (std::size_t i = 0; i < s.scores.size(); ++i) (s.labels[i] ? pos : neg).push_back(s.scores[i]);
  if (neg.size() < k) {
    fail(ErrorCode::InsufficientNegatives, fmt::format("k = {} but only {} negatives", k, neg.size()));
  }
  if (pos.empty()) return 0.0;
  std::nth_element(neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(k - 1), neg.end(),
                   std::greater<>());
  const double kth = neg[k - 1];
  const auto hits = std::count_if(pos.begin(), pos.end(), [kth](double p) { return p > kth; });
  return static_cast<double>(hits) / static_cast<double>(pos.size());
}

double precision_at_k(const ScoredEdges& s, std::size_t k) {
  s.validate();
  if (k == 0) fail(ErrorCode::ConfigInvalid, "k must be positive");
  if (s.scores.size() < k) {
    fail(ErrorCode::TooFewEdges, fmt::format("k = {} but only {} scored edges", k, s.scores.size()));
  }
  const auto order = pessimistic_order(s.scores, s.labels);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) hits += s.labels[order[i]];
  return static_cast<double>(hits) / static_cast<double>(k);
}

std::vector<NodeAp> per_node_average_precision(const ScoredEdges& s,
                                               const std::vector<bool>& source_seen,
                                               const std::vector<bool>& target_seen) {
  s.validate();
  if (s.edges.size() != s.scores.size()) {
    fail(ErrorCode::LengthMismatch, "per-node AP needs edge endpoints");
  }
  std::vector<NodeAp> out;
  for (Role role : {Role::Source, Role::Target}) {
    const auto& seen = role == Role::Source ? source_seen : target_seen;
    // Group incident edge indices by endpoint.
    std::vector<std::pair<std::uint32_t, std::size_t>> inc;
    inc.reserve(s.edges.size());
    for (std::size_t i = 0; i < s.edges.size(); ++i)
      inc.emplace_back(role == Role::Source ? s.edges[i].u : s.edges[i].v, i);
    std::sort(inc.begin(), inc.end());

    std::vector<double> sc;
    std::vector<std::uint8_t> lb;
    for (std::size_t lo = 0; lo < inc.size();) {
      std::size_t hi = lo;
      while (hi < inc.size() && inc[hi].first == inc[lo].first) ++hi;
      sc.clear();
      lb.clear();
      for (std::size_t j = lo; j < hi; ++j) {
        sc.push_back(s.scores[inc[j].second]);
        lb.push_back(s.labels[inc[j].second]);
      }
      const auto order = pessimistic_order(sc, lb);
      std::size_t found = 0;
      double sum = 0.0;
      for (std::size_t r = 0; r < order.size(); ++r) {
        if (!lb[order[r]]) continue;
        ++found;
        sum += static_cast<double>(found) / static_cast<double>(r + 1);
      }
      if (found > 0) {
        const auto node = inc[lo].first;
        out.push_back({role, node, sum / static_cast<double>(found), found,
                       node < seen.size() && seen[node]});
      }
      lo = hi;
    }
  }
  return out;
}

std::vector<ApHistogramRow> seen_unseen_report(std::span<const NodeAp> aps) {
  std::vector<ApHistogramRow> rows;
  for (Role role : {Role::Source, Role::Target})
    for (bool seen : {false, true})
      for (std::size_t b = 0; b < 10; ++b) rows.push_back({role, seen, b, 0});
  for (const auto& a : aps) {
    const auto bin = std::min<std::size_t>(9, static_cast<std::size_t>(std::floor(a.ap * 10.0)));
    const std::size_t stratum = (a.role == Role::Source ? 0 : 2) + (a.seen ? 1 : 0);
    rows[stratum * 10 + bin].count++;
  }
  return rows;
}

std::size_t resolve_k(std::size_t k, const ScoredEdges& s) {
  if (k != 0) return k;
  return std::max<std::size_t>(1, s.scores.size() / 100);
}

EvalReport evaluate_scored(const ScoredEdges& s, double threshold, std::size_t k,
                           const std::vector<bool>& source_seen,
                           const std::vector<bool>& target_seen) {
  EvalReport r;
  r.k = resolve_k(k, s);
  r.threshold = threshold;
  r.num_positives = s.num_positives();
  r.num_negatives = s.num_negatives();
  r.f1 = f1_at_threshold(s, threshold);
  r.hits_at_k = hits_at_k(s, r.k);
  r.precision_at_k = precision_at_k(s, r.k);
  r.node_ap = per_node_average_precision(s, source_seen, target_seen);
  return r;
}

void write_metrics_table(std::ostream& out, std::span<const MetricsRow> rows) {
  out << "split,model,seed,f1,hits_at_k,precision_at_k,threshold\n";
  for (const auto& r : rows) {
    fmt::print(out, "{},{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", r.split, r.model, r.seed, r.f1,
               r.hits_at_k, r.precision_at_k, r.threshold);
  }
}

void write_metrics_table(const std::filesystem::path& path, std::span<const MetricsRow> rows) {
  auto out = detail::open_for_write(path);
  write_metrics_table(out, rows);
}

void write_node_ap_table(const std::filesystem::path& path, const HeteroGraph& g,
                         std::span<const NodeAp> aps) {
  auto out = detail::open_for_write(path);
  out << "role,node_id,seen,ap,num_positives\n";
  for (const auto& a : aps) {
    fmt::print(out, "{},{},{},{:.6f},{}\n", to_string(a.role), g.table(a.role).id(a.node),
               a.seen ? 1 : 0, a.ap, a.num_positives);
  }
}

void write_ap_histogram(const std::filesystem::path& path, std::span<const ApHistogramRow> rows) {
  auto out = detail::open_for_write(path);
  out << "role,seen,bin_lo,bin_hi,count\n";
  for (const auto& r : rows) {
    fmt::print(out, "{},{},{:.1f},{:.1f},{}\n", to_string(r.role), r.seen ? 1 : 0,
               static_cast<double>(r.bin) / 10.0, static_cast<double>(r.bin + 1) / 10.0, r.count);
  }
}

}  // namespace linkbench
