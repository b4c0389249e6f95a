#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace oracle {

using linkbench::ScoredEdges;

double hits_at_k(const ScoredEdges& s, std::size_t k) {
  std::size_t pos = 0, hits = 0;
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    if (!s.labels[i]) continue;
    ++pos;
    std::size_t above = 0;
    for (std::size_t j = 0; j < s.scores.size(); ++j)
      if (!s.labels[j] && s.scores[j] >= s.scores[i]) ++above;
    if (above < k) ++hits;
  }
  return pos == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(pos);
}

double precision_at_k(const ScoredEdges& s, std::size_t k) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    if (!s.labels[i]) continue;
    std::size_t rank = 0;
    for (std::size_t j = 0; j < s.scores.size(); ++j) {
      if (j == i) continue;
      if (s.scores[j] > s.scores[i]) ++rank;
      else if (s.scores[j] == s.scores[i] && (s.labels[j] == 0 || j < i)) ++rank;
    }
    if (rank < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

double best_f1(const ScoredEdges& s) {
  std::set<double> cuts(s.scores.begin(), s.scores.end());
  double best = 0.0;
  for (double c : cuts) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < s.scores.size(); ++i) {
      const bool pred = s.scores[i] >= c;
      tp += pred && s.labels[i];
      fp += pred && !s.labels[i];
      fn += !pred && s.labels[i];
    }
    const double f1 = tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
    best = std::max(best, f1);
  }
  return best;
}

double average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  // rank(i) = 1 + number of items placed before i (ties: negatives first).
  auto before = [&](std::size_t j, std::size_t i) {
    if (scores[j] != scores[i]) return scores[j] > scores[i];
    if (labels[j] != labels[i]) return labels[j] < labels[i];
    return j < i;
  };
  double sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    ++pos;
    std::size_t rank = 1, pos_at_or_above = 1;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (j == i || !before(j, i)) continue;
      ++rank;
      pos_at_or_above += labels[j];
    }
    sum += static_cast<double>(pos_at_or_above) / static_cast<double>(rank);
  }
  return pos == 0 ? 0.0 : sum / static_cast<double>(pos);
}

std::vector<std::vector<std::uint32_t>> all_pairs_hops(const linkbench::HeteroGraph& g,
                                                       const linkbench::MessageEdges& msg) {
  using linkbench::Relation;
  constexpr auto inf = std::numeric_limits<std::uint32_t>::max();
  const std::size_t n = g.num_nodes();
  const auto ns = static_cast<std::uint32_t>(g.sources().size());
  std::vector<std::vector<std::uint32_t>> d(n, std::vector<std::uint32_t>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  auto link = [&](std::uint32_t a, std::uint32_t b) { d[a][b] = d[b][a] = 1; };
  for (const auto& e : msg.ss) link(e.u, e.v);
  for (const auto& e : msg.st) link(e.u, ns + e.v);
  for (const auto& e : msg.tt) link(ns + e.u, ns + e.v);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] != inf && d[k][j] != inf && d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

std::array<std::size_t, 3> floor_counts(std::size_t n, const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> c{};
  // Largest m with m <= r * n, found by stepping; the remainder goes to slot 0.
  for (std::size_t p = 1; p < 3; ++p) {
    std::size_t m = 0;
    while (static_cast<double>(m + 1) <= ratios[p] * static_cast<double>(n) + 1e-9) ++m;
    c[p] = m;
  }
  c[0] = n - c[1] - c[2];
  return c;
}

}  // namespace oracle
