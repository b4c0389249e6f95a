#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "fixtures.hpp"
#include "linkbench/metrics.hpp"
#include "linkbench/random.hpp"
#include "oracles.hpp"

using namespace linkbench;
using fixture::error_code;

namespace {

ScoredEdges scored(std::vector<double> scores, std::vector<std::uint8_t> labels) {
  ScoredEdges s;
  s.scores = std::move(scores);
  s.labels = std::move(labels);
  return s;
}

/// Positives first, then negatives.
ScoredEdges pos_neg(const std::vector<double>& pos, const std::vector<double>& neg) {
  ScoredEdges s;
  for (double p : pos) {
    s.scores.push_back(p);
    s.labels.push_back(1);
  }
  for (double n : neg) {
    s.scores.push_back(n);
    s.labels.push_back(0);
  }
  return s;
}

/// Scores drawn from a small grid so ties are frequent.
ScoredEdges random_tied(Rng& rng, std::size_t n, std::size_t grid) {
  ScoredEdges s;
  for (std::size_t i = 0; i < n; ++i) {
    s.scores.push_back(static_cast<double>(uniform_index(rng, grid)) / static_cast<double>(grid));
    s.labels.push_back(uniform_index(rng, 3) == 0 ? 1 : 0);
  }
  s.labels[0] = 1;
  s.labels[1] = 0;
  return s;
}

}  // namespace

TEST(Metrics, ThresholdSeparatesCleanScores) {
  const auto s = scored({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0});
  EXPECT_DOUBLE_EQ(best_threshold(s), 0.5);
  EXPECT_DOUBLE_EQ(f1_at_threshold(s, best_threshold(s)), 1.0);
  EXPECT_EQ(error_code([] { best_threshold(scored({0.1, 0.2}, {1, 1})); }),
            ErrorCode::DegenerateLabels);
  EXPECT_EQ(error_code([] { best_threshold(scored({0.1, 0.2}, {0, 0})); }),
            ErrorCode::DegenerateLabels);
}

TEST(Metrics, F1Counts) {
  // 2 TP, 1 FP, 1 FN.
  const auto s = scored({0.9, 0.8, 0.7, 0.1}, {1, 1, 0, 1});
  EXPECT_DOUBLE_EQ(f1_at_threshold(s, 0.5), 2.0 / 3.0);
  EXPECT_EQ(f1_at_threshold(s, 0.95), 0.0);
}

TEST(Metrics, ThresholdTieGoesToLargerCandidate) {
  const auto s = scored({0.8, 0.6, 0.4, 0.2}, {1, 0, 1, 0});
  // Cut above 0.6: P=1, R=1/2 -> 2/3. Cut above 0.2: P=2/3, R=1 -> 4/5.
  EXPECT_DOUBLE_EQ(best_threshold(s), 0.3);
  const auto eq = scored({0.8, 0.6, 0.4, 0.2, 0.1}, {1, 0, 0, 1, 0});
  // Cuts at 0.7 and 0.15 both give 2/3; the larger threshold wins.
  EXPECT_DOUBLE_EQ(best_threshold(eq), 0.7);
}

TEST(Metrics, HitsWorkedExample) {
  const auto s = pos_neg({0.9, 0.5}, {0.8, 0.7, 0.6});
  EXPECT_DOUBLE_EQ(hits_at_k(s, 2), 0.5);
  EXPECT_DOUBLE_EQ(hits_at_k(s, 3), 0.5);
  EXPECT_DOUBLE_EQ(hits_at_k(s, 1), 0.5);
  // Equal to the k-th negative is not a hit.
  EXPECT_DOUBLE_EQ(hits_at_k(pos_neg({0.7}, {0.8, 0.7, 0.6}), 2), 0.0);
  EXPECT_EQ(error_code([&] { hits_at_k(s, 4); }), ErrorCode::InsufficientNegatives);
  EXPECT_EQ(error_code([&] { hits_at_k(s, 0); }), ErrorCode::ConfigInvalid);
}

TEST(Metrics, PrecisionWorkedExamples) {
  std::vector<double> pos{0.99, 0.98, 0.97};
  std::vector<double> neg;
  for (int i = 0; i < 7; ++i) neg.push_back(0.9 - 0.01 * i);
  for (int i = 0; i < 20; ++i) {
    pos.push_back(0.1);
    neg.push_back(0.05);
  }
  EXPECT_DOUBLE_EQ(precision_at_k(pos_neg(pos, neg), 10), 0.3);

  // A constant model ranks every negative first.
  const auto flat = pos_neg(std::vector<double>(5, 0.5), std::vector<double>(8, 0.5));
  EXPECT_DOUBLE_EQ(precision_at_k(flat, 10), 2.0 / 10.0);
  EXPECT_DOUBLE_EQ(precision_at_k(flat, 8), 0.0);
  EXPECT_EQ(error_code([&] { precision_at_k(flat, 14); }), ErrorCode::TooFewEdges);
}

TEST(Metrics, AveragePrecisionWorkedExample) {
  ScoredEdges s = scored({0.9, 0.8, 0.7}, {1, 0, 1});
  s.edges = {{0, 0}, {0, 1}, {0, 2}};
  const auto aps = per_node_average_precision(s);
  const auto src = std::find_if(aps.begin(), aps.end(),
                                [](const NodeAp& a) { return a.role == Role::Source; });
  ASSERT_NE(src, aps.end());
  EXPECT_NEAR(src->ap, 5.0 / 6.0, 1e-15);
  EXPECT_EQ(src->num_positives, 2u);
  // Each target has one incident edge; only the two positive ones are reported with AP 1.
  std::size_t targets = 0;
  for (const auto& a : aps)
    if (a.role == Role::Target) {
      ++targets;
      EXPECT_EQ(a.ap, 1.0);
    }
  EXPECT_EQ(targets, 2u);
}

TEST(Metrics, SinglePositiveRankedLast) {
  ScoredEdges s = scored({0.9, 0.8, 0.7, 0.6, 0.1}, {0, 0, 0, 0, 1});
  for (std::uint32_t t = 0; t < 5; ++t) s.edges.push_back({3, t});
  const auto aps = per_node_average_precision(s);
  ASSERT_FALSE(aps.empty());
  EXPECT_EQ(aps.front().role, Role::Source);
  EXPECT_EQ(aps.front().node, 3u);
  EXPECT_DOUBLE_EQ(aps.front().ap, 1.0 / 5.0);
}

TEST(Metrics, HistogramBinsAndStrata) {
  ScoredEdges s = scored({0.9, 0.8, 0.7, 0.2}, {1, 0, 1, 1});
  s.edges = {{0, 0}, {0, 1}, {1, 1}, {1, 2}};
  const auto aps = per_node_average_precision(s, {true, false});
  const auto rows = seen_unseen_report(aps);
  ASSERT_EQ(rows.size(), 40u);
  std::size_t total = 0;
  std::map<std::pair<int, bool>, std::size_t> per_stratum;
  for (const auto& r : rows) {
    total += r.count;
    per_stratum[{static_cast<int>(r.role), r.seen}] += r.count;
  }
  EXPECT_EQ(total, aps.size());
  // Source 0 has AP 1 and is seen; the top bin is closed on the right.
  const auto top = std::find_if(rows.begin(), rows.end(), [](const ApHistogramRow& r) {
    return r.role == Role::Source && r.seen && r.bin == 9;
  });
  ASSERT_NE(top, rows.end());
  EXPECT_EQ(top->count, 1u);
  // No target was marked seen.
  EXPECT_EQ((per_stratum[{static_cast<int>(Role::Target), true}]), 0u);
}

TEST(Metrics, AllUnseenLeavesSeenStratumEmpty) {
  ScoredEdges s = scored({0.9, 0.1, 0.3}, {1, 0, 1});
  s.edges = {{0, 0}, {1, 0}, {2, 1}};
  const auto rows = seen_unseen_report(per_node_average_precision(s));
  for (const auto& r : rows)
    if (r.seen) {
      EXPECT_EQ(r.count, 0u);
    }
}

TEST(Metrics, MatchesOraclesOnTieHeavyScores) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = random_tied(rng, 20 + uniform_index(rng, 60), 2 + uniform_index(rng, 8));
    const std::size_t neg = s.num_negatives();
    for (std::size_t k : {std::size_t{1}, std::size_t{3}, neg}) {
      EXPECT_DOUBLE_EQ(hits_at_k(s, k), oracle::hits_at_k(s, k)) << trial;
      EXPECT_DOUBLE_EQ(precision_at_k(s, k), oracle::precision_at_k(s, k)) << trial;
    }
    EXPECT_DOUBLE_EQ(f1_at_threshold(s, best_threshold(s)), oracle::best_f1(s)) << trial;

    // Per-node AP against the pairwise oracle for a single node holding every edge.
    s.edges.assign(s.scores.size(), {});
    for (std::uint32_t i = 0; i < s.edges.size(); ++i) s.edges[i] = {0, i};
    const auto aps = per_node_average_precision(s);
    EXPECT_NEAR(aps.front().ap, oracle::average_precision(s.scores, s.labels), 1e-12) << trial;
  }
}

TEST(Metrics, InvariantUnderMonotoneTransform) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = random_tied(rng, 50, 6);
    auto t = s;
    for (auto& x : t.scores) x = 1.0 / (1.0 + std::exp(-3.0 * x + 1.0));
    EXPECT_EQ(hits_at_k(s, 2), hits_at_k(t, 2));
    EXPECT_EQ(precision_at_k(s, 5), precision_at_k(t, 5));
    EXPECT_EQ(f1_at_threshold(s, best_threshold(s)), f1_at_threshold(t, best_threshold(t)));
  }
}

TEST(Metrics, ValidationErrors) {
  EXPECT_EQ(error_code([] { scored({0.1}, {1, 0}).validate(); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(error_code([] { scored({std::nan("")}, {1}).validate(); }), ErrorCode::NonFinite);
}

TEST(Metrics, ResolveK) {
  EXPECT_EQ(resolve_k(500, scored({}, {})), 500u);
  EXPECT_EQ(resolve_k(0, scored(std::vector<double>(50, 0.0), std::vector<std::uint8_t>(50, 0))), 1u);
  EXPECT_EQ(resolve_k(0, scored(std::vector<double>(1100, 0.0), std::vector<std::uint8_t>(1100, 0))),
            11u);
}

TEST(Metrics, WritersProduceHeaders) {
  const auto dir = fixture::temp_dir("metrics_writers");
  const std::vector<MetricsRow> rows{{"random", "gin_cp", "1", 0.5, 0.25, 0.125, 0.5}};
  std::ostringstream os;
  write_metrics_table(os, rows);
  EXPECT_EQ(os.str(),
            "split,model,seed,f1,hits_at_k,precision_at_k,threshold\n"
            "random,gin_cp,1,0.500000,0.250000,0.125000,0.500000\n");

  auto g = fixture::graph(2, 2, {}, {{0, 0}, {1, 1}}, {});
  ScoredEdges s = scored({0.9, 0.1}, {1, 0});
  s.edges = {{0, 0}, {1, 0}};
  const auto aps = per_node_average_precision(s);
  write_node_ap_table(dir / "ap.csv", g, aps);
  write_ap_histogram(dir / "hist.csv", seen_unseen_report(aps));
  const auto ap = fixture::read_file(dir / "ap.csv");
  EXPECT_EQ(ap.substr(0, ap.find('\n')), "role,node_id,seen,ap,num_positives");
  EXPECT_NE(ap.find("source,s0,0,1.000000,1"), std::string::npos);
  const auto hist = fixture::read_file(dir / "hist.csv");
  EXPECT_EQ(hist.substr(0, hist.find('\n')), "role,seen,bin_lo,bin_hi,count");
  EXPECT_EQ(std::count(hist.begin(), hist.end(), '\n'), 41);
}
