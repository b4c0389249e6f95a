#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "linkbench/graph.hpp"

namespace linkbench {

enum class SplitMode : std::uint8_t { Random, ColdSource, ColdTarget };

/// Ordered: when an edge joins nodes with different labels it takes the larger
/// ("most conservative") one.
enum class SplitLabel : std::uint8_t { Train = 0, Val = 1, Test = 2 };

inline constexpr std::array<SplitLabel, 3> kAllPartitions = {SplitLabel::Train, SplitLabel::Val,
                                                             SplitLabel::Test};

std::string_view to_string(SplitMode m);
std::string_view to_string(SplitLabel l);
SplitMode parse_split_mode(std::string_view s);  // random | cold_source | cold_target
SplitLabel parse_split_label(std::string_view s);

inline std::size_t index_of(SplitLabel l) { return static_cast<std::size_t>(l); }

struct SplitSpec {
  SplitMode mode = SplitMode::Random;
  std::array<double, 3> ratios{0.7, 0.1, 0.2};
  std::uint64_t seed = 0;
  /// Cold modes: also expose Val-labeled cold-relation edges when evaluating Test.
  bool test_sees_val_edges = false;

  void validate() const;
};

/// Counts for floor allocation of n items; remainder goes to Train.
std::array<std::size_t, 3> allocate_counts(std::size_t n, const std::array<double, 3>& ratios);

struct MessageEdges {
  std::vector<EdgePair> ss;
  std::vector<EdgePair> st;
  std::vector<EdgePair> tt;

  const std::vector<EdgePair>& of(Relation r) const;
  std::vector<EdgePair>& of(Relation r);
  std::size_t size() const { return ss.size() + st.size() + tt.size(); }
};

/// Per-edge labels aligned with the graph's edge lists.
struct EdgeLabels {
  std::vector<SplitLabel> ss;
  std::vector<SplitLabel> st;
  std::vector<SplitLabel> tt;

  const std::vector<SplitLabel>& of(Relation r) const;
  std::vector<SplitLabel>& of(Relation r);
};

struct SplitResult {
  SplitSpec spec;
  std::array<std::vector<EdgePair>, 3> supervision;  // ST edges to score
  std::array<MessageEdges, 3> message;               // edges visible when evaluating
  EdgeLabels edge_labels;
  std::vector<SplitLabel> node_labels;  // cold role only; empty in Random mode
  std::vector<bool> source_seen;        // endpoint of any Train edge
  std::vector<bool> target_seen;

  const std::vector<EdgePair>& supervision_of(SplitLabel p) const {
    return supervision[index_of(p)];
  }
  const MessageEdges& message_of(SplitLabel p) const { return message[index_of(p)]; }
  std::optional<Role> cold_role() const;
  /// Label of a node for audit purposes; Train for non-cold roles.
  SplitLabel label_of(NodeRef n) const;
  const std::vector<bool>& seen(Role r) const {
    return r == Role::Source ? source_seen : target_seen;
  }
};

SplitResult split_random(const HeteroGraph& g, const SplitSpec& spec);
SplitResult split_cold_source(const HeteroGraph& g, const SplitSpec& spec);
SplitResult split_cold_target(const HeteroGraph& g, const SplitSpec& spec);
SplitResult split_graph(const HeteroGraph& g, const SplitSpec& spec);

/// Rebuilds supervision/message sets from labels. All split operations and the
/// manifest reader go through here, so a manifest reproduces a split exactly.
SplitResult assemble_split(const HeteroGraph& g, const SplitSpec& spec, EdgeLabels edge_labels,
                           std::vector<SplitLabel> node_labels);

struct LeakageReport {
  std::size_t supervision_overlap = 0;  // ST edge in more than one supervision set
  std::size_t supervision_missing = 0;  // ST edge in no supervision set, or unknown edge
  std::size_t cold_node_in_train = 0;   // Val/Test cold node on a Train edge
  std::size_t cold_node_cross_partition = 0;  // Test node visible at Val (or vice versa)
  std::size_t eval_edge_in_message = 0;       // Val/Test supervision edge used for messages

  std::size_t total() const {
    return supervision_overlap + supervision_missing + cold_node_in_train +
           cold_node_cross_partition + eval_edge_in_message;
  }
  bool ok() const { return total() == 0; }
};

LeakageReport assert_no_leakage(const HeteroGraph& g, const SplitResult& r);

/// `edge_or_node,identifier,partition` rows. Node identifiers are `s:<id>` or
/// `t:<id>`; edge identifiers are `<rel>:<u_id>|<v_id>`. `meta` rows carry the
/// split mode, seed and ratios.
void write_split_manifest(const std::filesystem::path& path, const HeteroGraph& g,
                          const SplitResult& r);
SplitResult read_split_manifest(const std::filesystem::path& path, const HeteroGraph& g);

}  // namespace linkbench
