#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "linkbench/graph.hpp"
#include "linkbench/optim.hpp"
#include "linkbench/sampling.hpp"
#include "linkbench/split.hpp"
#include "linkbench/tensor.hpp"

namespace linkbench {

enum class ConvKind : std::uint8_t { SAGE, GIN, GATv2 };

/// Model roster. The first three are feature-projected encoders, SageEmbs
/// replaces projected features with a learned table per node.
enum class ModelKind : std::uint8_t { SageCP, GinCP, Gatv2CP, SageEmbs, Mlp, Bilinear, ShortestPath };

std::string_view to_string(ConvKind k);
std::string_view to_string(ModelKind k);  // sage_cp, gin_cp, gatv2_cp, sage_embs, mlp, bilinear, shortest_path
ModelKind parse_model_kind(std::string_view s);

struct EncoderConfig {
  ConvKind conv_kind = ConvKind::GIN;
  std::size_t hidden_dim = 128;
  bool use_cp_features = true;
  std::size_t gatv2_heads = 1;
  double gin_eps = 0.0;

  /// hidden_dim must be 64, 128 or 256 unless `allow_any_dim` (tests use tiny
  /// encoders).
  void validate(bool allow_any_dim = false) const;
};

struct ModelConfig {
  ModelKind kind = ModelKind::GinCP;
  std::size_t hidden_dim = 128;
  std::size_t gatv2_heads = 1;
  double gin_eps = 0.0;

  bool is_gnn() const;
  std::optional<EncoderConfig> encoder() const;
  void validate(bool allow_any_dim = false) const;
};

bool supports_split(ModelKind k, SplitMode m);
/// Raises ColdSplitUnsupported for models that cannot score unseen nodes.
void require_split_support(ModelKind k, SplitMode m);

/// Neighbor lists of a subgraph as segments over its local node indices.
nn::Segments neighbor_segments(const Subgraph& sg);

/// Registers E_s/E_t (or the embedding tables) and both conv layers.
void init_encoder_params(nn::ParamStore& ps, const EncoderConfig& cfg, std::size_t source_dim,
                         std::size_t target_dim, std::size_t num_sources,
                         std::size_t num_targets, Rng& rng);

/// h0 for every local node of `sg`: x_s E_s for sources, x_t E_t for targets,
/// or the embedding-table row. Raises DimensionMismatch.
nn::Var project_inputs(nn::Tape& tape, nn::ParamStore& ps, const EncoderConfig& cfg,
                       const Subgraph& sg, const Matrix& source_features,
                       const Matrix& target_features);

/// W_self h_v + W_neigh mean(h_u) + b. `layer` prefixes parameter names.
nn::Var sage_conv(nn::Tape& tape, nn::Var h, const nn::Segments& nbrs, nn::ParamStore& ps,
                  const std::string& layer);
/// MLP((1 + eps) h_v + sum(h_u)), MLP = Linear, ReLU, Linear.
nn::Var gin_conv(nn::Tape& tape, nn::Var h, const nn::Segments& nbrs, nn::ParamStore& ps,
                 const std::string& layer, double eps);
/// Dynamic attention over N(v) plus a self loop; heads are concatenated and
/// mixed back to the hidden size when there is more than one.
nn::Var gatv2_conv(nn::Tape& tape, nn::Var h, const nn::Segments& nbrs, nn::ParamStore& ps,
                   const std::string& layer, std::size_t heads);

/// z = h1 + h2 with h1 = norm(leaky_relu(conv1(h0))) and h2 = norm(conv2(h1)).
nn::Var encode(nn::Tape& tape, nn::ParamStore& ps, const EncoderConfig& cfg, const Subgraph& sg,
               const Matrix& source_features, const Matrix& target_features);

/// sigmoid(z_u . z_v) per (u, v) pair of row indices into z. Raises MissingEmbedding.
nn::Var predict_links(nn::Var z, std::span<const EdgePair> pairs);

/// sigmoid(x_s^T W x_t) per row pair; `W` has shape (source dim x target dim).
nn::Var bilinear_forward(nn::Tape& tape, nn::Var x_s, nn::Var x_t, nn::Var W);

/// Two-layer MLP per side followed by a bilinear head. Parameter names:
/// mlp_s.{w1,b1,w2,b2}, mlp_t.{...}, head.w.
nn::Var mlp_baseline_forward(nn::Tape& tape, nn::Var x_s, nn::Var x_t, nn::ParamStore& ps);

/// 1/d over the message edges (all relations), d the hop distance from source
/// to target; 0 when unreachable. The scored edge itself never counts as a
/// path. Raises ColdSplitUnsupported outside the random split.
std::vector<double> shortest_path_scores(const HeteroGraph& g, const MessageEdges& msg,
                                         std::span<const EdgePair> edges, SplitMode mode);

/// Trainable link predictor for every kind except ShortestPath.
class LinkModel {
 public:
  LinkModel(ModelConfig cfg, const HeteroGraph& g, std::uint64_t seed, bool allow_any_dim = false);

  const ModelConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  /// Probabilities aligned with batch.local_edges() (positives, then negatives).
  nn::Var forward(nn::Tape& tape, const HeteroGraph& g, const Batch& batch);

  std::map<std::string, std::string> checkpoint_meta() const;
  /// Raises CheckpointMismatch when the checkpoint was written by a different
  /// model shape, then loads its values.
  void load(const nn::Checkpoint& ckpt);

 private:
  ModelConfig cfg_;
  std::size_t source_dim_ = 0;
  std::size_t target_dim_ = 0;
  std::size_t num_sources_ = 0;
  std::size_t num_targets_ = 0;
  nn::ParamStore params_;
};

}  // namespace linkbench
