#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "linkbench/random.hpp"
#include "linkbench/tensor.hpp"

namespace linkbench::nn {

/// Uniform in +-sqrt(6 / (rows + cols)).
Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

struct AdamConfig {
  double lr = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam with decoupled weight decay (theta -= lr * wd * theta).
class Adam {
 public:
  Adam(ParamStore& params, AdamConfig cfg);

  /// Raises MissingGradient when no trainable parameter received a gradient
  /// since the last zero_grad().
  void step();
  std::size_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  ParamStore* params_;
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

struct GradCheckOptions {
  double step = 1e-5;
  /// Coordinates checked per parameter; 0 checks all of them.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coords_checked = 0;
};

/// Compares backward() against central differences of `loss`. The closure
/// must record a scalar on the given tape and be deterministic.
GradCheckResult grad_check(const std::function<Var(Tape&)>& loss, ParamStore& params,
                           const GradCheckOptions& opts = {});

struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, Matrix>> tensors;
};

/// Text header (`LBCKPT 1`, `meta` lines, `tensor` lines, `data`) followed by
/// the tensors' values as raw little-endian doubles.
void save_checkpoint(const std::filesystem::path& path, const ParamStore& params,
                     const std::map<std::string, std::string>& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies tensor values into `params`; names and shapes must match exactly
/// (CheckpointMismatch otherwise).
void apply_checkpoint(const Checkpoint& ckpt, ParamStore& params);

}  // namespace linkbench::nn
