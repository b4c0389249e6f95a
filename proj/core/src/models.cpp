#include "linkbench/models.hpp"

#include <algorithm>
#include <queue>
#include <unordered_set>

#include <fmt/format.h>

#include "linkbench/error.hpp"

namespace linkbench {

using nn::ParamStore;
using nn::Segments;
using nn::Tape;
using nn::Var;

namespace {

constexpr std::array<std::pair<ModelKind, std::string_view>, 7> kModelNames = {{
    {ModelKind::SageCP, "sage_cp"},
    {ModelKind::GinCP, "gin_cp"},
    {ModelKind::Gatv2CP, "gatv2_cp"},
    {ModelKind::SageEmbs, "sage_embs"},
    {ModelKind::Mlp, "mlp"},
    {ModelKind::Bilinear, "bilinear"},
    {ModelKind::ShortestPath, "shortest_path"},
}};

Var param(Tape& t, ParamStore& ps, const std::string& name) { return t.param(ps.get(name)); }

Var linear(Tape& t, ParamStore& ps, Var x, const std::string& prefix) {
  return nn::add_bias(nn::matmul(x, param(t, ps, prefix + ".w")), param(t, ps, prefix + ".b"));
}

void add_linear(ParamStore& ps, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng) {
  ps.add(prefix + ".w", nn::glorot_uniform(in, out, rng));
  ps.add(prefix + ".b", Matrix(1, out));
}

void add_conv(ParamStore& ps, const EncoderConfig& cfg, const std::string& layer, Rng& rng) {
  const std::size_t d = cfg.hidden_dim;
  switch (cfg.conv_kind) {
    case ConvKind::SAGE:
      ps.add(layer + ".w_self", nn::glorot_uniform(d, d, rng));
      ps.add(layer + ".w_neigh", nn::glorot_uniform(d, d, rng));
      ps.add(layer + ".b", Matrix(1, d));
      break;
    case ConvKind::GIN:
      add_linear(ps, layer + ".mlp1", d, d, rng);
      add_linear(ps, layer + ".mlp2", d, d, rng);
      break;
    case ConvKind::GATv2:
      for (std::size_t h = 0; h < cfg.gatv2_heads; ++h) {
        const std::string p = fmt::format("{}.head{}", layer, h);
        ps.add(p + ".w_src", nn::glorot_uniform(d, d, rng));
        ps.add(p + ".w_dst", nn::glorot_uniform(d, d, rng));
        ps.add(p + ".att", nn::glorot_uniform(d, 1, rng));
      }
      if (cfg.gatv2_heads > 1) ps.add(layer + ".mix", nn::glorot_uniform(d * cfg.gatv2_heads, d, rng));
      ps.add(layer + ".b", Matrix(1, d));
      break;
  }
}

Var conv(Tape& t, Var h, const Segments& nbrs, ParamStore& ps, const EncoderConfig& cfg,
         const std::string& layer) {
  switch (cfg.conv_kind) {
    case ConvKind::SAGE: return sage_conv(t, h, nbrs, ps, layer);
    case ConvKind::GIN: return gin_conv(t, h, nbrs, ps, layer, cfg.gin_eps);
    case ConvKind::GATv2: return gatv2_conv(t, h, nbrs, ps, layer, cfg.gatv2_heads);
  }
  fail(ErrorCode::ConfigInvalid, "unknown conv kind");
}

Matrix gather(const Matrix& table, std::span<const std::uint32_t> rows) {
  Matrix out(rows.size(), table.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = table.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

std::string_view to_string(ConvKind k) {
  switch (k) {
    case ConvKind::SAGE: return "sage";
    case ConvKind::GIN: return "gin";
    case ConvKind::GATv2: return "gatv2";
  }
  return "?";
}

std::string_view to_string(ModelKind k) {
  for (const auto& [kind, name] : kModelNames)
    if (kind == k) return name;
  return "?";
}

ModelKind parse_model_kind(std::string_view s) {
  for (const auto& [kind, name] : kModelNames)
    if (name == s) return kind;
  fail(ErrorCode::ConfigInvalid, fmt::format("unknown model '{}'", s));
}

void EncoderConfig::validate(bool allow_any_dim) const {
  if (hidden_dim == 0) fail(ErrorCode::ConfigInvalid, "hidden_dim must be positive");
  if (!allow_any_dim && hidden_dim != 64 && hidden_dim != 128 && hidden_dim != 256) {
    fail(ErrorCode::ConfigInvalid, fmt::format("hidden_dim {} not in {{64, 128, 256}}", hidden_dim));
  }
  if (gatv2_heads == 0) fail(ErrorCode::ConfigInvalid, "gatv2_heads must be positive");
  if (!std::isfinite(gin_eps)) fail(ErrorCode::ConfigInvalid, "gin_eps must be finite");
}

bool ModelConfig::is_gnn() const {
  return kind == ModelKind::SageCP || kind == ModelKind::GinCP || kind == ModelKind::Gatv2CP ||
         kind == ModelKind::SageEmbs;
}

std::optional<EncoderConfig> ModelConfig::encoder() const {
  if (!is_gnn()) return std::nullopt;
  EncoderConfig e;
  e.hidden_dim = hidden_dim;
  e.gatv2_heads = gatv2_heads;
  e.gin_eps = gin_eps;
  e.use_cp_features = kind != ModelKind::SageEmbs;
  e.conv_kind = kind == ModelKind::GinCP     ? ConvKind::GIN
                : kind == ModelKind::Gatv2CP ? ConvKind::GATv2
                                             : ConvKind::SAGE;
  return e;
}

void ModelConfig::validate(bool allow_any_dim) const {
  if (auto e = encoder()) {
    e->validate(allow_any_dim);
  } else if (kind == ModelKind::Mlp) {
    EncoderConfig probe;
    probe.hidden_dim = hidden_dim;
    probe.validate(allow_any_dim);
  }
}

bool supports_split(ModelKind k, SplitMode m) {
  if (m == SplitMode::Random) return true;
  return k != ModelKind::SageEmbs && k != ModelKind::ShortestPath;
}

void require_split_support(ModelKind k, SplitMode m) {
  if (!supports_split(k, m)) {
    fail(ErrorCode::ColdSplitUnsupported,
         fmt::format("{} cannot score unseen nodes under the {} split", to_string(k), to_string(m)));
  }
}

Segments neighbor_segments(const Subgraph& sg) { return Segments{sg.offsets, sg.neighbors}; }

void init_encoder_params(ParamStore& ps, const EncoderConfig& cfg, std::size_t source_dim,
                         std::size_t target_dim, std::size_t num_sources,
                         std::size_t num_targets, Rng& rng) {
  const std::size_t d = cfg.hidden_dim;
  if (cfg.use_cp_features) {
    ps.add("proj.e_s", nn::glorot_uniform(source_dim, d, rng));
    ps.add("proj.e_t", nn::glorot_uniform(target_dim, d, rng));
  } else {
    Matrix es(num_sources, d), et(num_targets, d);
    for (auto& v : es.data()) v = standard_normal(rng);
    for (auto& v : et.data()) v = standard_normal(rng);
    ps.add("emb.s", std::move(es));
    ps.add("emb.t", std::move(et));
  }
  add_conv(ps, cfg, "conv1", rng);
  add_conv(ps, cfg, "conv2", rng);
}

Var project_inputs(Tape& tape, ParamStore& ps, const EncoderConfig& cfg, const Subgraph& sg,
                   const Matrix& source_features, const Matrix& target_features) {
  const std::span<const std::uint32_t> nodes(sg.nodes);
  std::vector<std::uint32_t> src(nodes.begin(), nodes.begin() + sg.num_sources);
  std::vector<std::uint32_t> tgt;
  tgt.reserve(nodes.size() - sg.num_sources);
  for (std::size_t i = sg.num_sources; i < nodes.size(); ++i) tgt.push_back(nodes[i] - sg.global_num_sources);

  if (!cfg.use_cp_features) {
    Var es = param(tape, ps, "emb.s");
    Var et = param(tape, ps, "emb.t");
    for (auto s : src)
      if (s >= es.rows()) fail(ErrorCode::MissingEmbedding, fmt::format("no embedding row for source {}", s));
    for (auto t : tgt)
      if (t >= et.rows()) fail(ErrorCode::MissingEmbedding, fmt::format("no embedding row for target {}", t));
    return nn::concat_rows(nn::gather_rows(es, src), nn::gather_rows(et, tgt));
  }

  Var es = param(tape, ps, "proj.e_s");
  Var et = param(tape, ps, "proj.e_t");
  if (source_features.cols() != es.rows() || target_features.cols() != et.rows()) {
    fail(ErrorCode::DimensionMismatch,
         fmt::format("features are {}/{} wide, projections expect {}/{}", source_features.cols(),
                     target_features.cols(), es.rows(), et.rows()));
  }
  for (auto s : src)
    if (s >= source_features.rows()) fail(ErrorCode::DimensionMismatch, fmt::format("source {} has no features", s));
  for (auto t : tgt)
    if (t >= target_features.rows()) fail(ErrorCode::DimensionMismatch, fmt::format("target {} has no features", t));
  Var hs = nn::matmul(tape.constant(gather(source_features, src)), es);
  Var ht = nn::matmul(tape.constant(gather(target_features, tgt)), et);
  return nn::concat_rows(hs, ht);
}

Var sage_conv(Tape& tape, Var h, const Segments& nbrs, ParamStore& ps, const std::string& layer) {
  Var self = nn::matmul(h, param(tape, ps, layer + ".w_self"));
  Var neigh = nn::matmul(nn::segment_mean(h, nbrs), param(tape, ps, layer + ".w_neigh"));
  return nn::add_bias(nn::add(self, neigh), param(tape, ps, layer + ".b"));
}

Var gin_conv(Tape& tape, Var h, const Segments& nbrs, ParamStore& ps, const std::string& layer,
             double eps) {
  Var pre = nn::add(nn::scale(h, 1.0 + eps), nn::segment_sum(h, nbrs));
  Var hidden = nn::relu(linear(tape, ps, pre, layer + ".mlp1"));
  return linear(tape, ps, hidden, layer + ".mlp2");
}

Var gatv2_conv(Tape& tape, Var h, const Segments& nbrs, ParamStore& ps, const std::string& layer,
               std::size_t heads) {
  // Edge list grouped by destination: the self loop first, then neighbors.
  const std::size_t n = h.rows();
  std::vector<std::uint32_t> dst, src;
  Segments by_dst;
  by_dst.offsets.reserve(n + 1);
  by_dst.offsets.push_back(0);
  for (std::uint32_t v = 0; v < n; ++v) {
    dst.push_back(v);
    src.push_back(v);
    if (v < nbrs.count()) {
      for (auto u : nbrs[v]) {
        dst.push_back(v);
        src.push_back(u);
      }
    }
    by_dst.offsets.push_back(static_cast<std::uint32_t>(dst.size()));
  }
  by_dst.members.resize(dst.size());
  for (std::uint32_t e = 0; e < dst.size(); ++e) by_dst.members[e] = e;

  std::optional<Var> out;
  for (std::size_t k = 0; k < heads; ++k) {
    const std::string p = fmt::format("{}.head{}", layer, k);
    Var xs = nn::matmul(h, param(tape, ps, p + ".w_src"));
    Var xd = nn::matmul(h, param(tape, ps, p + ".w_dst"));
    Var msg = nn::gather_rows(xs, src);
    Var act = nn::leaky_relu(nn::add(msg, nn::gather_rows(xd, dst)), 0.2);
    Var alpha = nn::segment_softmax(nn::matmul(act, param(tape, ps, p + ".att")), by_dst);
    Var head = nn::segment_sum(nn::mul_rows(msg, alpha), by_dst);
    out = out ? nn::concat_cols(*out, head) : head;
  }
  Var res = heads > 1 ? nn::matmul(*out, param(tape, ps, layer + ".mix")) : *out;
  return nn::add_bias(res, param(tape, ps, layer + ".b"));
}

Var encode(Tape& tape, ParamStore& ps, const EncoderConfig& cfg, const Subgraph& sg,
           const Matrix& source_features, const Matrix& target_features) {
  const Segments nbrs = neighbor_segments(sg);
  Var h0 = project_inputs(tape, ps, cfg, sg, source_features, target_features);
  Var h1 = nn::l2_normalize_rows(nn::leaky_relu(conv(tape, h0, nbrs, ps, cfg, "conv1")));
  Var h2 = nn::l2_normalize_rows(conv(tape, h1, nbrs, ps, cfg, "conv2"));
  return nn::add(h1, h2);
}

Var predict_links(Var z, std::span<const EdgePair> pairs) {
  std::vector<std::uint32_t> us, vs;
  us.reserve(pairs.size());
  vs.reserve(pairs.size());
  for (const auto& e : pairs) {
    if (e.u >= z.rows() || e.v >= z.rows()) {
      fail(ErrorCode::MissingEmbedding,
           fmt::format("edge ({}, {}) outside {} embeddings", e.u, e.v, z.rows()));
    }
    us.push_back(e.u);
    vs.push_back(e.v);
  }
  return nn::sigmoid(nn::rowwise_dot(nn::gather_rows(z, us), nn::gather_rows(z, vs)));
}

Var bilinear_forward(Tape&, Var x_s, Var x_t, Var W) {
  if (x_s.cols() != W.rows() || x_t.cols() != W.cols() || x_s.rows() != x_t.rows()) {
    fail(ErrorCode::DimensionMismatch,
         fmt::format("bilinear: x_s {}x{}, x_t {}x{}, W {}x{}", x_s.rows(), x_s.cols(), x_t.rows(),
                     x_t.cols(), W.rows(), W.cols()));
  }
  return nn::sigmoid(nn::rowwise_dot(nn::matmul(x_s, W), x_t));
}

Var mlp_baseline_forward(Tape& tape, Var x_s, Var x_t, ParamStore& ps) {
  auto side = [&](Var x, const std::string& p) {
    const auto& w1 = ps.get(p + ".w1").value;
    if (x.cols() != w1.rows()) {
      fail(ErrorCode::DimensionMismatch,
           fmt::format("{}: input width {} but layer expects {}", p, x.cols(), w1.rows()));
    }
    Var h = nn::relu(nn::add_bias(nn::matmul(x, param(tape, ps, p + ".w1")), param(tape, ps, p + ".b1")));
    return nn::add_bias(nn::matmul(h, param(tape, ps, p + ".w2")), param(tape, ps, p + ".b2"));
  };
  Var hs = side(x_s, "mlp_s");
  Var ht = side(x_t, "mlp_t");
  return bilinear_forward(tape, hs, ht, param(tape, ps, "head.w"));
}

std::vector<double> shortest_path_scores(const HeteroGraph& g, const MessageEdges& msg,
                                         std::span<const EdgePair> edges, SplitMode mode) {
  require_split_support(ModelKind::ShortestPath, mode);
  const MessageIndex index(g, msg);
  std::unordered_set<std::uint64_t> st_keys;
  for (const auto& e : msg.st) st_keys.insert(edge_key(e));
  const auto ns = static_cast<std::uint32_t>(g.sources().size());
  const std::size_t n = index.num_nodes();

  // BFS distances from `from`, ignoring the single ST edge `skip` if given.
  std::vector<std::uint32_t> dist(n);
  constexpr auto kInf = std::numeric_limits<std::uint32_t>::max();
  auto bfs = [&](std::uint32_t from, std::optional<EdgePair> skip) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::queue<std::uint32_t> q;
    dist[from] = 0;
    q.push(from);
    while (!q.empty()) {
      const auto x = q.front();
      q.pop();
      for (const auto& nb : index.neighbors(x)) {
        if (skip && nb.relation == Relation::ST) {
          const bool hit = (x == skip->u && nb.node == ns + skip->v) ||
                           (nb.node == skip->u && x == ns + skip->v);
          if (hit) continue;
        }
        if (dist[nb.node] != kInf) continue;
        dist[nb.node] = dist[x] + 1;
        q.push(nb.node);
      }
    }
  };

  std::vector<std::size_t> order(edges.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return edges[a].u < edges[b].u; });

  std::vector<double> scores(edges.size(), 0.0);
  std::optional<std::uint32_t> current;
  for (std::size_t i : order) {
    const EdgePair e = edges[i];
    if (e.u >= g.sources().size() || e.v >= g.targets().size()) {
      fail(ErrorCode::IndexOutOfRange, fmt::format("edge ({}, {}) outside graph", e.u, e.v));
    }
    if (st_keys.count(edge_key(e))) {
      bfs(e.u, e);
      current.reset();
    } else if (current != e.u) {
      bfs(e.u, std::nullopt);
      current = e.u;
    }
    const auto d = dist[ns + e.v];
    scores[i] = d == kInf ? 0.0 : 1.0 / static_cast<double>(d);
  }
  return scores;
}

// ---------------------------------------------------------------------------

LinkModel::LinkModel(ModelConfig cfg, const HeteroGraph& g, std::uint64_t seed, bool allow_any_dim)
    : cfg_(cfg),
      source_dim_(g.sources().dim()),
      target_dim_(g.targets().dim()),
      num_sources_(g.sources().size()),
      num_targets_(g.targets().size()) {
  cfg_.validate(allow_any_dim);
  Rng rng(derive_seed(seed, 0x1417));
  const std::size_t d = cfg_.hidden_dim;
  if (auto enc = cfg_.encoder()) {
    init_encoder_params(params_, *enc, source_dim_, target_dim_, num_sources_, num_targets_, rng);
  } else if (cfg_.kind == ModelKind::Bilinear) {
    params_.add("head.w", nn::glorot_uniform(source_dim_, target_dim_, rng));
  } else if (cfg_.kind == ModelKind::Mlp) {
    for (const auto& [p, in] : {std::pair{"mlp_s", source_dim_}, std::pair{"mlp_t", target_dim_}}) {
      params_.add(std::string(p) + ".w1", nn::glorot_uniform(in, d, rng));
      params_.add(std::string(p) + ".b1", Matrix(1, d));
      params_.add(std::string(p) + ".w2", nn::glorot_uniform(d, d, rng));
      params_.add(std::string(p) + ".b2", Matrix(1, d));
    }
    params_.add("head.w", nn::glorot_uniform(d, d, rng));
  } else {
    fail(ErrorCode::ConfigInvalid, fmt::format("{} has no trainable parameters", to_string(cfg_.kind)));
  }
}

Var LinkModel::forward(Tape& tape, const HeteroGraph& g, const Batch& batch) {
  if (auto enc = cfg_.encoder()) {
    Var z = encode(tape, params_, *enc, batch.mp, g.sources().features(), g.targets().features());
    return predict_links(z, batch.local_edges());
  }
  std::vector<std::uint32_t> us, vs;
  for (const auto* list : {&batch.positives, &batch.negatives}) {
    for (const auto& e : *list) {
      us.push_back(e.u);
      vs.push_back(e.v);
    }
  }
  Var xs = tape.constant(gather(g.sources().features(), us));
  Var xt = tape.constant(gather(g.targets().features(), vs));
  if (cfg_.kind == ModelKind::Bilinear) return bilinear_forward(tape, xs, xt, tape.param(params_.get("head.w")));
  return mlp_baseline_forward(tape, xs, xt, params_);
}

std::map<std::string, std::string> LinkModel::checkpoint_meta() const {
  return {
      {"model", std::string(to_string(cfg_.kind))},
      {"hidden_dim", std::to_string(cfg_.hidden_dim)},
      {"gatv2_heads", std::to_string(cfg_.gatv2_heads)},
      {"gin_eps", fmt::format("{}", cfg_.gin_eps)},
      {"source_dim", std::to_string(source_dim_)},
      {"target_dim", std::to_string(target_dim_)},
  };
}

void LinkModel::load(const nn::Checkpoint& ckpt) {
  for (const auto& [k, v] : checkpoint_meta()) {
    auto it = ckpt.meta.find(k);
    if (it == ckpt.meta.end() || it->second != v) {
      fail(ErrorCode::CheckpointMismatch,
           fmt::format("checkpoint {} is '{}', config expects '{}'", k,
                       it == ckpt.meta.end() ? std::string("<missing>") : it->second, v));
    }
  }
  nn::apply_checkpoint(ckpt, params_);
}

}  // namespace linkbench
