#include "linkbench/ingest.hpp"

#include <cmath>

#include <fmt/format.h>

#include "csv.hpp"
#include "linkbench/error.hpp"
#include "linkbench/random.hpp"

namespace linkbench {

using detail::split_row;

NodeTable load_node_features(const std::filesystem::path& path, Role role) {
  const auto lines = detail::read_lines(path);
  if (lines.empty()) {
    fail(ErrorCode::ParseError, fmt::format("{}: missing header", path.string()));
  }
  const auto header = split_row(lines[0]);
  if (header.size() < 2 || header[0] != "id") {
    fail(ErrorCode::ParseError,
         fmt::format("{}:1: header must be 'id,f0,f1,...'", path.string()));
  }
  const std::size_t dim = header.size() - 1;

  std::vector<std::string> ids;
  std::vector<double> values;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const auto cells = split_row(lines[ln]);
    if (cells.size() != dim + 1) {
      fail(ErrorCode::ParseError,
           fmt::format("{}:{}: expected {} features, found {}", path.string(), ln + 1, dim,
                       cells.size() - 1));
    }
    if (cells[0].empty()) {
      fail(ErrorCode::ParseError, fmt::format("{}:{}: empty id", path.string(), ln + 1));
    }
    ids.emplace_back(cells[0]);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      double v = 0.0;
      if (!detail::parse_double(cells[c], v)) {
        fail(ErrorCode::ParseError, fmt::format("{}:{}: bad feature value '{}'",
                                                path.string(), ln + 1, cells[c]));
      }
      values.push_back(v);
    }
  }
  const std::size_t rows = ids.size();
  return NodeTable::create(role, std::move(ids), Matrix(rows, dim, std::move(values)));
}

std::vector<RawEdgeList> load_edges(const std::filesystem::path& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty() || lines[0] != "src_id,dst_id,rel") {
    fail(ErrorCode::ParseError,
         fmt::format("{}:1: header must be 'src_id,dst_id,rel'", path.string()));
  }
  std::vector<RawEdgeList> out{{Relation::SS, {}}, {Relation::ST, {}}, {Relation::TT, {}}};
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const auto cells = split_row(lines[ln]);
    if (cells.size() != 3 || cells[0].empty() || cells[1].empty()) {
      fail(ErrorCode::ParseError,
           fmt::format("{}:{}: expected 'src_id,dst_id,rel'", path.string(), ln + 1));
    }
    const Relation rel = parse_relation(cells[2]);
    out[static_cast<int>(rel)].pairs.emplace_back(std::string(cells[0]), std::string(cells[1]));
  }
  return out;
}

HeteroGraph load_dataset(const DatasetManifest& m, MissingIdPolicy policy) {
  auto sources = load_node_features(m.source_features_path, Role::Source);
  auto targets = load_node_features(m.target_features_path, Role::Target);
  const auto edges = load_edges(m.edges_path);
  return build_graph(std::move(sources), std::move(targets), edges, policy);
}

// ---------------------------------------------------------------------------
// Synthetic generator

void SynthConfig::validate() const {
  const auto bad = [](const std::string& msg) { fail(ErrorCode::ConfigInvalid, msg); };
  if (num_sources == 0 || num_targets == 0) bad("node counts must be positive");
  if (feature_dim_s == 0 || feature_dim_t == 0) bad("feature dims must be positive");
  if (num_blocks == 0) bad("num_blocks must be positive");
  if (num_blocks > std::min(num_sources, num_targets))
    bad("num_blocks exceeds min(num_sources, num_targets)");
  if (num_blocks > std::min(feature_dim_s, feature_dim_t))
    bad("num_blocks exceeds the feature dims (block signature does not fit)");
  for (double p : {intra_block_st_prob, ss_prob, tt_prob}) {
    if (!(p >= 0.0 && p <= 1.0)) bad("probabilities must lie in [0, 1]");
  }
  if (!(feature_noise >= 0.0) || !std::isfinite(feature_noise))
    bad("feature_noise must be a finite non-negative number");
}

namespace {

void standardize_columns(Matrix& m) {
  if (m.rows() == 0) return;
  const double n = static_cast<double>(m.rows());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) mean += m(r, c);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) var += (m(r, c) - mean) * (m(r, c) - mean);
    const double sd = std::sqrt(var / n);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      m(r, c) -= mean;
      if (sd > 1e-12) m(r, c) /= sd;
    }
  }
}

NodeTable make_table(Role role, std::size_t count, std::size_t dim, std::size_t blocks,
                     double noise, Rng& rng, std::vector<std::uint32_t>& block_of) {
  const char prefix = role == Role::Source ? 's' : 't';
  std::vector<std::string> ids;
  ids.reserve(count);
  Matrix feats(count, dim);
  block_of.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    ids.push_back(fmt::format("{}{}", prefix, i));
    const auto b = static_cast<std::uint32_t>(i % blocks);
    block_of[i] = b;
    for (std::size_t c = 0; c < dim; ++c) {
      const double signature = c == b ? 1.0 : 0.0;
      feats(i, c) = signature + noise * standard_normal(rng);
    }
  }
  standardize_columns(feats);
  return NodeTable::create(role, std::move(ids), std::move(feats));
}

}  // namespace

SynthDataset synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthDataset ds;
  // Independent streams per component keep each piece stable when another
  // part of the config changes.
  Rng feat_s(derive_seed(cfg.seed, 1));
  Rng feat_t(derive_seed(cfg.seed, 2));
  Rng st_rng(derive_seed(cfg.seed, 3));
  Rng ss_rng(derive_seed(cfg.seed, 4));
  Rng tt_rng(derive_seed(cfg.seed, 5));

  ds.sources = make_table(Role::Source, cfg.num_sources, cfg.feature_dim_s, cfg.num_blocks,
                          cfg.feature_noise, feat_s, ds.source_blocks);
  ds.targets = make_table(Role::Target, cfg.num_targets, cfg.feature_dim_t, cfg.num_blocks,
                          cfg.feature_noise, feat_t, ds.target_blocks);

  TypedEdgeList ss{Relation::SS, {}}, st{Relation::ST, {}}, tt{Relation::TT, {}};
  const double cross_p = cfg.intra_block_st_prob / 10.0;
  for (std::uint32_t s = 0; s < cfg.num_sources; ++s) {
    for (std::uint32_t t = 0; t < cfg.num_targets; ++t) {
      const bool same = ds.source_blocks[s] == ds.target_blocks[t];
      if (bernoulli(st_rng, same ? cfg.intra_block_st_prob : cross_p)) st.pairs.push_back({s, t});
    }
  }
  for (std::uint32_t a = 0; a < cfg.num_sources; ++a) {
    for (std::uint32_t b = a + cfg.num_blocks; b < cfg.num_sources; b += cfg.num_blocks) {
      if (bernoulli(ss_rng, cfg.ss_prob)) ss.pairs.push_back({a, b});
    }
  }
  for (std::uint32_t a = 0; a < cfg.num_targets; ++a) {
    for (std::uint32_t b = a + cfg.num_blocks; b < cfg.num_targets; b += cfg.num_blocks) {
      if (bernoulli(tt_rng, cfg.tt_prob)) tt.pairs.push_back({a, b});
    }
  }
  ds.edges = {std::move(ss), std::move(st), std::move(tt)};
  return ds;
}

HeteroGraph SynthDataset::graph() const {
  return build_graph(sources, targets, std::span<const TypedEdgeList>(edges));
}

// ---------------------------------------------------------------------------
// Writers

void write_node_features(const std::filesystem::path& path, const NodeTable& table) {
  auto out = detail::open_for_write(path);
  out << "id";
  for (std::size_t c = 0; c < table.dim(); ++c) out << ",f" << c;
  out << '\n';
  std::string line;
  for (std::uint32_t i = 0; i < table.size(); ++i) {
    line = table.id(i);
    for (double v : table.features().row(i)) fmt::format_to(std::back_inserter(line), ",{}", v);
    line += '\n';
    out << line;
  }
}

void write_edges(const std::filesystem::path& path, const HeteroGraph& g) {
  auto out = detail::open_for_write(path);
  out << "src_id,dst_id,rel\n";
  for (Relation rel : {Relation::SS, Relation::ST, Relation::TT}) {
    auto [ru, rv] = endpoint_roles(rel);
    for (const auto& e : g.edges(rel).pairs) {
      out << g.table(ru).id(e.u) << ',' << g.table(rv).id(e.v) << ',' << to_string(rel) << '\n';
    }
  }
}

DatasetManifest write_synth_dataset(const std::filesystem::path& dir, const SynthDataset& ds,
                                    const std::string& name) {
  std::filesystem::create_directories(dir);
  DatasetManifest m;
  m.name = name;
  m.source_features_path = dir / "sources.csv";
  m.target_features_path = dir / "targets.csv";
  m.edges_path = dir / "edges.csv";
  write_node_features(m.source_features_path, ds.sources);
  write_node_features(m.target_features_path, ds.targets);
  write_edges(m.edges_path, ds.graph());

  auto out = detail::open_for_write(dir / "blocks.csv");
  out << "id,block\n";
  for (std::uint32_t i = 0; i < ds.sources.size(); ++i)
    out << ds.sources.id(i) << ',' << ds.source_blocks[i] << '\n';
  for (std::uint32_t i = 0; i < ds.targets.size(); ++i)
    out << ds.targets.id(i) << ',' << ds.target_blocks[i] << '\n';
  return m;
}

}  // namespace linkbench
