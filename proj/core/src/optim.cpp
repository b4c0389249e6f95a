#include "linkbench/optim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "linkbench/error.hpp"

namespace linkbench::nn {

Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = uniform_real(rng, -limit, limit);
  return m;
}

// ---------------------------------------------------------------------------

Adam::Adam(ParamStore& params, AdamConfig cfg) : params_(&params), cfg_(cfg) {
  for (const auto& p : params) {
    m_.emplace_back(p.value.rows(), p.value.cols());
    v_.emplace_back(p.value.rows(), p.value.cols());
  }
}

void Adam::step() {
  if (m_.size() != params_->size()) fail(ErrorCode::ShapeMismatch, "parameter set changed under Adam");
  const bool any = std::any_of(params_->begin(), params_->end(),
                               [](const Param& p) { return p.trainable && p.has_grad; });
  if (!any) fail(ErrorCode::MissingGradient, "Adam step without gradients; call backward() first");

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  std::size_t i = 0;
  for (auto& p : *params_) {
    Matrix& m = m_[i];
    Matrix& v = v_[i];
    ++i;
    if (!p.trainable) continue;
    auto& theta = p.value.data();
    const auto& g = p.grad.data();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m.data()[k] = cfg_.beta1 * m.data()[k] + (1.0 - cfg_.beta1) * g[k];
      v.data()[k] = cfg_.beta2 * v.data()[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
      const double mhat = m.data()[k] / bc1;
      const double vhat = v.data()[k] / bc2;
      theta[k] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * theta[k]);
    }
  }
}

// ---------------------------------------------------------------------------

GradCheckResult grad_check(const std::function<Var(Tape&)>& loss, ParamStore& params,
                           const GradCheckOptions& opts) {
  params.zero_grad();
  {
    Tape tape;
    Var out = loss(tape);
    tape.backward(out);
  }

  auto eval = [&] {
    Tape tape;
    return loss(tape).value()(0, 0);
  };

  GradCheckResult res;
  Rng rng(derive_seed(opts.seed, 0x6C4E));
  for (auto& p : params) {
    if (!p.trainable) continue;
    std::vector<std::size_t> coords(p.value.size());
    for (std::size_t k = 0; k < coords.size(); ++k) coords[k] = k;
    if (opts.max_coords_per_param != 0 && coords.size() > opts.max_coords_per_param) {
      shuffle(coords, rng);
      coords.resize(opts.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t k : coords) {
      double& x = p.value.data()[k];
      const double saved = x;
      x = saved + opts.step;
      const double fp = eval();
      x = saved - opts.step;
      const double fm = eval();
      x = saved;
      const double numeric = (fp - fm) / (2.0 * opts.step);
      const double analytic = p.grad.data()[k];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double rel = std::abs(analytic - numeric) / denom;
      ++res.coords_checked;
      if (res.worst_param.empty() || rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_param = p.name;
        res.worst_index = k;
        res.analytic = analytic;
        res.numeric = numeric;
      }
    }
  }
  params.zero_grad();
  return res;
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kMagic = "LBCKPT 1";

void put_le(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(buf, 8);
}

double get_le(const char* buf) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

bool valid_token(const std::string& s) {
  return !s.empty() && s.find_first_of(" \t\r\n") == std::string::npos;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params,
                     const std::map<std::string, std::string>& meta) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, fmt::format("cannot write checkpoint {}", path.string()));
  out << kMagic << '\n';
  for (const auto& [k, v] : meta) {
    if (!valid_token(k) || v.find('\n') != std::string::npos) {
      fail(ErrorCode::ConfigInvalid, fmt::format("checkpoint meta key '{}' is not storable", k));
    }
    out << "meta " << k << ' ' << v << '\n';
  }
  for (const auto& p : params) {
    if (!valid_token(p.name)) fail(ErrorCode::ConfigInvalid, fmt::format("bad tensor name '{}'", p.name));
    out << "tensor " << p.name << ' ' << p.value.rows() << ' ' << p.value.cols() << '\n';
  }
  out << "data\n";
  for (const auto& p : params)
    for (double v : p.value.data()) put_le(out, v);
  if (!out) fail(ErrorCode::IoError, fmt::format("failed writing checkpoint {}", path.string()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, fmt::format("cannot open checkpoint {}", path.string()));
  auto bad = [&](const std::string& why) {
    fail(ErrorCode::CheckpointMismatch, fmt::format("{}: {}", path.string(), why));
  };

  std::string line;
  if (!std::getline(in, line) || line != kMagic) bad("missing LBCKPT header");
  Checkpoint ck;
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  bool saw_data = false;
  while (std::getline(in, line)) {
    if (line == "data") {
      saw_data = true;
      break;
    }
    std::istringstream ls(line);
    std::string kind, name;
    ls >> kind >> name;
    if (kind == "meta") {
      std::string rest;
      std::getline(ls, rest);
      if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
      ck.meta[name] = rest;
    } else if (kind == "tensor") {
      std::size_t r = 0, c = 0;
      if (!(ls >> r >> c)) bad(fmt::format("malformed tensor line '{}'", line));
      ck.tensors.emplace_back(name, Matrix());
      shapes.emplace_back(r, c);
    } else {
      bad(fmt::format("unexpected header line '{}'", line));
    }
  }
  if (!saw_data) bad("missing data section");

  char buf[8];
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    Matrix m(shapes[i].first, shapes[i].second);
    for (auto& v : m.data()) {
      if (!in.read(buf, 8)) bad("truncated tensor data");
      v = get_le(buf);
    }
    ck.tensors[i].second = std::move(m);
  }
  if (in.peek() != std::char_traits<char>::eof()) bad("trailing bytes after tensor data");
  return ck;
}

void apply_checkpoint(const Checkpoint& ckpt, ParamStore& params) {
  if (ckpt.tensors.size() != params.size()) {
    fail(ErrorCode::CheckpointMismatch,
         fmt::format("checkpoint has {} tensors, model has {}", ckpt.tensors.size(), params.size()));
  }
  for (const auto& [name, value] : ckpt.tensors) {
    Param* p = params.find(name);
    if (!p) fail(ErrorCode::CheckpointMismatch, fmt::format("model has no tensor '{}'", name));
    if (p->value.rows() != value.rows() || p->value.cols() != value.cols()) {
      fail(ErrorCode::CheckpointMismatch,
           fmt::format("tensor '{}' is {}x{} in checkpoint, {}x{} in model", name, value.rows(),
                       value.cols(), p->value.rows(), p->value.cols()));
    }
  }
  for (const auto& [name, value] : ckpt.tensors) params.get(name).value = value;
}

}  // namespace linkbench::nn
