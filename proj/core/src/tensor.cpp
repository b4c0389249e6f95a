#include "linkbench/tensor.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "linkbench/error.hpp"

namespace linkbench::nn {

// ---------------------------------------------------------------------------
// ParamStore

Param& ParamStore::add(std::string name, Matrix init, bool trainable) {
  if (find(name)) fail(ErrorCode::ConfigInvalid, fmt::format("duplicate parameter '{}'", name));
  Param p;
  p.grad = Matrix(init.rows(), init.cols());
  p.value = std::move(init);
  p.name = std::move(name);
  p.trainable = trainable;
  params_.push_back(std::move(p));
  return params_.back();
}

Param* ParamStore::find(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

const Param* ParamStore::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

Param& ParamStore::get(const std::string& name) {
  if (auto* p = find(name)) return *p;
  fail(ErrorCode::CheckpointMismatch, fmt::format("no parameter named '{}'", name));
}

const Param& ParamStore::get(const std::string& name) const {
  if (const auto* p = find(name)) return *p;
  fail(ErrorCode::CheckpointMismatch, fmt::format("no parameter named '{}'", name));
}

std::size_t ParamStore::num_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) {
    p.grad.fill(0.0);
    p.has_grad = false;
  }
}

// ---------------------------------------------------------------------------
// Tape

const Matrix& Var::value() const { return tape->value(*this); }

Var Tape::constant(Matrix m) { return record(std::move(m), {}, nullptr); }

Var Tape::param(Param& p) {
  Var v = record(p.value, {}, nullptr);
  nodes_[v.id].param = &p;
  nodes_[v.id].requires_grad = track_grad_ && p.trainable;
  return v;
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  if (!value.all_finite()) {
    fail(ErrorCode::NonFinite, fmt::format("non-finite value produced at tape node {}", nodes_.size()));
  }
  Node n;
  n.value = std::move(value);
  for (const Var& in : inputs) n.requires_grad = n.requires_grad || requires_grad(in);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Matrix& Tape::grad(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.size() != n.value.size() || n.grad.rows() != n.value.rows()) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

void Tape::backward(Var scalar) {
  if (value(scalar).size() != 1) fail(ErrorCode::ShapeMismatch, "backward needs a scalar output");
  if (!requires_grad(scalar)) return;
  grad(scalar)(0, 0) = 1.0;
  for (std::size_t i = scalar.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param) {
      n.param->has_grad = true;
      auto& dst = n.param->grad.data();
      const auto& src = n.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

// ---------------------------------------------------------------------------
// Ops

namespace {

void require(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) {
    fail(ErrorCode::ShapeMismatch,
         fmt::format("{}: ({}x{}) vs ({}x{})", op, a.rows(), a.cols(), b.rows(), b.cols()));
  }
}

// c += a * b (no transposes), row-major ikj loop.
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c.data().data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      if (aip == 0.0) continue;
      const double* bp = b.data().data() + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
}

// c += a * b^T
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.data().data() + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.data().data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c(i, j) += s;
    }
  }
}

// c += a^T * b
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* bi = b.data().data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      if (aip == 0.0) continue;
      double* cp = c.data().data() + p * m;
      for (std::size_t j = 0; j < m; ++j) cp[j] += aip * bi[j];
    }
  }
}

void check_segments(const Segments& seg, std::size_t rows, const char* op) {
  for (auto m : seg.members) {
    if (m >= rows) fail(ErrorCode::ShapeMismatch, fmt::format("{}: segment member {} >= {}", op, m, rows));
  }
}

template <typename F, typename D>
Var elementwise(Var a, F f, D dfdx) {
  Tape& t = *a.tape;
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = f(x.data()[i]);
  return t.record(std::move(out), {a}, [a, dfdx](Tape& tape, const Matrix& g) {
    const Matrix& xv = tape.value(a);
    Matrix& ga = tape.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] * dfdx(xv.data()[i]);
  });
}

}  // namespace

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var matmul(Var a, Var b) {
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  require(x.cols() == y.rows(), "matmul", x, y);
  Matrix out(x.rows(), y.cols());
  gemm_nn(x, y, out);
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) gemm_nt(g, t.value(b), t.grad(a));
    if (t.requires_grad(b)) gemm_tn(t.value(a), g, t.grad(b));
  });
}

Var add(Var a, Var b) {
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  require(x.rows() == y.rows() && x.cols() == y.cols(), "add", x, y);
  Matrix out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += y.data()[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    for (Var v : {a, b}) {
      if (!t.requires_grad(v)) continue;
      auto& gv = t.grad(v).data();
      for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += g.data()[i];
    }
  });
}

Var add_bias(Var a, Var bias) {
  const Matrix& x = a.value();
  const Matrix& b = bias.value();
  require(b.rows() == 1 && b.cols() == x.cols(), "add_bias", x, b);
  Matrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += b(0, j);
  return a.tape->record(std::move(out), {a, bias}, [a, bias](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) {
      auto& ga = t.grad(a).data();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g.data()[i];
    }
    if (t.requires_grad(bias)) {
      Matrix& gb = t.grad(bias);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
    }
  });
}

Var scale(Var a, double s) {
  Matrix out = a.value();
  for (auto& v : out.data()) v *= s;
  return a.tape->record(std::move(out), {a}, [a, s](Tape& t, const Matrix& g) {
    auto& ga = t.grad(a).data();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += s * g.data()[i];
  });
}

Var concat_cols(Var a, Var b) {
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  require(x.rows() == y.rows(), "concat_cols", x, y);
  const std::size_t ca = x.cols(), cb = y.cols();
  Matrix out(x.rows(), ca + cb);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::copy(x.row(i).begin(), x.row(i).end(), out.row(i).begin());
    std::copy(y.row(i).begin(), y.row(i).end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(ca));
  }
  return a.tape->record(std::move(out), {a, b}, [a, b, ca, cb](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) {
      Matrix& ga = t.grad(a);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < ca; ++j) ga(i, j) += g(i, j);
    }
    if (t.requires_grad(b)) {
      Matrix& gb = t.grad(b);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < cb; ++j) gb(i, j) += g(i, ca + j);
    }
  });
}

Var concat_rows(Var a, Var b) {
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  require(x.cols() == y.cols() || x.rows() == 0 || y.rows() == 0, "concat_rows", x, y);
  const std::size_t cols = x.rows() ? x.cols() : y.cols();
  const std::size_t ra = x.rows();
  std::vector<double> data;
  data.reserve(x.size() + y.size());
  data.insert(data.end(), x.data().begin(), x.data().end());
  data.insert(data.end(), y.data().begin(), y.data().end());
  Matrix out(x.rows() + y.rows(), cols, std::move(data));
  return a.tape->record(std::move(out), {a, b}, [a, b, ra, cols](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) {
      auto& ga = t.grad(a).data();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g.data()[i];
    }
    if (t.requires_grad(b)) {
      auto& gb = t.grad(b).data();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g.data()[ra * cols + i];
    }
  });
}

Var gather_rows(Var a, std::span<const std::uint32_t> idx) {
  const Matrix& x = a.value();
  std::vector<std::uint32_t> rows(idx.begin(), idx.end());
  Matrix out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= x.rows()) {
      fail(ErrorCode::ShapeMismatch, fmt::format("gather_rows: index {} >= {}", rows[i], x.rows()));
    }
    std::copy(x.row(rows[i]).begin(), x.row(rows[i]).end(), out.row(i).begin());
  }
  return a.tape->record(std::move(out), {a}, [a, rows = std::move(rows)](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad(a);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto dst = ga.row(rows[i]);
      auto src = g.row(i);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  });
}

namespace {

Var segment_reduce(Var a, const Segments& seg, bool mean, const char* op) {
  const Matrix& x = a.value();
  check_segments(seg, x.rows(), op);
  const std::size_t n = seg.count();
  Matrix out(n, x.cols());
  std::vector<double> weight(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto members = seg[i];
    if (members.empty()) continue;
    weight[i] = mean ? 1.0 / static_cast<double>(members.size()) : 1.0;
    auto dst = out.row(i);
    for (auto m : members) {
      auto src = x.row(m);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
    if (mean)
      for (auto& v : dst) v *= weight[i];
  }
  return a.tape->record(std::move(out), {a},
                        [a, seg, weight = std::move(weight)](Tape& t, const Matrix& g) {
                          Matrix& ga = t.grad(a);
                          for (std::size_t i = 0; i < seg.count(); ++i) {
                            auto src = g.row(i);
                            for (auto m : seg[i]) {
                              auto dst = ga.row(m);
                              for (std::size_t j = 0; j < dst.size(); ++j)
                                dst[j] += weight[i] * src[j];
                            }
                          }
                        });
}

}  // namespace

Var segment_sum(Var a, const Segments& seg) { return segment_reduce(a, seg, false, "segment_sum"); }
Var segment_mean(Var a, const Segments& seg) { return segment_reduce(a, seg, true, "segment_mean"); }

Var segment_softmax(Var scores, const Segments& seg) {
  const Matrix& x = scores.value();
  if (x.cols() != 1) fail(ErrorCode::ShapeMismatch, "segment_softmax expects a column vector");
  check_segments(seg, x.rows(), "segment_softmax");
  Matrix out(x.rows(), 1);
  for (std::size_t i = 0; i < seg.count(); ++i) {
    const auto members = seg[i];
    if (members.empty()) continue;
    double mx = -INFINITY;
    for (auto m : members) mx = std::max(mx, x(m, 0));
    double z = 0.0;
    for (auto m : members) z += std::exp(x(m, 0) - mx);
    for (auto m : members) out(m, 0) = std::exp(x(m, 0) - mx) / z;
  }
  Matrix y = out;
  return scores.tape->record(std::move(out), {scores}, [scores, y = std::move(y), seg](Tape& t, const Matrix& g) {
    Matrix& gx = t.grad(scores);
    for (std::size_t i = 0; i < seg.count(); ++i) {
      double dot = 0.0;
      for (auto m : seg[i]) dot += g(m, 0) * y(m, 0);
      for (auto m : seg[i]) gx(m, 0) += y(m, 0) * (g(m, 0) - dot);
    }
  });
}

Var mul_rows(Var a, Var weights) {
  const Matrix& x = a.value();
  const Matrix& w = weights.value();
  require(w.cols() == 1 && w.rows() == x.rows(), "mul_rows", x, w);
  Matrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (auto& v : out.row(i)) v *= w(i, 0);
  return a.tape->record(std::move(out), {a, weights}, [a, weights](Tape& t, const Matrix& g) {
    const Matrix& xv = t.value(a);
    const Matrix& wv = t.value(weights);
    if (t.requires_grad(a)) {
      Matrix& ga = t.grad(a);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) += wv(i, 0) * g(i, j);
    }
    if (t.requires_grad(weights)) {
      Matrix& gw = t.grad(weights);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) s += xv(i, j) * g(i, j);
        gw(i, 0) += s;
      }
    }
  });
}

Var rowwise_dot(Var a, Var b) {
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  require(x.rows() == y.rows() && x.cols() == y.cols(), "rowwise_dot", x, y);
  Matrix out(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) s += x(i, j) * y(i, j);
    out(i, 0) = s;
  }
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    const Matrix& xv = t.value(a);
    const Matrix& yv = t.value(b);
    if (t.requires_grad(a)) {
      Matrix& ga = t.grad(a);
      for (std::size_t i = 0; i < xv.rows(); ++i)
        for (std::size_t j = 0; j < xv.cols(); ++j) ga(i, j) += g(i, 0) * yv(i, j);
    }
    if (t.requires_grad(b)) {
      Matrix& gb = t.grad(b);
      for (std::size_t i = 0; i < xv.rows(); ++i)
        for (std::size_t j = 0; j < xv.cols(); ++j) gb(i, j) += g(i, 0) * xv(i, j);
    }
  });
}

Var leaky_relu(Var a, double slope) {
  return elementwise(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x) { return x > 0.0 ? 1.0 : slope; });
}

Var relu(Var a) {
  return elementwise(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return elementwise(a, sigmoid_value, [](double x) {
    const double s = sigmoid_value(x);
    return s * (1.0 - s);
  });
}

Var l2_normalize_rows(Var a) {
  const Matrix& x = a.value();
  Matrix out = x;
  std::vector<double> norms(x.rows(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (double v : x.row(i)) s += v * v;
    norms[i] = std::sqrt(s);
    if (norms[i] > 0.0)
      for (auto& v : out.row(i)) v /= norms[i];
  }
  Matrix yv_copy = out;
  return a.tape->record(std::move(out), {a},
                        [a, yv = std::move(yv_copy), norms = std::move(norms)](Tape& t, const Matrix& g) {
                          Matrix& ga = t.grad(a);
                          for (std::size_t i = 0; i < g.rows(); ++i) {
                            auto gi = g.row(i);
                            auto dst = ga.row(i);
                            if (norms[i] == 0.0) {
                              for (std::size_t j = 0; j < gi.size(); ++j) dst[j] += gi[j];
                              continue;
                            }
                            double dot = 0.0;
                            for (std::size_t j = 0; j < gi.size(); ++j) dot += gi[j] * yv(i, j);
                            for (std::size_t j = 0; j < gi.size(); ++j)
                              dst[j] += (gi[j] - dot * yv(i, j)) / norms[i];
                          }
                        });
}

Var bce_loss(Var probs, std::span<const double> labels) {
  const Matrix& p = probs.value();
  if (p.size() != labels.size() || p.cols() != 1) {
    fail(ErrorCode::LengthMismatch,
         fmt::format("bce_loss: {} scores vs {} labels", p.size(), labels.size()));
  }
  constexpr double kEps = 1e-12;
  const double n = static_cast<double>(labels.size());
  std::vector<double> y(labels.begin(), labels.end());
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double q = std::clamp(p(i, 0), kEps, 1.0 - kEps);
    loss -= y[i] * std::log(q) + (1.0 - y[i]) * std::log(1.0 - q);
  }
  Matrix out(1, 1, n > 0 ? loss / n : 0.0);
  return probs.tape->record(std::move(out), {probs}, [probs, y = std::move(y), n](Tape& t, const Matrix& g) {
    const Matrix& pv = t.value(probs);
    Matrix& gp = t.grad(probs);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double raw = pv(i, 0);
      if (raw < kEps || raw > 1.0 - kEps) continue;  // clamped: flat
      gp(i, 0) += g(0, 0) * (-(y[i] / raw) + (1.0 - y[i]) / (1.0 - raw)) / n;
    }
  });
}

}  // namespace linkbench::nn
