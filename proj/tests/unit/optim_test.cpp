#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "fixtures.hpp"
#include "linkbench/optim.hpp"

using namespace linkbench;
using namespace linkbench::nn;
using fixture::error_code;

namespace {

/// f(theta) = theta^2 / 2 summed over entries, so the gradient is theta.
void half_square_backward(ParamStore& ps, Param& p) {
  ps.zero_grad();
  Tape t;
  auto v = t.param(p);
  t.backward(scale(rowwise_dot(v, v), 0.5));
}

/// Hand-evaluated Adam recurrences for the scalar case.
double adam_reference(double theta, double lr, double wd, int steps) {
  double m = 0.0, v = 0.0;
  for (int t = 1; t <= steps; ++t) {
    const double g = theta;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1.0 - std::pow(0.9, t));
    const double vhat = v / (1.0 - std::pow(0.999, t));
    theta -= lr * (mhat / (std::sqrt(vhat) + 1e-8) + wd * theta);
  }
  return theta;
}

}  // namespace

TEST(Adam, FirstStepMovesByLr) {
  ParamStore ps;
  auto& p = ps.add("theta", Matrix(1, 1, 1.0));
  Adam opt(ps, {.lr = 0.1});
  half_square_backward(ps, p);
  opt.step();
  EXPECT_NEAR(p.value(0, 0), 0.9, 1e-7);
  EXPECT_EQ(opt.steps(), 1u);
}

TEST(Adam, MatchesReferenceRecurrence) {
  ParamStore ps;
  auto& p = ps.add("theta", Matrix(1, 1, 1.5));
  Adam opt(ps, {.lr = 0.05, .weight_decay = 0.01});
  for (int i = 0; i < 25; ++i) {
    half_square_backward(ps, p);
    opt.step();
  }
  EXPECT_NEAR(p.value(0, 0), adam_reference(1.5, 0.05, 0.01, 25), 1e-12);
}

TEST(Adam, ZeroGradientZeroDecayKeepsParams) {
  ParamStore ps;
  auto& p = ps.add("theta", Matrix(2, 2, 0.7));
  p.grad = Matrix(2, 2, 0.0);
  p.has_grad = true;
  Adam opt(ps, {.lr = 0.1});
  opt.step();
  EXPECT_EQ(p.value, Matrix(2, 2, 0.7));
}

TEST(Adam, ZeroLrKeepsParams) {
  ParamStore ps;
  auto& p = ps.add("theta", Matrix(1, 3, 0.3));
  Adam opt(ps, {.lr = 0.0, .weight_decay = 0.5});
  for (int i = 0; i < 3; ++i) {
    half_square_backward(ps, p);
    opt.step();
  }
  EXPECT_EQ(p.value, Matrix(1, 3, 0.3));
}

TEST(Adam, IdenticalRunsIdenticalTrajectories) {
  auto run = [] {
    ParamStore ps;
    Rng rng(12);
    auto& p = ps.add("w", glorot_uniform(1, 4, rng));
    Adam opt(ps, {.lr = 0.01});
    for (int i = 0; i < 5; ++i) {
      ps.zero_grad();
      Tape t;
      auto v = t.param(p);
      t.backward(scale(rowwise_dot(v, v), 0.5));
      opt.step();
    }
    return p.value;
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, MissingGradient) {
  ParamStore ps;
  ps.add("theta", Matrix(1, 1, 1.0));
  Adam opt(ps, {});
  EXPECT_EQ(error_code([&] { opt.step(); }), ErrorCode::MissingGradient);
}

TEST(Adam, FrozenParamsDoNotMove) {
  ParamStore ps;
  auto& p = ps.add("theta", Matrix(1, 1, 1.0));
  auto& frozen = ps.add("frozen", Matrix(1, 1, 2.0), false);
  Adam opt(ps, {.lr = 0.1});
  ps.zero_grad();
  Tape t;
  auto a = t.param(p), b = t.param(frozen);
  t.backward(rowwise_dot(a, b));
  opt.step();
  EXPECT_NE(p.value(0, 0), 1.0);
  EXPECT_EQ(frozen.value(0, 0), 2.0);
}

TEST(GradCheck, LinearLayerWithBce) {
  ParamStore ps;
  Rng rng(2);
  auto& w = ps.add("w", glorot_uniform(3, 1, rng));
  auto& b = ps.add("b", Matrix(1, 1, 0.1));
  const Matrix x(4, 3, {0.5, -1, 2, 1, 0, -0.5, -2, 1, 0.3, 0.1, 0.2, 0.3});
  const std::vector<double> y{1, 0, 0, 1};
  const auto r = grad_check(
      [&](Tape& t) { return bce_loss(sigmoid(add_bias(matmul(t.constant(x), t.param(w)), t.param(b))), y); },
      ps);
  EXPECT_LT(r.max_rel_error, 1e-4);
  EXPECT_EQ(r.coords_checked, 4u);
}

TEST(GradCheck, ConstantClosureHasZeroGradients) {
  ParamStore ps;
  ps.add("w", Matrix(2, 2, 1.0));
  const auto r = grad_check([](Tape& t) { return t.constant(Matrix(1, 1, 3.0)); }, ps);
  EXPECT_EQ(r.max_rel_error, 0.0);
  EXPECT_EQ(r.analytic, 0.0);
  EXPECT_EQ(r.numeric, 0.0);
}

TEST(GradCheck, DetectsWrongGradient) {
  // A loss whose backward is deliberately wrong must be caught.
  ParamStore ps;
  auto& p = ps.add("p", Matrix(1, 1, 0.8));
  auto bad_square = [&](Tape& t) {
    Var v = t.param(p);
    Matrix out(1, 1, v.value()(0, 0) * v.value()(0, 0));
    return t.record(out, {v}, [v](Tape& tape, const Matrix& g) {
      tape.grad(v)(0, 0) += g(0, 0) * v.value()(0, 0);  // should be 2x
    });
  };
  EXPECT_GT(grad_check(bad_square, ps).max_rel_error, 0.4);
}

TEST(Checkpoint, RoundTrip) {
  ParamStore ps;
  Rng rng(3);
  ps.add("a", glorot_uniform(3, 2, rng));
  ps.add("b.c", Matrix(1, 4, -1e-300));
  const auto dir = fixture::temp_dir("ckpt");
  save_checkpoint(dir / "c.bin", ps, {{"model", "gin_cp"}, {"note", "two words"}});
  const auto ck = load_checkpoint(dir / "c.bin");
  EXPECT_EQ(ck.meta.at("model"), "gin_cp");
  EXPECT_EQ(ck.meta.at("note"), "two words");
  ASSERT_EQ(ck.tensors.size(), 2u);
  EXPECT_EQ(ck.tensors[0].second, ps.get("a").value);

  ParamStore other;
  other.add("a", Matrix(3, 2));
  other.add("b.c", Matrix(1, 4));
  apply_checkpoint(ck, other);
  EXPECT_EQ(other.get("a").value, ps.get("a").value);
  EXPECT_EQ(other.get("b.c").value, ps.get("b.c").value);
}

TEST(Checkpoint, Mismatches) {
  ParamStore ps;
  ps.add("a", Matrix(2, 2, 1.0));
  const auto dir = fixture::temp_dir("ckpt_bad");
  save_checkpoint(dir / "c.bin", ps, {});
  const auto ck = load_checkpoint(dir / "c.bin");

  ParamStore shape;
  shape.add("a", Matrix(2, 3));
  EXPECT_EQ(error_code([&] { apply_checkpoint(ck, shape); }), ErrorCode::CheckpointMismatch);
  ParamStore name;
  name.add("z", Matrix(2, 2));
  EXPECT_EQ(error_code([&] { apply_checkpoint(ck, name); }), ErrorCode::CheckpointMismatch);

  auto bytes = fixture::read_file(dir / "c.bin");
  std::ofstream(dir / "trunc.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
  EXPECT_EQ(error_code([&] { load_checkpoint(dir / "trunc.bin"); }), ErrorCode::CheckpointMismatch);
  std::ofstream(dir / "extra.bin", std::ios::binary) << bytes << "x";
  EXPECT_EQ(error_code([&] { load_checkpoint(dir / "extra.bin"); }), ErrorCode::CheckpointMismatch);
  std::ofstream(dir / "junk.bin", std::ios::binary) << "hello\n";
  EXPECT_EQ(error_code([&] { load_checkpoint(dir / "junk.bin"); }), ErrorCode::CheckpointMismatch);
}
