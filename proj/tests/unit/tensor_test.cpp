#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "linkbench/optim.hpp"
#include "linkbench/tensor.hpp"

using namespace linkbench;
using namespace linkbench::nn;
using fixture::error_code;

namespace {

Matrix m(std::size_t r, std::size_t c, std::vector<double> v) { return Matrix(r, c, std::move(v)); }

Segments segs(std::vector<std::uint32_t> off, std::vector<std::uint32_t> mem) {
  return Segments{std::move(off), std::move(mem)};
}

}  // namespace

TEST(Tensor, SegmentMean) {
  Tape t;
  auto x = t.constant(m(2, 2, {2, 0, 0, 2}));
  auto y = segment_mean(x, segs({0, 2, 2}, {0, 1}));
  EXPECT_EQ(y.value(), m(2, 2, {1, 1, 0, 0}));
}

TEST(Tensor, SegmentSumAndSoftmax) {
  Tape t;
  auto x = t.constant(m(3, 1, {1, 2, 3}));
  auto s = segment_sum(x, segs({0, 3, 3}, {0, 1, 2}));
  EXPECT_EQ(s.value(), m(2, 1, {6, 0}));
  auto p = segment_softmax(x, segs({0, 2, 3}, {0, 1, 2}));
  EXPECT_NEAR(p.value()(0, 0), 1.0 / (1.0 + std::exp(1.0)), 1e-15);
  EXPECT_NEAR(p.value()(0, 0) + p.value()(1, 0), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(p.value()(2, 0), 1.0);
}

TEST(Tensor, MatmulShapes) {
  Tape t;
  auto a = t.constant(Matrix(2, 3, 1.0));
  auto b = t.constant(Matrix(3, 1, 2.0));
  auto c = matmul(a, b);
  EXPECT_EQ(c.rows(), 2u);
  EXPECT_EQ(c.cols(), 1u);
  EXPECT_DOUBLE_EQ(c.value()(1, 0), 6.0);
  EXPECT_EQ(error_code([&] { matmul(b, b); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(error_code([&] { add(a, b); }), ErrorCode::ShapeMismatch);
}

TEST(Tensor, Activations) {
  Tape t;
  auto x = t.constant(m(1, 3, {-1, 0, -3}));
  EXPECT_DOUBLE_EQ(leaky_relu(x, 0.01).value()(0, 0), -0.01);
  EXPECT_DOUBLE_EQ(sigmoid(x).value()(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(relu(x).value()(0, 2), 0.0);
  EXPECT_DOUBLE_EQ(sigmoid_value(0.0), 0.5);
}

TEST(Tensor, SigmoidStableAtExtremes) {
  EXPECT_TRUE(std::isfinite(sigmoid_value(-800.0)));
  EXPECT_DOUBLE_EQ(sigmoid_value(800.0), 1.0);
  Tape t;
  auto x = t.constant(m(2, 1, {50, -50}));
  auto p = sigmoid(x);
  const std::vector<double> y{0.0, 1.0};
  const double loss = bce_loss(p, y).value()(0, 0);
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_NEAR(loss, -std::log(1e-12), 1.0);
}

TEST(Tensor, BceValues) {
  Tape t;
  const std::vector<double> y{1, 0};
  EXPECT_NEAR(bce_loss(t.constant(m(2, 1, {0.5, 0.5})), y).value()(0, 0), std::log(2.0), 1e-12);
  EXPECT_NEAR(bce_loss(t.constant(m(2, 1, {1 - 1e-9, 1e-9})), y).value()(0, 0), 0.0, 1e-8);
  const std::vector<double> y0{0};
  EXPECT_NEAR(bce_loss(t.constant(m(1, 1, {0.9})), y0).value()(0, 0), -std::log(0.1), 1e-12);
  EXPECT_EQ(error_code([&] { bce_loss(t.constant(m(3, 1, {0.5, 0.5, 0.5})), y); }),
            ErrorCode::LengthMismatch);
}

TEST(Tensor, NonFiniteRejected) {
  Tape t;
  auto x = t.constant(m(1, 1, {1e308}));
  EXPECT_EQ(error_code([&] { scale(x, 1e10); }), ErrorCode::NonFinite);
}

TEST(Tensor, L2NormalizeRows) {
  Tape t;
  auto x = t.constant(m(2, 2, {3, 4, 0, 0}));
  auto y = l2_normalize_rows(x);
  EXPECT_NEAR(y.value()(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(y.value()(0, 1), 0.8, 1e-15);
  EXPECT_EQ(y.value()(1, 0), 0.0);
}

TEST(Tensor, GatherConcatRowwise) {
  Tape t;
  auto x = t.constant(m(3, 1, {1, 2, 3}));
  const std::vector<std::uint32_t> idx{2, 0, 2};
  EXPECT_EQ(gather_rows(x, idx).value(), m(3, 1, {3, 1, 3}));
  EXPECT_EQ(concat_cols(x, x).value(), m(3, 2, {1, 1, 2, 2, 3, 3}));
  EXPECT_EQ(concat_rows(x, x).rows(), 6u);
  EXPECT_EQ(rowwise_dot(x, x).value(), m(3, 1, {1, 4, 9}));
  EXPECT_EQ(mul_rows(x, x).value(), m(3, 1, {1, 4, 9}));
}

TEST(Tensor, BackwardThroughEveryOp) {
  // A closure touching all differentiable ops, checked against finite differences.
  ParamStore ps;
  Rng rng(4);
  auto& a = ps.add("a", glorot_uniform(4, 3, rng));
  auto& w = ps.add("w", glorot_uniform(3, 3, rng));
  auto& bias = ps.add("b", glorot_uniform(1, 3, rng));
  auto& att = ps.add("att", glorot_uniform(3, 1, rng));
  const Segments seg = segs({0, 2, 3, 4, 4}, {0, 1, 2, 3});
  const std::vector<std::uint32_t> idx{3, 1, 0, 2};
  const std::vector<std::uint32_t> tail{4, 5, 6, 7};
  const std::vector<double> y{1, 0, 1, 0};
  auto loss = [&](Tape& t) {
    auto h = add_bias(matmul(t.param(a), t.param(w)), t.param(bias));
    auto g = leaky_relu(add(h, scale(gather_rows(h, idx), 0.5)), 0.2);
    auto e = matmul(g, t.param(att));
    auto alpha = segment_softmax(e, seg);
    auto mixed = add(segment_sum(mul_rows(g, alpha), seg), segment_mean(relu(g), seg));
    auto n = l2_normalize_rows(add(mixed, t.constant(Matrix(4, 3, 0.1))));
    auto both = concat_cols(n, sigmoid(h));
    auto stacked = concat_rows(both, both);
    auto score = rowwise_dot(gather_rows(stacked, idx), gather_rows(stacked, tail));
    return bce_loss(sigmoid(score), y);
  };
  const auto r = grad_check(loss, ps);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_param << "[" << r.worst_index << "]";
  EXPECT_EQ(r.coords_checked, 12u + 9u + 3u + 3u);
}

TEST(Tensor, ParamStoreNames) {
  ParamStore ps;
  ps.add("x", Matrix(1, 1));
  EXPECT_EQ(error_code([&] { ps.add("x", Matrix(1, 1)); }), ErrorCode::ConfigInvalid);
  EXPECT_EQ(error_code([&] { ps.get("y"); }), ErrorCode::CheckpointMismatch);
  EXPECT_EQ(ps.find("y"), nullptr);
}

TEST(Tensor, NoGradTapeLeavesGradsUntouched) {
  ParamStore ps;
  auto& p = ps.add("p", Matrix(1, 1, 2.0));
  Tape t(false);
  auto v = t.param(p);
  EXPECT_FALSE(t.requires_grad(v));
  EXPECT_FALSE(p.has_grad);
}
