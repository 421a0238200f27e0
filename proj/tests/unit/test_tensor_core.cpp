#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "metaemb/errors.hpp"
#include "metaemb/recon_loss.hpp"
#include "metaemb/tensor_core.hpp"
#include "support/synthetic.hpp"

using namespace metaemb;

namespace {

FeedForwardNet single_layer(const Matrix& w, Activation act = Activation::Identity) {
  FeedForwardNet net;
  net.layers.push_back({w, RowVector::Zero(w.cols()), act});
  return net;
}

LossValue mse(const Matrix& out, const Batch& b) { return recon_loss(ReconLossKind::MSE, out, b.targets); }

}  // namespace

TEST(TensorCore, InitNormalZeroStdIsConstant) {
  Matrix m = init_normal(4, 5, 2.5, 0.0, 1);
  EXPECT_TRUE((m.array() == 2.5).all());
}

TEST(TensorCore, InitNormalSameSeedSameMatrix) {
  EXPECT_EQ(init_normal(7, 3, 0.0, 1.0, 7), init_normal(7, 3, 0.0, 1.0, 7));
  EXPECT_NE(init_normal(7, 3, 0.0, 1.0, 7), init_normal(7, 3, 0.0, 1.0, 8));
}

TEST(TensorCore, InitNormalMoments) {
  Matrix m = init_normal(1000, 1000, 0.0, 1.0, 42);
  const double n = static_cast<double>(m.size());
  const double mean = m.sum() / n;
  const double var = (m.array() - mean).square().sum() / (n - 1.0);
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(std::sqrt(var), 1.0, 0.01);
}

TEST(TensorCore, IdentityNetEchoesInput) {
  auto net = single_layer(Matrix::Identity(3, 3));
  Matrix x = metaemb::testing::gaussian(4, 3, 5);
  EXPECT_EQ(predict(net, x), x);
}

TEST(TensorCore, TanhOfZeroIsZero) {
  auto net = single_layer(metaemb::testing::gaussian(3, 4, 5), Activation::Tanh);
  EXPECT_TRUE(predict(net, Matrix::Zero(2, 3)).isZero());
}

TEST(TensorCore, EvalModeIgnoresRng) {
  Rng init(1);
  auto net = make_net({4, 6, 4}, {Activation::Tanh, Activation::Identity}, 0.5, 0.0, 1.0, init);
  Matrix x = metaemb::testing::gaussian(3, 4, 2);
  Rng r1(10), r2(99);
  EXPECT_EQ(forward(net, x, false, &r1).output(), forward(net, x, false, &r2).output());
}

TEST(TensorCore, DimensionMismatchIsContractError) {
  auto net = single_layer(Matrix::Identity(3, 3));
  EXPECT_THROW(predict(net, Matrix::Zero(2, 4)), ContractError);
}

TEST(TensorCore, TanhOutputsBounded) {
  Rng init(3);
  auto net = make_net({5, 8}, {Activation::Tanh}, 0.0, 0.0, 10.0, init);
  Matrix y = predict(net, metaemb::testing::gaussian(50, 5, 4, 10.0));
  EXPECT_LE(y.cwiseAbs().maxCoeff(), 1.0);
}

TEST(TensorCore, InvertedDropoutPreservesExpectation) {
  Rng init(4);
  auto net = make_net({5, 6, 2}, {Activation::Tanh, Activation::Identity}, 0.2, 0.0, 1.0, init);
  Matrix x = metaemb::testing::gaussian(1, 5, 6);
  const Matrix clean = forward(net, x, false, nullptr).outputs[1];
  Matrix sum = Matrix::Zero(1, 6);
  Rng rng(7);
  const int passes = 20000;
  for (int i = 0; i < passes; ++i) sum += forward(net, x, true, &rng).outputs[1];
  const Matrix mean = sum / passes;
  for (Index j = 0; j < 6; ++j) EXPECT_NEAR(mean(0, j), clean(0, j), 0.02 * std::abs(clean(0, j)) + 1e-3);
}

TEST(TensorCore, ZeroLossGradGivesZeroGradients) {
  Rng init(5);
  auto net = make_net({3, 4, 2}, {Activation::Tanh, Activation::Identity}, 0.0, 0.0, 1.0, init);
  auto acts = forward(net, metaemb::testing::gaussian(2, 3, 1), false, nullptr);
  auto g = backward(net, acts, Matrix::Zero(2, 2));
  for (const auto& w : g.weight) EXPECT_TRUE(w.isZero());
  for (const auto& b : g.bias) EXPECT_TRUE(b.isZero());
}

TEST(TensorCore, LinearMseGradientClosedForm) {
  // 2x2 instance: dL/dW = 2 X^T (XW - Y) / M.
  Matrix w(2, 2), x(2, 2), y(2, 2);
  w << 1, 2, 3, 4;
  x << 1, 0, 1, 1;
  y << 0, 1, 2, 3;
  auto net = single_layer(w);
  auto acts = forward(net, x, false, nullptr);
  auto g = backward(net, acts, recon_loss(ReconLossKind::MSE, acts.output(), y).grad);
  Matrix expected(2, 2);
  // XW = [[1,2],[4,6]], residual [[1,1],[2,3]], X^T r = [[3,4],[2,3]], times 2/2.
  expected << 3, 4, 2, 3;
  EXPECT_LT((g.weight[0] - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TensorCore, FiniteDiffLinearMse) {
  auto net = single_layer(metaemb::testing::gaussian(4, 3, 8));
  Batch b{metaemb::testing::gaussian(4, 4, 9), metaemb::testing::gaussian(4, 3, 10)};
  EXPECT_LT(finite_diff_check(net, mse, b, 1e-5).max_relative_error, 1e-6);
}

TEST(TensorCore, FiniteDiffTanhScpWithDropout) {
  Rng init(11);
  auto net = make_net({5, 7, 5}, {Activation::Tanh, Activation::Identity}, 0.2, 0.0, 1.0, init);
  Batch b{metaemb::testing::gaussian(4, 5, 12), metaemb::testing::gaussian(4, 5, 13)};
  auto scp = [](const Matrix& out, const Batch& bb) { return recon_loss(ReconLossKind::SCP, out, bb.targets); };
  EXPECT_LT(finite_diff_check(net, scp, b, 1e-5, 3).max_relative_error, 1e-4);
}

TEST(TensorCore, FiniteDiffSoftmaxKl) {
  Rng init(14);
  auto net = make_net({4, 6, 4}, {Activation::Tanh, Activation::Identity}, 0.0, 0.0, 1.0, init);
  Batch b{metaemb::testing::gaussian(3, 4, 15), metaemb::testing::gaussian(3, 4, 16)};
  auto kl = [](const Matrix& out, const Batch& bb) { return recon_loss(ReconLossKind::KL, out, bb.targets); };
  EXPECT_LT(finite_diff_check(net, kl, b, 1e-5).max_relative_error, 1e-4);
}

TEST(TensorCore, SgdStepArithmetic) {
  Matrix w(1, 1);
  w << 1.0;
  auto net = single_layer(w);
  auto g = Gradients::zeros_like(net);
  g.weight[0](0, 0) = 0.5;
  sgd_step(net, g, 0.1);
  EXPECT_DOUBLE_EQ(net.layers[0].weight(0, 0), 0.95);
  sgd_step(net, g, 0.0);
  EXPECT_DOUBLE_EQ(net.layers[0].weight(0, 0), 0.95);
}

TEST(TensorCore, TwoHalfStepsEqualOneStep) {
  auto a = single_layer(metaemb::testing::gaussian(3, 2, 1));
  auto b = a;
  auto g = Gradients::zeros_like(a);
  g.weight[0] = metaemb::testing::gaussian(3, 2, 2);
  g.bias[0] = RowVector::Constant(2, 0.25);
  sgd_step(a, g, 0.05);
  sgd_step(a, g, 0.05);
  sgd_step(b, g, 0.1);
  EXPECT_LT((a.layers[0].weight - b.layers[0].weight).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((a.layers[0].bias - b.layers[0].bias).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(TensorCore, NonFiniteGradientNamesLayerAndLeavesNet) {
  Rng init(2);
  auto net = make_net({2, 3, 2}, {Activation::Tanh, Activation::Identity}, 0.0, 0.0, 1.0, init);
  const auto before = net.layers[0].weight;
  auto g = Gradients::zeros_like(net);
  g.bias[1](0) = std::numeric_limits<double>::quiet_NaN();
  try {
    sgd_step(net, g, 0.1, "encoder");
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("encoder"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
  }
  EXPECT_EQ(net.layers[0].weight, before);
}

TEST(TensorCore, RelativeErrorFloor) {
  EXPECT_DOUBLE_EQ(relative_gradient_error(1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_gradient_error(1.0, 0.0), 1.0);
  EXPECT_LT(relative_gradient_error(0.0, 1e-11), 1e-4);
}

TEST(TensorCore, DeriveSeedIsStableAndLabelled) {
  EXPECT_EQ(derive_seed(13, "caeme"), derive_seed(13, "caeme"));
  EXPECT_NE(derive_seed(13, "caeme"), derive_seed(13, "daeme"));
  EXPECT_NE(derive_seed(13, "caeme"), derive_seed(14, "caeme"));
}

TEST(TensorCore, SplitIndicesPartition) {
  auto s = split_indices(100, 0.1, 5);
  EXPECT_EQ(s.validation.size(), 10u);
  EXPECT_EQ(s.train.size(), 90u);
  std::vector<bool> seen(100, false);
  for (auto i : s.train) seen[static_cast<std::size_t>(i)] = true;
  for (auto i : s.validation) {
    EXPECT_FALSE(seen[static_cast<std::size_t>(i)]);
    seen[static_cast<std::size_t>(i)] = true;
  }
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
  EXPECT_EQ(split_indices(100, 0.1, 5).validation, s.validation);
}

TEST(TensorCore, FitRestoresBestModelAndIsReproducible) {
  // Scalar model whose validation loss is minimized at epoch 3.
  struct Counter {
    int steps = 0;
  };
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.early_stop_patience = 2;
  cfg.batch_size = 100;
  auto split = split_indices(20, 0.1, 1);
  std::function<double(Counter&, const IndexList&, Rng&)> step = [](Counter& c, const IndexList&, Rng&) {
    ++c.steps;
    return 1.0;
  };
  std::function<double(const Counter&, const IndexList&)> val = [](const Counter& c, const IndexList&) {
    return std::abs(c.steps - 3.0);
  };
  Counter c;
  auto h = fit<Counter>(c, split, cfg, 1, step, val);
  EXPECT_EQ(h.best_epoch, 3);
  EXPECT_EQ(c.steps, 3);
  EXPECT_TRUE(h.stopped_early);
  EXPECT_DOUBLE_EQ(h.best_validation_loss(), 0.0);
  for (const auto& e : h.epochs) EXPECT_GE(e.validation_loss, h.best_validation_loss());
}

TEST(TensorCore, FitNonFiniteLossThrows) {
  struct M {};
  TrainConfig cfg;
  cfg.epochs = 3;
  auto split = split_indices(10, 0.1, 1);
  std::function<double(M&, const IndexList&, Rng&)> step = [](M&, const IndexList&, Rng&) { return 0.0; };
  std::function<double(const M&, const IndexList&)> val = [](const M&, const IndexList&) {
    return std::numeric_limits<double>::infinity();
  };
  M m;
  EXPECT_THROW(fit<M>(m, split, cfg, 1, step, val), TrainingError);
}
