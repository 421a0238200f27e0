#include <gtest/gtest.h>

#include <cmath>

#include "metaemb/distance.hpp"
#include "metaemb/errors.hpp"
#include "metaemb/recon_loss.hpp"
#include "support/synthetic.hpp"

using namespace metaemb;

namespace {

constexpr ReconLossKind kAll[] = {ReconLossKind::MSE, ReconLossKind::MAE, ReconLossKind::KL, ReconLossKind::SCP};

RowVector row(std::initializer_list<double> v) {
  RowVector r(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) r(i++) = x;
  return r;
}

// Scalar KL(softmax(p) || softmax(q)) written out term by term.
double kl_oracle(const RowVector& p, const RowVector& q) {
  double zp = 0.0, zq = 0.0;
  for (Index j = 0; j < p.size(); ++j) {
    zp += std::exp(p(j));
    zq += std::exp(q(j));
  }
  double kl = 0.0;
  for (Index j = 0; j < p.size(); ++j) {
    const double pj = std::exp(p(j)) / zp, qj = std::exp(q(j)) / zq;
    kl += pj * std::log(pj / qj);
  }
  return kl;
}

}  // namespace

TEST(ReconLoss, IdenticalInputsGiveZero) {
  Matrix x = metaemb::testing::gaussian(5, 4, 1);
  for (auto k : kAll) EXPECT_NEAR(recon_loss(k, x, x).value, 0.0, 1e-12) << to_string(k);
}

TEST(ReconLoss, ScpAntiparallelIsFourPerRow) {
  Matrix t(2, 2);
  t << 1, 0, 0, 1;
  EXPECT_NEAR(recon_loss(ReconLossKind::SCP, -t, t).value, 8.0, 1e-12);
  EXPECT_NEAR(recon_loss_mean(ReconLossKind::SCP, -t, t).value, 4.0, 1e-12);
}

TEST(ReconLoss, ScaledPredictionScpZeroMsePositive) {
  Matrix t = metaemb::testing::gaussian(3, 4, 2);
  EXPECT_NEAR(recon_loss(ReconLossKind::SCP, 2.5 * t, t).value, 0.0, 1e-12);
  EXPECT_GT(recon_loss(ReconLossKind::MSE, 2.5 * t, t).value, 0.0);
}

TEST(ReconLoss, KlHandExample) {
  Matrix target(1, 2), pred(1, 2);
  target << 0, 0;
  pred << 1, 0;
  const double got = recon_loss(ReconLossKind::KL, pred, target).value;
  EXPECT_NEAR(got, kl_oracle(target.row(0), pred.row(0)), 1e-14);
  EXPECT_NEAR(got, 0.1201, 1e-4);
}

TEST(ReconLoss, KlNonNegativeAndAsymmetric) {
  Matrix a = metaemb::testing::gaussian(6, 3, 3), b = metaemb::testing::gaussian(6, 3, 4);
  EXPECT_GE(recon_loss(ReconLossKind::KL, a, b).value, 0.0);
  Matrix p(1, 3), q(1, 3);
  p << 2, 0, 0;
  q << 0, 0, 0;
  EXPECT_GT(std::abs(recon_loss(ReconLossKind::KL, p, q).value - recon_loss(ReconLossKind::KL, q, p).value), 1e-3);
  // Equal softmax rows (shifted logits) give zero.
  EXPECT_NEAR(recon_loss(ReconLossKind::KL, p.array() + 3.0, p).value, 0.0, 1e-12);
}

TEST(ReconLoss, ScpSymmetricAndScaleInvariant) {
  Matrix a = metaemb::testing::gaussian(5, 3, 5), b = metaemb::testing::gaussian(5, 3, 6);
  const double ab = recon_loss(ReconLossKind::SCP, a, b).value;
  EXPECT_NEAR(ab, recon_loss(ReconLossKind::SCP, b, a).value, 1e-12);
  EXPECT_NEAR(ab, recon_loss(ReconLossKind::SCP, 0.3 * a, b).value, 1e-12);
}

TEST(ReconLoss, ScpZeroRowThrows) {
  Matrix a = Matrix::Ones(2, 3), b = Matrix::Ones(2, 3);
  a.row(1).setZero();
  EXPECT_THROW(recon_loss(ReconLossKind::SCP, a, b), LossError);
  EXPECT_THROW(recon_loss(ReconLossKind::SCP, b, a), LossError);
}

TEST(ReconLoss, MseMaeValues) {
  Matrix p(2, 2), t = Matrix::Zero(2, 2);
  p << 1, -2, 3, 0;
  EXPECT_DOUBLE_EQ(recon_loss(ReconLossKind::MSE, p, t).value, (1 + 4 + 9) / 2.0);
  EXPECT_DOUBLE_EQ(recon_loss(ReconLossKind::MAE, p, t).value, (1 + 2 + 3) / 2.0);
  // Tie subgradient is zero.
  EXPECT_DOUBLE_EQ(recon_loss(ReconLossKind::MAE, p, t).grad(1, 1), 0.0);
}

TEST(ReconLoss, ShapeMismatchIsContractError) {
  EXPECT_THROW(recon_loss(ReconLossKind::MSE, Matrix::Zero(2, 3), Matrix::Zero(2, 2)), ContractError);
}

TEST(ReconLoss, ParseNames) {
  for (auto k : kAll) EXPECT_EQ(parse_recon_loss(to_string(k)), k);
  EXPECT_THROW(parse_recon_loss("huber"), ConfigError);
}

TEST(Distance, IdenticalInputsAreZero) {
  RowVector h = row({0.3, -1.2, 2.0});
  for (auto k : {DistanceKind::Manhattan, DistanceKind::Euclidean, DistanceKind::Cosine,
                 DistanceKind::AsymmetricCosine}) {
    EXPECT_NEAR(pair_distance(k, h, h), 0.0, 1e-12) << to_string(k);
  }
}

TEST(Distance, HandValues) {
  EXPECT_NEAR(pair_distance(DistanceKind::Cosine, row({1, 0}), row({0, 1})), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(pair_distance(DistanceKind::Manhattan, row({1, 2}), row({4, 0})), 5.0);
  EXPECT_DOUBLE_EQ(pair_distance(DistanceKind::Euclidean, row({1, 2}), row({4, 6})), 5.0);
}

TEST(Distance, AsymmetricCosineWitness) {
  const auto h1 = row({2, 0}), h2 = row({1, 0});
  EXPECT_NEAR(pair_distance(DistanceKind::AsymmetricCosine, h1, h2), 0.5, 1e-15);
  auto back = pair_distance_grad(DistanceKind::AsymmetricCosine, h2, h1);
  EXPECT_DOUBLE_EQ(back.value, 0.0);
  EXPECT_TRUE(back.clamped);
  EXPECT_FALSE(is_symmetric(DistanceKind::AsymmetricCosine));
  EXPECT_TRUE(is_symmetric(DistanceKind::Cosine));
}

TEST(Distance, ZeroNormCosineThrows) {
  EXPECT_THROW(pair_distance(DistanceKind::Cosine, row({0, 0}), row({1, 0})), DistanceError);
  EXPECT_THROW(pair_distance(DistanceKind::AsymmetricCosine, row({0, 0}), row({1, 0})), DistanceError);
}

TEST(Distance, GradientsMatchFiniteDifferences) {
  const RowVector a = row({0.7, -0.4, 1.1}), b = row({0.2, 0.9, -0.5});
  const double eps = 1e-6;
  for (auto k : {DistanceKind::Manhattan, DistanceKind::Euclidean, DistanceKind::Cosine,
                 DistanceKind::AsymmetricCosine}) {
    auto g = pair_distance_grad(k, a, b);
    for (Index j = 0; j < a.size(); ++j) {
      RowVector up = a, dn = a;
      up(j) += eps;
      dn(j) -= eps;
      const double num = (pair_distance(k, up, b) - pair_distance(k, dn, b)) / (2 * eps);
      EXPECT_NEAR(g.grad_a(j), num, 1e-7) << to_string(k) << " a" << j;
      up = b;
      dn = b;
      up(j) += eps;
      dn(j) -= eps;
      const double numb = (pair_distance(k, a, up) - pair_distance(k, a, dn)) / (2 * eps);
      EXPECT_NEAR(g.grad_b(j), numb, 1e-7) << to_string(k) << " b" << j;
    }
  }
}

TEST(Distance, SimilarityOrientation) {
  const auto a = row({1, 0}), near = row({0.9, 0.1}), far = row({-1, 0.2});
  for (auto k : {DistanceKind::Manhattan, DistanceKind::Euclidean, DistanceKind::Cosine,
                 DistanceKind::AsymmetricCosine}) {
    EXPECT_GT(pair_similarity(k, a, near), pair_similarity(k, a, far)) << to_string(k);
  }
}
