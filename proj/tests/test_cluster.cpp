#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rdpg/clt.hpp"
#include "rdpg/cluster.hpp"
#include "rdpg/model.hpp"
#include "rdpg/rng.hpp"

using namespace rdpg;

namespace {

struct Labelled {
  Matrix pts;
  std::vector<int> labels;
};

Labelled two_blobs(std::size_t n, double separation, double sd, std::uint64_t seed) {
  Rng rng(seed);
  Labelled out{Matrix(n, 2), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const int k = i < n / 2 ? 0 : 1;
    out.labels[i] = k;
    out.pts(i, 0) = k * separation + sd * rng.normal();
    out.pts(i, 1) = sd * rng.normal();
  }
  return out;
}

double objective_of(const Matrix& pts, const std::vector<int>& labels, std::size_t k) {
  Matrix c(k, pts.cols());
  std::vector<double> count(k, 0.0);
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    count[labels[i]] += 1;
    for (std::size_t j = 0; j < pts.cols(); ++j) c(labels[i], j) += pts(i, j);
  }
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t j = 0; j < pts.cols(); ++j) c(a, j) /= std::max(count[a], 1.0);
  double s = 0.0;
  for (std::size_t i = 0; i < pts.rows(); ++i)
    for (std::size_t j = 0; j < pts.cols(); ++j) s += std::pow(pts(i, j) - c(labels[i], j), 2);
  return s;
}

GaussianMixture two_block_limit(std::size_t n) {
  const auto dist = sbm_to_latent(Matrix{{0.42, 0.42}, {0.42, 0.5}}, {0.6, 0.4});
  GaussianMixture g;
  g.weights = dist.weights();
  for (std::size_t k = 0; k < 2; ++k) {
    const auto a = dist.atom(k);
    g.means.emplace_back(a.begin(), a.end());
    Matrix s = covariance_matrix(a, dist);
    s *= 1.0 / static_cast<double>(n);
    g.covariances.push_back(s);
  }
  return g;
}

}  // namespace

TEST(KMeans, SeparatedClouds) {
  const auto data = two_blobs(400, 100.0, 1.0, 1);
  const auto r = kmeans(data.pts, 2, 7);
  EXPECT_EQ(misclassification(r.labels, data.labels), 0.0);
  EXPECT_NEAR(r.objective, objective_of(data.pts, data.labels, 2), 1e-8);
}

TEST(KMeans, DegeneratePoints) {
  Matrix pts(50, 2);
  for (std::size_t i = 0; i < 50; ++i) pts(i, 0) = pts(i, 1) = 0.25;
  try {
    kmeans(pts, 2, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegeneratePoints);
  }
  EXPECT_THROW(kmeans(pts, 0, 1), Error);
}

TEST(KMeans, BeatsRandomAssignments) {
  Rng rng(3);
  for (std::uint64_t t = 0; t < 5; ++t) {
    const auto data = two_blobs(200, 1.5, 1.0, 10 + t);
    const auto r = kmeans(data.pts, 2, t);
    std::vector<int> random(200);
    for (int trial = 0; trial < 1000; ++trial) {
      for (auto& l : random) l = static_cast<int>(rng.below(2));
      EXPECT_LE(r.objective, objective_of(data.pts, random, 2) + 1e-9);
    }
  }
}

TEST(KMeans, ObjectiveNeverIncreases) {
  for (std::uint64_t t = 0; t < 10; ++t) {
    const auto data = two_blobs(300, 0.8, 1.0, 100 + t);
    const auto r = kmeans(data.pts, 3, t, 1);
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
      EXPECT_LE(r.objective_trace[i], r.objective_trace[i - 1] * (1 + 1e-12));
  }
}

TEST(Gmm, RecoversMeans) {
  Rng rng(5);
  const Matrix l0{{1.0, 0.0}, {0.6, 0.8}};
  const Matrix l1{{0.5, 0.0}, {-0.2, 0.3}};
  Matrix pts(5000, 2);
  for (std::size_t i = 0; i < 5000; ++i) {
    const bool first = rng.uniform() < 0.6;
    const double z0 = rng.normal(), z1 = rng.normal();
    const Matrix& l = first ? l0 : l1;
    pts(i, 0) = (first ? 0.0 : 4.0) + l(0, 0) * z0;
    pts(i, 1) = (first ? 0.0 : 3.0) + l(1, 0) * z0 + l(1, 1) * z1;
  }
  const auto fit = gmm_em(pts, 2, 9);
  EXPECT_TRUE(fit.converged);
  const std::size_t a = fit.model.means[0][0] < fit.model.means[1][0] ? 0 : 1;
  EXPECT_NEAR(fit.model.means[a][0], 0.0, 0.1);
  EXPECT_NEAR(fit.model.means[a][1], 0.0, 0.1);
  EXPECT_NEAR(fit.model.means[1 - a][0], 4.0, 0.1);
  EXPECT_NEAR(fit.model.means[1 - a][1], 3.0, 0.1);
  EXPECT_NEAR(fit.model.weights[a], 0.6, 0.03);
}

TEST(Gmm, SingleComponentIsSampleMoments) {
  const auto data = two_blobs(500, 2.0, 1.0, 6);
  const auto fit = gmm_em(data.pts, 1, 2);
  double m[2] = {0, 0};
  for (std::size_t i = 0; i < 500; ++i)
    for (std::size_t j = 0; j < 2; ++j) m[j] += data.pts(i, j) / 500.0;
  Matrix cov(2, 2);
  for (std::size_t i = 0; i < 500; ++i)
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = 0; b < 2; ++b) cov(a, b) += (data.pts(i, a) - m[a]) * (data.pts(i, b) - m[b]) / 500.0;
  EXPECT_NEAR(fit.model.means[0][0], m[0], 1e-12);
  EXPECT_NEAR(fit.model.means[0][1], m[1], 1e-12);
  EXPECT_LT(frobenius_norm(fit.model.covariances[0] - cov), 1e-8);
  EXPECT_DOUBLE_EQ(fit.model.weights[0], 1.0);
}

TEST(Gmm, DegeneratePoints) {
  Matrix pts(100, 2);
  try {
    gmm_em(pts, 2, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegeneratePoints);
  }
  EXPECT_THROW(gmm_em(Matrix(15, 2), 2, 1), Error);
}

TEST(Gmm, LogLikelihoodNonDecreasing) {
  for (std::uint64_t t = 0; t < 10; ++t) {
    const auto data = two_blobs(400, 1.0 + 0.3 * static_cast<double>(t), 1.0, 200 + t);
    const auto fit = gmm_em(data.pts, 2, t);
    const auto& ll = fit.log_likelihood_trace;
    ASSERT_FALSE(ll.empty());
    for (std::size_t i = 1; i < ll.size(); ++i) EXPECT_GE(ll[i], ll[i - 1] - 1e-9 * std::abs(ll[i - 1]));
  }
}

TEST(Misclassification, Examples) {
  const std::vector<int> t{0, 0, 1, 1};
  EXPECT_EQ(misclassification(t, t), 0.0);
  EXPECT_EQ(misclassification(std::vector<int>{1, 1, 0, 0}, t), 0.0);
  EXPECT_EQ(misclassification(std::vector<int>{1, 0, 0, 0}, t), 0.25);
  EXPECT_THROW(misclassification(std::vector<int>{0, 1}, t), Error);
  std::vector<int> many{0, 1, 2, 3, 4, 5, 6, 7, 8};
  try {
    misclassification(many, many);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooManyClasses);
  }
}

TEST(Misclassification, RandomGuessIsHalf) {
  Rng rng(8);
  std::vector<int> truth(10000), pred(10000);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = i % 2;
    pred[i] = static_cast<int>(rng.below(2));
  }
  EXPECT_NEAR(misclassification(pred, truth), 0.5, 0.02);
  EXPECT_LE(misclassification(pred, truth), 0.5);
}

TEST(BayesError, IdenticalComponents) {
  GaussianMixture g;
  g.weights = {0.5, 0.5};
  g.means = {{0.0, 0.0}, {0.0, 0.0}};
  g.covariances = {Matrix::identity(2), Matrix::identity(2)};
  const auto e = bayes_error(g, 200000, 4);
  EXPECT_NEAR(e.rate, 0.5, 3 * e.std_error);
}

TEST(BayesError, FarApartComponents) {
  GaussianMixture g;
  g.weights = {0.5, 0.5};
  g.means = {{0.0, 0.0}, {1000.0, 0.0}};
  g.covariances = {Matrix::identity(2), Matrix::identity(2)};
  EXPECT_EQ(bayes_error(g, 100000, 4).rate, 0.0);
  EXPECT_THROW(bayes_error(g, 99999, 4), Error);
}

TEST(BayesError, TwoBlockLimitMatchesReference) {
  // Independent numpy run with 1e7 draws: 0.0522115, standard error 7.03e-5.
  const double reference = 0.0522115, reference_se = 7.03e-5;
  const auto e = bayes_error(two_block_limit(1000), 1000000, 11);
  EXPECT_NEAR(e.rate, reference, 3 * std::hypot(e.std_error, reference_se));
}
