#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rdpg/rng.hpp"
#include "rdpg/special.hpp"

using namespace rdpg;

// Reference values from scipy.stats / scipy.special.

TEST(Special, NormalCdf) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-16);
  EXPECT_NEAR(normal_cdf(1.3, 2.0), 0.8210146636778359, 1e-14);
  EXPECT_NEAR(normal_cdf(-9.0), 1.1285884059538324e-19, 1e-30);
}

TEST(Special, RegularizedGamma) {
  EXPECT_NEAR(regularized_gamma_p(0.5, 0.1), 0.34527915398142317, 1e-13);
  EXPECT_NEAR(regularized_gamma_p(7.5, 3.0), 0.020252253282186623, 1e-13);
  EXPECT_NEAR(regularized_gamma_p(2.0, 20.0), 0.9999999567157739, 1e-13);
}

TEST(Special, ChiSquare) {
  EXPECT_NEAR(chi_square_cdf(3.0, 3), 0.6083748237289109, 1e-13);
  EXPECT_NEAR(chi_square_cdf(0.5, 1), 0.5204998778130466, 1e-13);
  EXPECT_NEAR(chi_square_cdf(40, 25), 0.9708356043768479, 1e-12);
  EXPECT_NEAR(chi_square_cdf(2, 2), 0.6321205588285577, 1e-14);
  EXPECT_EQ(chi_square_cdf(-1, 2), 0.0);
  EXPECT_NEAR(chi_square2_quantile(0.95), 5.991464547107979, 1e-13);
  EXPECT_NEAR(chi_square_cdf(chi_square2_quantile(0.3), 2), 0.3, 1e-14);
  EXPECT_THROW(chi_square2_quantile(1.0), Error);
}

TEST(Special, KsStatistic) {
  const std::vector<double> s{0.1, -0.4, 1.2, 0.3, -2.0};
  EXPECT_NEAR(ks_statistic(s, [](double z) { return normal_cdf(z); }), 0.18208857781104748, 1e-14);
  EXPECT_THROW(ks_statistic(std::vector<double>{}, [](double) { return 0.0; }), Error);
}

TEST(Special, KsOfMatchingSampleIsSmall) {
  Rng rng(12);
  std::vector<double> s(20000);
  for (auto& v : s) v = 1.5 * rng.normal();
  // 1.63 / sqrt(n) is the 1% critical value
  EXPECT_LT(ks_statistic(s, [](double z) { return normal_cdf(z, 2.25); }), 1.63 / std::sqrt(20000.0));
  EXPECT_GT(ks_statistic(s, [](double z) { return normal_cdf(z, 1.0); }), 0.05);
}
