#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "rdpg/embed.hpp"
#include "rdpg/error.hpp"
#include "rdpg/linalg.hpp"
#include "rdpg/matrix.hpp"
#include "rdpg/model.hpp"
#include "rdpg/special.hpp"

namespace rdpg {

struct OneDimVariance {
  double sigma2;  // x E[X^3] - x^2 E[X^4]
  double scaled;  // sigma2 / delta^2, the limiting variance
};

inline OneDimVariance sigma2_one_dim(double x, const MomentSet& m) {
  if (!m.m3 || !m.m4 || m.delta.rows() != 1) {
    throw Error(ErrorKind::BadDimension, "one-dimensional variance needs d = 1 moments");
  }
  const double delta = m.delta(0, 0);
  OneDimVariance out{x * *m.m3 - x * x * *m.m4, 0.0};
  out.scaled = out.sigma2 / (delta * delta);
  if (!(out.scaled > 0.0)) {
    throw Error(ErrorKind::NonPositiveVariance, "limiting variance is not positive at x = " + std::to_string(x));
  }
  return out;
}

/// Limiting covariance of the scaled residual at latent position x:
/// Delta^{-1} E[X X^T (x.X - (x.X)^2)] Delta^{-1}, with the expectation an
/// exact sum over the atoms.
inline Matrix covariance_matrix(std::span<const double> x, const LatentDistribution& dist) {
  const std::size_t d = dist.dim();
  if (x.size() != d) throw Error(ErrorKind::BadDimension, "position dimension differs from the distribution");
  const MomentSet mom = moments(dist);
  const double top = std::abs(mom.delta_eigs.front());
  const double bottom = std::abs(mom.delta_eigs.back());
  if (!(bottom > 0.0) || top / bottom >= 1e12) {
    throw Error(ErrorKind::SingularDelta, "second moment matrix is singular or ill conditioned");
  }
  Matrix middle(d, d);
  for (std::size_t k = 0; k < dist.size(); ++k) {
    const auto a = dist.atom(k);
    const double ip = dot(x, a);
    const double c = dist.weights()[k] * (ip - ip * ip);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) middle(i, j) += c * a[i] * a[j];
  }
  const Matrix inv = inverse_spd(mom.delta);
  return symmetrized(inv * middle * inv);
}

/// Scaled residuals sqrt(n) (xhat W - X) after Procrustes alignment to the
/// true latent positions, grouped by block.
struct ResidualReport {
  Matrix residuals;  // n x d
  std::vector<int> labels;
  std::vector<std::size_t> block_counts;
  std::vector<Matrix> empirical_cov;    // per block, divisor n_k - 1
  std::vector<Matrix> theoretical_cov;  // per block, Sigma(x_k)
  std::vector<double> weights;          // mixture weights of the blocks
  Matrix alignment;                     // W
  std::map<std::string, double> diagnostics;
};

inline Matrix sample_covariance(const Matrix& rows, const std::vector<std::size_t>& index) {
  const std::size_t d = rows.cols();
  Matrix cov(d, d);
  if (index.size() < 2) return cov;
  std::vector<double> mean(d, 0.0);
  for (auto i : index)
    for (std::size_t c = 0; c < d; ++c) mean[c] += rows(i, c);
  for (auto& v : mean) v /= static_cast<double>(index.size());
  for (auto i : index)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) cov(a, b) += (rows(i, a) - mean[a]) * (rows(i, b) - mean[b]);
  cov *= 1.0 / static_cast<double>(index.size() - 1);
  return symmetrized(cov);
}

double mahalanobis_chisq_ks(const ResidualReport& report);

inline ResidualReport residual_report(const GraphSample& g, const Embedding& emb, const LatentDistribution& dist) {
  const std::size_t n = g.n;
  const std::size_t d = g.dim();
  if (emb.d != d || emb.xhat.rows() != n) {
    throw Error(ErrorKind::BadDimension, "embedding dimension differs from the latent dimension");
  }
  ResidualReport r;
  r.labels = g.labels;
  r.weights = dist.weights();
  r.alignment = procrustes(emb.xhat, g.latent);
  r.residuals = emb.xhat * r.alignment - g.latent;
  r.residuals *= std::sqrt(static_cast<double>(n));

  const std::size_t blocks = dist.size();
  std::vector<std::vector<std::size_t>> members(blocks);
  for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(g.labels[i])].push_back(i);
  for (std::size_t k = 0; k < blocks; ++k) {
    r.block_counts.push_back(members[k].size());
    r.empirical_cov.push_back(sample_covariance(r.residuals, members[k]));
    r.theoretical_cov.push_back(covariance_matrix(dist.atom(k), dist));
  }
  r.diagnostics["alignment_minus_identity"] = frobenius_norm(r.alignment - Matrix::identity(d));
  r.diagnostics["mahalanobis_ks"] = mahalanobis_chisq_ks(r);
  return r;
}

namespace detail {

inline std::vector<double> mahalanobis_values(const ResidualReport& report, const std::vector<std::size_t>& rows) {
  std::vector<Matrix> inv;
  for (const auto& s : report.theoretical_cov) {
    try {
      inv.push_back(inverse_spd(s));
    } catch (const Error&) {
      throw Error(ErrorKind::SingularSigma, "limiting covariance is not invertible");
    }
  }
  std::vector<double> q;
  q.reserve(rows.size());
  const std::size_t d = report.residuals.cols();
  for (auto i : rows) {
    const Matrix& s = inv[static_cast<std::size_t>(report.labels[i])];
    const auto r = report.residuals.row(i);
    double v = 0.0;
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) v += r[a] * s(a, b) * r[b];
    q.push_back(v);
  }
  return q;
}

inline std::vector<std::size_t> all_rows(const ResidualReport& report) {
  std::vector<std::size_t> rows(report.residuals.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

}  // namespace detail

/// KS distance between the squared Mahalanobis norms r_i^T Sigma(x_i)^{-1} r_i
/// and the chi-square law with d degrees of freedom.
inline double mahalanobis_chisq_ks(const ResidualReport& report) {
  const auto q = detail::mahalanobis_values(report, detail::all_rows(report));
  const double dof = static_cast<double>(report.residuals.cols());
  return ks_statistic(q, [dof](double v) { return chi_square_cdf(v, dof); });
}

inline double ks_normal_1d(std::span<const double> samples, double variance) {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw Error(ErrorKind::DomainError, "variance must be positive and finite");
  }
  return ks_statistic(samples, [variance](double z) { return normal_cdf(z, variance); });
}

/// Diagnostics restricted to the vertices whose block lies in a set B.
struct ConditionalView {
  std::set<int> blocks;
  std::vector<std::size_t> rows;
  std::vector<double> mixture_weights;  // prior weights renormalized over B, indexed by block
  double mahalanobis_ks = 0.0;
  std::vector<double> marginal_ks;      // per coordinate, against the normal mixture over B
  const ResidualReport* report = nullptr;

  /// Mixture CDF of coordinate `coord` over the blocks in B:
  /// sum_k w_k Phi(z, Sigma_k[coord][coord]).
  double mixture_cdf(double z, std::size_t coord) const {
    double f = 0.0;
    for (int k : blocks) {
      const auto kk = static_cast<std::size_t>(k);
      f += mixture_weights[kk] * normal_cdf(z, report->theoretical_cov[kk](coord, coord));
    }
    return f;
  }
};

inline ConditionalView conditional_report(const ResidualReport& report, const std::set<int>& blocks) {
  if (blocks.empty()) throw Error(ErrorKind::EmptyBlock, "block set is empty");
  ConditionalView v;
  v.report = &report;
  v.blocks = blocks;
  double mass = 0.0;
  for (int k : blocks) {
    if (k < 0 || static_cast<std::size_t>(k) >= report.block_counts.size()) {
      throw Error(ErrorKind::InvalidArgument, "block index out of range");
    }
    if (report.block_counts[static_cast<std::size_t>(k)] == 0) {
      throw Error(ErrorKind::EmptyBlock, "block " + std::to_string(k) + " has no vertices");
    }
    mass += report.weights[static_cast<std::size_t>(k)];
  }
  v.mixture_weights.assign(report.weights.size(), 0.0);
  for (int k : blocks) v.mixture_weights[static_cast<std::size_t>(k)] = report.weights[static_cast<std::size_t>(k)] / mass;
  for (std::size_t i = 0; i < report.labels.size(); ++i)
    if (blocks.count(report.labels[i])) v.rows.push_back(i);

  const auto q = detail::mahalanobis_values(report, v.rows);
  const double dof = static_cast<double>(report.residuals.cols());
  v.mahalanobis_ks = ks_statistic(q, [dof](double x) { return chi_square_cdf(x, dof); });

  for (std::size_t c = 0; c < report.residuals.cols(); ++c) {
    std::vector<double> col;
    col.reserve(v.rows.size());
    for (auto i : v.rows) col.push_back(report.residuals(i, c));
    v.marginal_ks.push_back(ks_statistic(col, [&](double z) { return v.mixture_cdf(z, c); }));
  }
  return v;
}

/// Largest absolute cross-correlation, across replicates, between the
/// residual coordinates of distinct pinned vertices. Each replicate is a
/// K x d matrix holding the residual rows of the K pinned vertices.
inline double pairwise_independence(const std::vector<Matrix>& replicates) {
  if (replicates.size() < 100) {
    throw Error(ErrorKind::TooFewReplicates, "need at least 100 replicates, got " + std::to_string(replicates.size()));
  }
  const std::size_t k = replicates.front().rows();
  const std::size_t d = replicates.front().cols();
  for (const auto& r : replicates)
    if (r.rows() != k || r.cols() != d) throw Error(ErrorKind::InvalidArgument, "replicate shapes differ");
  const std::size_t m = replicates.size();
  const std::size_t vars = k * d;
  std::vector<double> mean(vars, 0.0), sd(vars, 0.0);
  auto value = [&](std::size_t rep, std::size_t var) { return replicates[rep](var / d, var % d); };
  for (std::size_t v = 0; v < vars; ++v) {
    for (std::size_t r = 0; r < m; ++r) mean[v] += value(r, v);
    mean[v] /= static_cast<double>(m);
    for (std::size_t r = 0; r < m; ++r) sd[v] += (value(r, v) - mean[v]) * (value(r, v) - mean[v]);
    sd[v] = std::sqrt(sd[v]);
  }
  double worst = 0.0;
  for (std::size_t a = 0; a < vars; ++a)
    for (std::size_t b = a + 1; b < vars; ++b) {
      if (a / d == b / d) continue;
      double c = 0.0;
      for (std::size_t r = 0; r < m; ++r) c += (value(r, a) - mean[a]) * (value(r, b) - mean[b]);
      if (sd[a] > 0.0 && sd[b] > 0.0) worst = std::max(worst, std::abs(c / (sd[a] * sd[b])));
    }
  return worst;
}

/// 256 points on the `level` probability contour of N(center, sigma / n).
inline std::vector<std::array<double, 2>> level_curve(const Matrix& sigma, double level,
                                                      std::span<const double> center, double n) {
  if (sigma.rows() != 2 || sigma.cols() != 2 || center.size() != 2) {
    throw Error(ErrorKind::BadDimension, "level curves are two-dimensional");
  }
  if (!(n > 0.0)) throw Error(ErrorKind::DomainError, "scale n must be positive");
  const auto e = dense_symmetric_eigen(sigma);
  if (e.values.back() < -1e-10 * std::max(1.0, std::abs(e.values.front()))) {
    throw Error(ErrorKind::NotPSD, "covariance is not positive semidefinite");
  }
  const double radius = std::sqrt(chi_square2_quantile(level) / n);
  const Matrix root = sqrt_psd(sigma);
  std::vector<std::array<double, 2>> pts(256);
  for (std::size_t t = 0; t < pts.size(); ++t) {
    const double ang = 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(pts.size());
    const double u0 = radius * std::cos(ang);
    const double u1 = radius * std::sin(ang);
    pts[t] = {center[0] + root(0, 0) * u0 + root(0, 1) * u1, center[1] + root(1, 0) * u0 + root(1, 1) * u1};
  }
  return pts;
}

/// Whether `p` lies inside the `level` contour of N(center, sigma / n).
inline bool inside_level_curve(const Matrix& sigma_inverse, double level, std::span<const double> center,
                               std::span<const double> p, double n) {
  const double a = p[0] - center[0];
  const double b = p[1] - center[1];
  const double q = n * (a * a * sigma_inverse(0, 0) + 2.0 * a * b * sigma_inverse(0, 1) + b * b * sigma_inverse(1, 1));
  return q <= chi_square2_quantile(level);
}

}  // namespace rdpg
