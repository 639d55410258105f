#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include "rdpg/error.hpp"
#include "rdpg/linalg.hpp"
#include "rdpg/matrix.hpp"
#include "rdpg/rng.hpp"

namespace rdpg {

struct KMeansResult {
  std::vector<int> labels;
  Matrix centers;  // K x d
  double objective = 0.0;  // within-cluster sum of squares
  std::vector<double> objective_trace;  // per Lloyd iteration, winning restart
  std::size_t iterations = 0;
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

inline std::size_t count_distinct_rows(const Matrix& pts, std::size_t stop_at) {
  std::vector<std::size_t> reps;
  for (std::size_t i = 0; i < pts.rows() && reps.size() < stop_at; ++i) {
    bool seen = false;
    for (auto r : reps)
      if (std::equal(pts.row(i).begin(), pts.row(i).end(), pts.row(r).begin())) {
        seen = true;
        break;
      }
    if (!seen) reps.push_back(i);
  }
  return reps.size();
}

inline KMeansResult lloyd_once(const Matrix& pts, std::size_t k, Rng& rng, std::size_t max_iter) {
  const std::size_t n = pts.rows();
  const std::size_t d = pts.cols();
  KMeansResult r;
  r.centers = Matrix(k, d);

  // k-means++ seeding
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = static_cast<std::size_t>(rng.below(n));
  std::copy(pts.row(first).begin(), pts.row(first).end(), r.centers.row(0).begin());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(pts.row(i), r.centers.row(c - 1)));
      total += d2[i];
    }
    double u = rng.uniform() * total;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      u -= d2[i];
      if (u < 0.0 && d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
    std::copy(pts.row(pick).begin(), pts.row(pick).end(), r.centers.row(c).begin());
  }

  r.labels.assign(n, -1);
  for (std::size_t it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = squared_distance(pts.row(i), r.centers.row(0));
      for (std::size_t c = 1; c < k; ++c) {
        const double dd = squared_distance(pts.row(i), r.centers.row(c));
        if (dd < bd) {
          bd = dd;
          best = static_cast<int>(c);
        }
      }
      if (r.labels[i] != best) {
        r.labels[i] = best;
        changed = true;
      }
    }
    ++r.iterations;
    if (!changed && it > 0) break;
    Matrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(r.labels[i]);
      ++counts[c];
      for (std::size_t j = 0; j < d; ++j) sums(c, j) += pts(i, j);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its center
      for (std::size_t j = 0; j < d; ++j) r.centers(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      obj += squared_distance(pts.row(i), r.centers.row(static_cast<std::size_t>(r.labels[i])));
    r.objective_trace.push_back(obj);
  }
  r.objective = r.objective_trace.empty() ? 0.0 : r.objective_trace.back();
  return r;
}

}  // namespace detail

/// k-means++ seeding followed by Lloyd iterations; the best of `restarts`
/// independently seeded runs by final objective.
inline KMeansResult kmeans(const Matrix& pts, std::size_t k, std::uint64_t seed, std::size_t restarts = 10,
                           std::size_t max_iter = 300) {
  if (k == 0 || pts.rows() < k) throw Error(ErrorKind::InvalidArgument, "k-means needs 1 <= K <= n");
  if (detail::count_distinct_rows(pts, k) < k) {
    throw Error(ErrorKind::DegeneratePoints, "fewer distinct points than clusters");
  }
  KMeansResult best;
  bool have = false;
  for (std::size_t r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, {r}));
    auto run = detail::lloyd_once(pts, k, rng, max_iter);
    if (!have || run.objective < best.objective) {
      best = std::move(run);
      have = true;
    }
  }
  return best;
}

/// Weighted mixture of full-covariance Gaussians.
struct GaussianMixture {
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  std::vector<Matrix> covariances;

  std::size_t size() const noexcept { return weights.size(); }
  std::size_t dim() const noexcept { return means.empty() ? 0 : means.front().size(); }
};

namespace detail {

/// Cholesky factors and log normalizers cached for density evaluation.
struct PreparedMixture {
  std::vector<Matrix> chol;
  std::vector<double> log_norm;  // log w_k - 0.5 log det(2 pi Sigma_k)

  explicit PreparedMixture(const GaussianMixture& g) {
    const double d = static_cast<double>(g.dim());
    for (std::size_t k = 0; k < g.size(); ++k) {
      chol.push_back(cholesky(g.covariances[k]));
      double logdet = 0.0;
      for (std::size_t i = 0; i < g.dim(); ++i) logdet += 2.0 * std::log(chol.back()(i, i));
      log_norm.push_back(std::log(g.weights[k]) - 0.5 * (d * std::log(2.0 * std::numbers::pi) + logdet));
    }
  }

  // log w_k + log N(x; mu_k, Sigma_k)
  double log_weighted_density(const GaussianMixture& g, std::size_t k, std::span<const double> x) const {
    const std::size_t d = x.size();
    const Matrix& l = chol[k];
    double q = 0.0;
    double z[16];
    std::vector<double> big;
    double* zp = z;
    if (d > 16) {
      big.resize(d);
      zp = big.data();
    }
    for (std::size_t i = 0; i < d; ++i) {
      double s = x[i] - g.means[k][i];
      for (std::size_t j = 0; j < i; ++j) s -= l(i, j) * zp[j];
      zp[i] = s / l(i, i);
      q += zp[i] * zp[i];
    }
    return log_norm[k] - 0.5 * q;
  }
};

}  // namespace detail

struct GmmFit {
  GaussianMixture model;
  std::vector<int> labels;
  std::vector<double> log_likelihood_trace;
  bool converged = false;
};

/// Full-covariance EM initialised from k-means. Every covariance gets a
/// ridge of 1e-9 * trace(data covariance) / d on its diagonal.
inline GmmFit gmm_em(const Matrix& pts, std::size_t k, std::uint64_t seed, std::size_t max_iter = 500,
                     double gain_tol = 1e-8) {
  const std::size_t n = pts.rows();
  const std::size_t d = pts.cols();
  if (k == 0 || n < 10 * k) throw Error(ErrorKind::InvalidArgument, "EM needs at least 10 points per component");
  if (detail::count_distinct_rows(pts, std::max<std::size_t>(k, 2)) < std::max<std::size_t>(k, 2)) {
    throw Error(ErrorKind::DegeneratePoints, "points are degenerate");
  }

  std::vector<double> gmean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) gmean[j] += pts(i, j);
  for (auto& v : gmean) v /= static_cast<double>(n);
  double total_var = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) total_var += (pts(i, j) - gmean[j]) * (pts(i, j) - gmean[j]);
  const double ridge = 1e-9 * total_var / static_cast<double>(n) / static_cast<double>(d);

  // responsibilities, n x k
  Matrix resp(n, k);
  const auto km = kmeans(pts, k, seed);
  for (std::size_t i = 0; i < n; ++i) resp(i, static_cast<std::size_t>(km.labels[i])) = 1.0;

  GmmFit fit;
  auto m_step = [&]() {
    GaussianMixture g;
    for (std::size_t c = 0; c < k; ++c) {
      double nk = 0.0;
      std::vector<double> mu(d, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        nk += resp(i, c);
        for (std::size_t j = 0; j < d; ++j) mu[j] += resp(i, c) * pts(i, j);
      }
      if (!(nk > 0.0)) throw Error(ErrorKind::DegeneratePoints, "mixture component lost all support");
      for (auto& v : mu) v /= nk;
      Matrix cov(d, d);
      for (std::size_t i = 0; i < n; ++i) {
        const double w = resp(i, c);
        if (w == 0.0) continue;
        for (std::size_t a = 0; a < d; ++a)
          for (std::size_t b = 0; b <= a; ++b) cov(a, b) += w * (pts(i, a) - mu[a]) * (pts(i, b) - mu[b]);
      }
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b <= a; ++b) {
          cov(a, b) /= nk;
          cov(b, a) = cov(a, b);
        }
        cov(a, a) += ridge;
      }
      g.weights.push_back(nk / static_cast<double>(n));
      g.means.push_back(std::move(mu));
      g.covariances.push_back(std::move(cov));
    }
    return g;
  };

  auto e_step = [&](const GaussianMixture& g) {
    const detail::PreparedMixture prep(g);
    double ll = 0.0;
    std::vector<double> lp(k);
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        lp[c] = prep.log_weighted_density(g, c, pts.row(i));
        mx = std::max(mx, lp[c]);
      }
      double s = 0.0;
      for (std::size_t c = 0; c < k; ++c) s += std::exp(lp[c] - mx);
      const double lse = mx + std::log(s);
      ll += lse;
      for (std::size_t c = 0; c < k; ++c) resp(i, c) = std::exp(lp[c] - lse);
    }
    return ll;
  };

  fit.model = m_step();
  for (std::size_t it = 0; it < max_iter; ++it) {
    const double ll = e_step(fit.model);
    if (!fit.log_likelihood_trace.empty()) {
      const double prev = fit.log_likelihood_trace.back();
      if (ll < prev - 1e-9 * std::abs(prev)) {
        throw Error(ErrorKind::Internal, "EM log-likelihood decreased");
      }
      fit.log_likelihood_trace.push_back(ll);
      if (ll - prev < gain_tol) {
        fit.converged = true;
        break;
      }
    } else {
      fit.log_likelihood_trace.push_back(ll);
    }
    if (it + 1 == max_iter) break;
    fit.model = m_step();
  }

  fit.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c)
      if (resp(i, c) > resp(i, best)) best = c;
    fit.labels[i] = static_cast<int>(best);
  }
  return fit;
}

/// Minimum, over relabelings of `pred`, of the fraction of disagreements.
inline double misclassification(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) throw Error(ErrorKind::InvalidArgument, "label vectors differ in length");
  if (pred.empty()) return 0.0;
  int kmax = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || truth[i] < 0) throw Error(ErrorKind::InvalidArgument, "labels must be non-negative");
    kmax = std::max({kmax, pred[i], truth[i]});
  }
  const auto k = static_cast<std::size_t>(kmax) + 1;
  if (k > 8) throw Error(ErrorKind::TooManyClasses, "permutation search supports at most 8 classes");
  std::vector<std::size_t> confusion(k * k, 0);
  for (std::size_t i = 0; i < pred.size(); ++i)
    ++confusion[static_cast<std::size_t>(pred[i]) * k + static_cast<std::size_t>(truth[i])];
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::size_t best = 0;
  do {
    std::size_t agree = 0;
    for (std::size_t p = 0; p < k; ++p) agree += confusion[p * k + perm[p]];
    best = std::max(best, agree);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return 1.0 - static_cast<double>(best) / static_cast<double>(pred.size());
}

struct BayesErrorEstimate {
  double rate = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo error of the rule "pick the component with the largest
/// weighted density" on draws from the mixture itself.
inline BayesErrorEstimate bayes_error(const GaussianMixture& g, std::size_t n_mc, std::uint64_t seed) {
  if (n_mc < 100000) throw Error(ErrorKind::InvalidArgument, "Bayes error needs at least 1e5 draws");
  if (g.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty mixture");
  const detail::PreparedMixture prep(g);
  const std::size_t d = g.dim();
  Rng rng(seed);
  std::vector<double> z(d), x(d);
  std::size_t wrong = 0;
  for (std::size_t s = 0; s < n_mc; ++s) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t comp = g.size() - 1;
    for (std::size_t c = 0; c < g.size(); ++c) {
      acc += g.weights[c];
      if (u < acc) {
        comp = c;
        break;
      }
    }
    for (auto& v : z) v = rng.normal();
    const Matrix& l = prep.chol[comp];
    for (std::size_t i = 0; i < d; ++i) {
      double v = g.means[comp][i];
      for (std::size_t j = 0; j <= i; ++j) v += l(i, j) * z[j];
      x[i] = v;
    }
    std::size_t best = 0;
    double bl = prep.log_weighted_density(g, 0, x);
    for (std::size_t c = 1; c < g.size(); ++c) {
      const double lc = prep.log_weighted_density(g, c, x);
      if (lc > bl) {
        bl = lc;
        best = c;
      }
    }
    if (best != comp) ++wrong;
  }
  BayesErrorEstimate e;
  e.rate = static_cast<double>(wrong) / static_cast<double>(n_mc);
  e.std_error = std::sqrt(e.rate * (1.0 - e.rate) / static_cast<double>(n_mc));
  return e;
}

}  // namespace rdpg
