#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rdpg/error.hpp"
#include "rdpg/linalg.hpp"
#include "rdpg/matrix.hpp"
#include "rdpg/model.hpp"

namespace rdpg {

/// Adjacency spectral embedding xhat = V S^{1/2} from the top d eigenpairs.
struct Embedding {
  std::size_t d = 0;
  std::vector<double> values;  // positive, descending
  Matrix vectors;              // n x d, orthonormal
  Matrix xhat;                 // n x d
};

struct AseOptions {
  SpectrumOrder order = SpectrumOrder::Magnitude;
  double tol = 1e-10;
  std::size_t basis_size = 64;
  std::size_t max_restarts = 200;
  std::uint64_t seed = 0x5eed;
};

inline Embedding ase(const SymmetricOperator& op, std::size_t d, const AseOptions& opt = {}) {
  if (d == 0 || op.n <= d) throw Error(ErrorKind::InvalidArgument, "embedding dimension must satisfy 1 <= d < n");
  LanczosOptions lo;
  lo.k = d;
  lo.tol = opt.tol;
  lo.basis_size = opt.basis_size;
  lo.max_restarts = opt.max_restarts;
  lo.seed = opt.seed;
  lo.order = opt.order;
  EigenPairs pairs = top_eigenpairs(op, lo);
  for (std::size_t j = 0; j < d; ++j) {
    if (!(pairs.values[j] > 0.0)) {
      throw Error(ErrorKind::DegenerateSpectrum,
                  "eigenvalue " + std::to_string(j + 1) + " of the top " + std::to_string(d) +
                      " is not positive (" + std::to_string(pairs.values[j]) + ")");
    }
  }
  Embedding e;
  e.d = d;
  e.values = std::move(pairs.values);
  e.vectors = std::move(pairs.vectors);
  e.xhat = e.vectors;
  for (std::size_t j = 0; j < d; ++j) {
    const double s = std::sqrt(e.values[j]);
    for (std::size_t i = 0; i < op.n; ++i) e.xhat(i, j) *= s;
  }
  return e;
}

inline Embedding ase(const GraphSample& g, std::size_t d, const AseOptions& opt = {}) {
  return ase(adjacency_operator(g.adjacency), d, opt);
}

/// Uncentered principal components of the latent matrix.
struct Upca {
  Matrix xtilde;          // V S^{1/2}
  Matrix v;               // n x d, orthonormal
  std::vector<double> s;  // eigenvalues of X X^T, descending
  Matrix w;               // orthogonal, xtilde * w == X
};

/// Thin Gram route: X^T X = Q L Q^T gives V = X Q L^{-1/2}, S = L, so the
/// n x n matrix X X^T is never formed.
inline Upca upca(const Matrix& x) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const EigenPairs g = dense_symmetric_eigen(transpose_times(x, x));
  if (!(g.values.front() > 0.0) || g.values.back() <= 1e-12 * g.values.front()) {
    throw Error(ErrorKind::RankDeficient, "latent matrix does not have full column rank");
  }
  Upca out;
  out.s = g.values;
  out.xtilde = x * g.vectors;
  out.v = out.xtilde;
  for (std::size_t j = 0; j < d; ++j) {
    const double inv = 1.0 / std::sqrt(out.s[j]);
    for (std::size_t i = 0; i < n; ++i) out.v(i, j) *= inv;
  }
  out.w = procrustes(out.xtilde, x);
  const double err = frobenius_norm(out.xtilde * out.w - x);
  if (err >= 1e-8 * std::max(1.0, frobenius_norm(x))) {
    throw Error(ErrorKind::RankDeficient, "UPCA alignment failed to reproduce X");
  }
  return out;
}

/// Observed deviations between the estimate and the truth, next to the
/// high-probability bound formulas evaluated at (n, eta, delta_d, d).
struct ConcentrationReport {
  std::size_t n = 0;
  std::size_t d = 0;
  double eta = 0.0;
  double delta_min = 0.0;

  double xhat_minus_xtilde = 0.0;  // ||xhat W - xtilde||_F after Procrustes
  double vhat_minus_v = 0.0;       // ||vhat - V||_F after per-column sign match
  double a_minus_p = 0.0;          // ||A - P|| spectral
  double s_minus_shat = 0.0;       // ||S - Shat||_F
  double vtv_minus_identity = 0.0; // ||V^T vhat - I||_F after sign match
  double lambda1_gap = 0.0;        // |lambda_1(A) - lambda_1(P)|

  double bound_xhat = 0.0;  // 4/delta_d sqrt(2 d log(n/eta))
  double bound_v = 0.0;     // 4/delta_d sqrt(2 d log(n/eta) / n)
  double bound_a = 0.0;     // 2 sqrt(n log(n/eta))

  bool xhat_violated() const noexcept { return xhat_minus_xtilde > bound_xhat; }
  bool v_violated() const noexcept { return vhat_minus_v > bound_v; }
  bool a_violated() const noexcept { return a_minus_p > bound_a; }
};

struct ConcentrationBounds {
  double xhat, v, a;
};

inline ConcentrationBounds concentration_bounds(std::size_t n, std::size_t d, double eta, double delta_min) {
  const double nn = static_cast<double>(n);
  const double lg = std::log(nn / eta);
  const double dd = static_cast<double>(d);
  return {4.0 / delta_min * std::sqrt(2.0 * dd * lg), 4.0 / delta_min * std::sqrt(2.0 * dd * lg / nn),
          2.0 * std::sqrt(nn * lg)};
}

/// `deviation` is the operator A - P; its spectral norm is taken from a
/// Krylov estimate with `norm_steps` steps (0 skips it and reports NaN).
inline ConcentrationReport concentration_report(const SymmetricOperator& deviation, const Embedding& emb,
                                                const Upca& truth, double eta, double delta_min,
                                                std::uint64_t seed = 0, std::size_t norm_steps = 150) {
  if (!(eta > 0.0 && eta < 0.5)) throw Error(ErrorKind::DomainError, "eta must lie in (0, 1/2)");
  const std::size_t n = emb.xhat.rows();
  const std::size_t d = emb.d;
  if (truth.xtilde.rows() != n || truth.xtilde.cols() != d) {
    throw Error(ErrorKind::InvalidArgument, "embedding and UPCA shapes differ");
  }
  ConcentrationReport r;
  r.n = n;
  r.d = d;
  r.eta = eta;
  r.delta_min = delta_min;

  const Matrix w = procrustes(emb.xhat, truth.xtilde);
  r.xhat_minus_xtilde = frobenius_norm(emb.xhat * w - truth.xtilde);

  Matrix v_matched = truth.v;
  for (std::size_t j = 0; j < d; ++j) {
    double ip = 0.0;
    for (std::size_t i = 0; i < n; ++i) ip += truth.v(i, j) * emb.vectors(i, j);
    if (ip < 0.0)
      for (std::size_t i = 0; i < n; ++i) v_matched(i, j) = -v_matched(i, j);
  }
  r.vhat_minus_v = frobenius_norm(emb.vectors - v_matched);
  r.vtv_minus_identity = frobenius_norm(transpose_times(v_matched, emb.vectors) - Matrix::identity(d));

  double ss = 0.0;
  for (std::size_t j = 0; j < d; ++j) ss += (truth.s[j] - emb.values[j]) * (truth.s[j] - emb.values[j]);
  r.s_minus_shat = std::sqrt(ss);
  r.lambda1_gap = std::abs(emb.values[0] - truth.s[0]);

  r.a_minus_p = norm_steps ? krylov_spectral_norm(deviation, norm_steps, seed) : std::nan("");

  const auto b = concentration_bounds(n, d, eta, delta_min);
  r.bound_xhat = b.xhat;
  r.bound_v = b.v;
  r.bound_a = b.a;
  return r;
}

inline ConcentrationReport concentration_report(const GraphSample& g, const LatentDistribution& dist,
                                                const Embedding& emb, const Upca& truth, double eta,
                                                std::uint64_t seed = 0) {
  return concentration_report(deviation_operator(g), emb, truth, eta, moments(dist).delta_min(), seed);
}

}  // namespace rdpg
