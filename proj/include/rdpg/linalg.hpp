#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rdpg/error.hpp"
#include "rdpg/matrix.hpp"
#include "rdpg/rng.hpp"

namespace rdpg {

/// Matrix-free symmetric operator: `apply(x, y)` writes M x into y. The
/// callable must be safe to invoke concurrently (read-only captures).
struct SymmetricOperator {
  std::size_t n = 0;
  std::function<void(std::span<const double>, std::span<double>)> apply;
};

inline SymmetricOperator dense_operator(const Matrix& m) {
  return {m.rows(), [&m](std::span<const double> x, std::span<double> y) {
            for (std::size_t i = 0; i < m.rows(); ++i) y[i] = dot(m.row(i), x);
          }};
}

enum class SpectrumOrder {
  Magnitude,  // |lambda| descending
  Largest,    // lambda descending
};

/// Eigenvalues with their unit eigenvectors as the columns of `vectors`.
struct EigenPairs {
  std::vector<double> values;
  Matrix vectors;
};

namespace detail {

inline std::vector<std::size_t> spectrum_order(std::span<const double> values,
                                               SpectrumOrder order) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (order == SpectrumOrder::Magnitude) {
      const double ma = std::abs(values[a]);
      const double mb = std::abs(values[b]);
      if (ma != mb) return ma > mb;
    }
    return values[a] > values[b];
  });
  return idx;
}

// Flip each column so its largest-magnitude entry is positive.
inline void canonicalize_signs(Matrix& vectors) {
  for (std::size_t j = 0; j < vectors.cols(); ++j) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < vectors.rows(); ++i) {
      const double a = std::abs(vectors(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (vectors(arg, j) < 0.0) {
      for (std::size_t i = 0; i < vectors.rows(); ++i) vectors(i, j) = -vectors(i, j);
    }
  }
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) noexcept {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline std::vector<double> random_unit_vector(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  const double nv = norm2(v);
  for (auto& x : v) x /= nv;
  return v;
}

}  // namespace detail

/// Full eigendecomposition by cyclic Jacobi rotations, ordered by
/// descending magnitude. Intended as a brute-force reference and for the
/// small projected problems inside the iterative solvers.
inline EigenPairs dense_symmetric_eigen(const Matrix& m) {
  const std::size_t n = m.rows();
  if (m.cols() != n) throw Error(ErrorKind::InvalidArgument, "matrix is not square");
  if (n > 2000) throw Error(ErrorKind::TooLarge, "dense eigensolver limited to n <= 2000");
  const double scale = std::max(1.0, max_abs(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-12 * scale) {
        throw Error(ErrorKind::NotSymmetric, "entry (" + std::to_string(i) + "," +
                                                 std::to_string(j) + ") differs from its mirror");
      }

  Matrix a = symmetrized(m);
  Matrix v = Matrix::identity(n);
  const double threshold = 1e-12 * frobenius_norm(a);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    if (off <= threshold) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 0.01 * threshold) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          const double np = c * akp - s * akq;
          const double nq = s * akp + c * akq;
          a(k, p) = np;
          a(p, k) = np;
          a(k, q) = nq;
          a(q, k) = nq;
        }
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          auto vk = v.row(k);
          const double vkp = vk[p];
          const double vkq = vk[q];
          vk[p] = c * vkp - s * vkq;
          vk[q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i);
  const auto idx = detail::spectrum_order(diag, SpectrumOrder::Magnitude);
  EigenPairs out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = diag[idx[j]];
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, idx[j]);
  }
  detail::canonicalize_signs(out.vectors);
  return out;
}

struct LanczosOptions {
  std::size_t k = 1;
  double tol = 1e-10;
  std::size_t max_restarts = 5;
  std::size_t basis_size = 0;  // 0 selects min(n, 4k + 20)
  std::uint64_t seed = 0;
  SpectrumOrder order = SpectrumOrder::Magnitude;
};

/// Leading k eigenpairs of a symmetric operator by thick-restart Lanczos
/// with full reorthogonalization. After each basis fill the wanted Ritz
/// pairs plus half the remaining ones are kept and the basis is rebuilt
/// from the residual direction.
inline EigenPairs top_eigenpairs(const SymmetricOperator& op, const LanczosOptions& opt) {
  const std::size_t n = op.n;
  const std::size_t k = opt.k;
  if (k == 0 || k > std::min<std::size_t>(n, 64)) {
    throw Error(ErrorKind::InvalidArgument, "requested eigenpair count must be in [1, min(n, 64)]");
  }
  std::size_t m = opt.basis_size == 0 ? 4 * k + 20 : opt.basis_size;
  m = std::min(n, std::max(m, k + 2));

  Rng rng(opt.seed);
  int restarts_for_start = 0;
  auto fresh_direction = [&](const std::vector<std::vector<double>>& basis, std::size_t count) {
    for (;;) {
      auto v = detail::random_unit_vector(n, rng);
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t i = 0; i < count; ++i) detail::axpy(-dot(basis[i], v), basis[i], v);
      const double nv = norm2(v);
      if (nv > 1e-8) {
        for (auto& x : v) x /= nv;
        return v;
      }
      if (++restarts_for_start > 3) {
        throw Error(ErrorKind::DegenerateStart, "could not find a start vector outside the Krylov space");
      }
      rng = Rng(derive_seed(opt.seed, {static_cast<std::uint64_t>(restarts_for_start)}));
    }
  };

  std::vector<std::vector<double>> basis(m);
  basis[0] = fresh_direction(basis, 0);
  Matrix h(m, m);
  std::vector<double> w(n);
  std::vector<double> residual(n);
  double beta_last = 0.0;
  double op_scale = 0.0;
  std::size_t expand_from = 0;

  for (std::size_t cycle = 0;; ++cycle) {
    for (std::size_t j = expand_from; j < m; ++j) {
      op.apply(basis[j], w);
      const double raw = norm2(w);
      op_scale = std::max(op_scale, raw);
      std::vector<double> coef(j + 1, 0.0);
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i <= j; ++i) {
          const double c = dot(basis[i], w);
          detail::axpy(-c, basis[i], w);
          coef[i] += c;
        }
      }
      for (std::size_t i = 0; i <= j; ++i) {
        h(i, j) = coef[i];
        h(j, i) = coef[i];
      }
      double beta = norm2(w);
      const bool breakdown = beta <= 1e-12 * std::max(op_scale, 1e-300);
      if (j + 1 == m) {
        beta_last = (breakdown || m == n) ? 0.0 : beta;
        if (beta_last > 0.0)
          for (std::size_t i = 0; i < n; ++i) residual[i] = w[i] / beta_last;
        break;
      }
      if (breakdown) {
        basis[j + 1] = fresh_direction(basis, j + 1);
      } else {
        basis[j + 1].resize(n);
        for (std::size_t i = 0; i < n; ++i) basis[j + 1][i] = w[i] / beta;
      }
    }

    const EigenPairs ritz = dense_symmetric_eigen(h);
    const auto idx = detail::spectrum_order(ritz.values, opt.order);
    std::vector<double> values(k), residuals(k);
    bool converged = true;
    for (std::size_t i = 0; i < k; ++i) {
      values[i] = ritz.values[idx[i]];
      residuals[i] = beta_last * std::abs(ritz.vectors(m - 1, idx[i]));
      if (residuals[i] > opt.tol * std::max(1.0, std::abs(values[i]))) converged = false;
    }

    auto ritz_vector = [&](std::size_t col) {
      std::vector<double> y(n, 0.0);
      for (std::size_t l = 0; l < m; ++l) detail::axpy(ritz.vectors(l, col), basis[l], y);
      return y;
    };

    if (converged || cycle >= opt.max_restarts) {
      if (!converged) {
        throw NoConvergenceError("Lanczos did not converge after " + std::to_string(cycle) +
                                     " restarts",
                                 values, residuals);
      }
      EigenPairs out{values, Matrix(n, k)};
      for (std::size_t i = 0; i < k; ++i) {
        auto y = ritz_vector(idx[i]);
        const double ny = norm2(y);
        for (auto& x : y) x /= ny;
        out.vectors.set_column(i, y);
      }
      detail::canonicalize_signs(out.vectors);
      return out;
    }

    std::size_t keep = std::min(k + (m - k) / 2, m - 2);
    keep = std::max(keep, k);
    std::vector<std::vector<double>> next(m);
    for (std::size_t l = 0; l < keep; ++l) next[l] = ritz_vector(idx[l]);
    h = Matrix(m, m);
    for (std::size_t l = 0; l < keep; ++l) h(l, l) = ritz.values[idx[l]];
    next[keep] = residual;
    basis = std::move(next);
    expand_from = keep;
  }
}

/// Orthogonal W minimizing ||xhat W - x||_F, taken as the polar factor of
/// xhat^T x = M: W = M (M^T M)^{-1/2}, polished by Newton-Schulz steps.
inline Matrix procrustes(const Matrix& xhat, const Matrix& x) {
  if (xhat.rows() != x.rows() || xhat.cols() != x.cols()) {
    throw Error(ErrorKind::InvalidArgument, "procrustes inputs differ in shape");
  }
  const std::size_t d = x.cols();
  if (d > x.rows()) throw Error(ErrorKind::InvalidArgument, "procrustes needs d <= n");
  const Matrix cross = transpose_times(xhat, x);
  const EigenPairs g = dense_symmetric_eigen(transpose_times(cross, cross));
  const double smax = std::sqrt(std::max(g.values.front(), 0.0));
  const double smin = std::sqrt(std::max(g.values.back(), 0.0));
  if (!(smax > 0.0) || smin <= 1e-10 * smax) {
    throw Error(ErrorKind::RankDeficientCross, "cross product xhat^T x is rank deficient");
  }
  Matrix inv_sqrt(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t l = 0; l < d; ++l)
        inv_sqrt(i, j) += g.vectors(i, l) * g.vectors(j, l) / std::sqrt(g.values[l]);
  Matrix w = cross * inv_sqrt;
  for (int it = 0; it < 2; ++it) {
    Matrix t = Matrix::identity(d) * 3.0 - transpose_times(w, w);
    w = (w * t) * 0.5;
  }
  return w;
}

/// Largest |eigenvalue| by power iteration, stopping when the norm
/// estimate changes by less than tol relative.
inline double spectral_norm(const SymmetricOperator& op, double tol = 1e-10,
                            std::uint64_t seed = 0, std::size_t max_iter = 100000) {
  Rng rng(seed);
  auto v = detail::random_unit_vector(op.n, rng);
  std::vector<double> w(op.n);
  double previous = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    op.apply(v, w);
    const double est = norm2(w);
    if (est == 0.0) return 0.0;
    if (std::abs(est - previous) <= tol * est) return est;
    for (std::size_t i = 0; i < op.n; ++i) v[i] = w[i] / est;
    previous = est;
  }
  throw NoConvergenceError("power iteration did not converge", {previous}, {});
}

/// Largest |Ritz value| after `steps` Lanczos steps (full
/// reorthogonalization, no restart). A lower bound on the spectral norm that
/// reaches the edge of a continuous bulk much faster than power iteration.
inline double krylov_spectral_norm(const SymmetricOperator& op, std::size_t steps,
                                   std::uint64_t seed = 0) {
  const std::size_t n = op.n;
  steps = std::min(steps, n);
  Rng rng(seed);
  std::vector<std::vector<double>> basis;
  basis.push_back(detail::random_unit_vector(n, rng));
  Matrix t(steps, steps);
  std::vector<double> w(n);
  std::size_t used = steps;
  double scale = 0.0;
  for (std::size_t j = 0; j < steps; ++j) {
    op.apply(basis[j], w);
    scale = std::max(scale, norm2(w));
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t i = 0; i <= j; ++i) {
        const double c = dot(basis[i], w);
        detail::axpy(-c, basis[i], w);
        t(i, j) += c;
      }
    for (std::size_t i = 0; i < j; ++i) t(j, i) = t(i, j);
    if (j + 1 == steps) break;
    const double beta = norm2(w);
    if (beta <= 1e-12 * std::max(scale, 1e-300)) {
      used = j + 1;
      break;
    }
    for (auto& x : w) x /= beta;
    basis.push_back(w);
  }
  if (scale == 0.0) return 0.0;
  Matrix tt(used, used);
  for (std::size_t i = 0; i < used; ++i)
    for (std::size_t j = 0; j < used; ++j) tt(i, j) = t(i, j);
  const auto e = dense_symmetric_eigen(symmetrized(tt));
  return std::abs(e.values.front());
}

/// Lower Cholesky factor; throws NotPSD when the matrix is not positive
/// definite.
inline Matrix cholesky(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = a(j, j);
    for (std::size_t k = 0; k < j; ++k) s -= l(j, k) * l(j, k);
    if (!(s > 0.0)) throw Error(ErrorKind::NotPSD, "matrix is not positive definite");
    l(j, j) = std::sqrt(s);
    for (std::size_t i = j + 1; i < n; ++i) {
      double t = a(i, j);
      for (std::size_t k = 0; k < j; ++k) t -= l(i, k) * l(j, k);
      l(i, j) = t / l(j, j);
    }
  }
  return l;
}

inline Matrix inverse_spd(const Matrix& a) {
  const Matrix l = cholesky(a);
  const std::size_t n = a.rows();
  Matrix linv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    linv(j, j) = 1.0 / l(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s -= l(i, k) * linv(k, j);
      linv(i, j) = s / l(i, i);
    }
  }
  return transpose_times(linv, linv);
}

/// Symmetric square root of a PSD matrix (negative rounding noise clipped).
inline Matrix sqrt_psd(const Matrix& a) {
  const auto e = dense_symmetric_eigen(a);
  const std::size_t n = a.rows();
  Matrix r(n, n);
  for (std::size_t l = 0; l < n; ++l) {
    const double s = std::sqrt(std::max(e.values[l], 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) r(i, j) += s * e.vectors(i, l) * e.vectors(j, l);
  }
  return r;
}

}  // namespace rdpg
