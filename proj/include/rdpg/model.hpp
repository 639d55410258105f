#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdpg/error.hpp"
#include "rdpg/linalg.hpp"
#include "rdpg/matrix.hpp"
#include "rdpg/rng.hpp"

namespace rdpg {

/// Finite point-mass mixture on R^d whose atoms have pairwise inner
/// products in [0, 1]. Immutable once built.
class LatentDistribution {
 public:
  static LatentDistribution create(Matrix atoms, std::vector<double> weights) {
    const std::size_t m = atoms.rows();
    const std::size_t d = atoms.cols();
    if (m == 0 || d == 0) throw Error(ErrorKind::InvalidDistribution, "need at least one atom of dimension >= 1");
    if (weights.size() != m) throw Error(ErrorKind::InvalidDistribution, "one weight per atom required");
    double total = 0.0;
    for (double w : weights) {
      if (!(w > 0.0)) throw Error(ErrorKind::InvalidDistribution, "weights must be positive");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorKind::InvalidDistribution, "weights must sum to 1");
    constexpr double slack = 1e-10;
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = j; k < m; ++k) {
        const double ip = dot(atoms.row(j), atoms.row(k));
        if (ip < -slack || ip > 1.0 + slack) {
          throw Error(ErrorKind::InvalidDistribution, "atom inner products must lie in [0,1]");
        }
        if (k != j && std::equal(atoms.row(j).begin(), atoms.row(j).end(), atoms.row(k).begin())) {
          throw Error(ErrorKind::InvalidDistribution, "atoms must be distinct");
        }
      }
    }
    return LatentDistribution(std::move(atoms), std::move(weights));
  }

  std::size_t dim() const noexcept { return atoms_.cols(); }
  std::size_t size() const noexcept { return atoms_.rows(); }
  const Matrix& atoms() const noexcept { return atoms_; }
  std::span<const double> atom(std::size_t k) const noexcept { return atoms_.row(k); }
  const std::vector<double>& weights() const noexcept { return weights_; }

  /// Edge probability between atoms j and k, clipped to [0, 1].
  double edge_probability(std::size_t j, std::size_t k) const noexcept {
    return std::clamp(dot(atoms_.row(j), atoms_.row(k)), 0.0, 1.0);
  }

 private:
  LatentDistribution(Matrix atoms, std::vector<double> weights)
      : atoms_(std::move(atoms)), weights_(std::move(weights)) {}

  Matrix atoms_;
  std::vector<double> weights_;
};

/// Symmetric hollow 0/1 matrix. Each row is a packed bitset over all n
/// columns; sampling fills i < j and mirrors, so row access (and the
/// matrix-vector product) never has to walk columns.
class AdjacencyMatrix {
 public:
  AdjacencyMatrix() = default;
  explicit AdjacencyMatrix(std::size_t n) : n_(n), words_((n + 63) / 64), bits_(n * words_, 0) {}

  std::size_t size() const noexcept { return n_; }
  std::size_t words_per_row() const noexcept { return words_; }

  bool test(std::size_t i, std::size_t j) const noexcept {
    return (bits_[i * words_ + j / 64] >> (j % 64)) & 1u;
  }

  void add_edge(std::size_t i, std::size_t j) {
    if (i == j) throw Error(ErrorKind::InvalidArgument, "self loops are not allowed");
    bits_[i * words_ + j / 64] |= std::uint64_t{1} << (j % 64);
    bits_[j * words_ + i / 64] |= std::uint64_t{1} << (i % 64);
  }

  std::span<const std::uint64_t> row_words(std::size_t i) const noexcept {
    return {bits_.data() + i * words_, words_};
  }

  std::size_t degree(std::size_t i) const noexcept {
    std::size_t d = 0;
    for (auto w : row_words(i)) d += static_cast<std::size_t>(std::popcount(w));
    return d;
  }

  std::size_t edge_count() const noexcept {
    std::size_t total = 0;
    for (auto w : bits_) total += static_cast<std::size_t>(std::popcount(w));
    return total / 2;
  }

  /// Calls f(i, j) for every edge with i < j in row-major order.
  template <class F>
  void for_each_edge(F&& f) const {
    for (std::size_t i = 0; i < n_; ++i) {
      const auto row = row_words(i);
      for (std::size_t wi = (i + 1) / 64; wi < words_; ++wi) {
        std::uint64_t w = row[wi];
        if (wi == (i + 1) / 64) w &= ~std::uint64_t{0} << ((i + 1) % 64);
        while (w != 0) {
          const std::size_t j = wi * 64 + static_cast<std::size_t>(std::countr_zero(w));
          f(i, j);
          w &= w - 1;
        }
      }
    }
  }

  /// y = A x. Uses byte-indexed partial-sum tables: for every 8-column
  /// chunk the 256 possible subset sums of x are tabulated, then each row
  /// costs n/8 lookups. Columns are processed in tiles of kTileWords words
  /// so the live part of the table stays cache resident.
  void multiply(std::span<const double> x, std::span<double> y) const {
    constexpr std::size_t kTileWords = 8;
    std::vector<double> table(kTileWords * 8 * 256);
    std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n_), 0.0);
    for (std::size_t w0 = 0; w0 < words_; w0 += kTileWords) {
      const std::size_t w1 = std::min(words_, w0 + kTileWords);
      for (std::size_t c = 0; c < (w1 - w0) * 8; ++c) {
        double* t = table.data() + c * 256;
        double xs[8];
        for (std::size_t b = 0; b < 8; ++b) {
          const std::size_t col = (w0 * 8 + c) * 8 + b;
          xs[b] = col < n_ ? x[col] : 0.0;
        }
        t[0] = 0.0;
        for (unsigned v = 1; v < 256; ++v) t[v] = t[v & (v - 1)] + xs[std::countr_zero(v)];
      }
      for (std::size_t i = 0; i < n_; ++i) {
        const std::uint64_t* row = bits_.data() + i * words_;
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        const double* t = table.data();
        for (std::size_t wi = w0; wi < w1; ++wi, t += 8 * 256) {
          const std::uint64_t w = row[wi];
          s0 += t[w & 0xff] + t[256 + ((w >> 8) & 0xff)];
          s1 += t[512 + ((w >> 16) & 0xff)] + t[768 + ((w >> 24) & 0xff)];
          s2 += t[1024 + ((w >> 32) & 0xff)] + t[1280 + ((w >> 40) & 0xff)];
          s3 += t[1536 + ((w >> 48) & 0xff)] + t[1792 + (w >> 56)];
        }
        const double s = (s0 + s1) + (s2 + s3);
        y[i] += s;
      }
    }
  }

  friend bool operator==(const AdjacencyMatrix&, const AdjacencyMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> bits_;
};

struct GraphSample {
  std::size_t n = 0;
  Matrix latent;            // n x d
  std::vector<int> labels;  // atom index per vertex
  AdjacencyMatrix adjacency;
  std::uint64_t seed = 0;

  std::size_t dim() const noexcept { return latent.cols(); }

  friend bool operator==(const GraphSample&, const GraphSample&) = default;
};

struct MomentSet {
  Matrix delta;                     // E[X X^T]
  std::vector<double> delta_eigs;   // descending
  std::optional<double> m3;         // E[X^3], d = 1 only
  std::optional<double> m4;         // E[X^4], d = 1 only
  bool near_degenerate = false;     // some pair of eigenvalues within 1e-8

  double delta_min() const noexcept { return delta_eigs.back(); }
};

/// Factors a positive definite block matrix B = Q diag(lambda) Q^T
/// (eigenvalues descending) into latent atoms, the rows of
/// Q diag(lambda)^{1/2}. Each eigenvector is signed so its last entry is
/// non-negative.
inline LatentDistribution sbm_to_latent(const Matrix& block, std::vector<double> pi) {
  const std::size_t k = block.rows();
  if (k == 0 || block.cols() != k) throw Error(ErrorKind::InvalidArgument, "block matrix must be square");
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      if (block(i, j) < 0.0 || block(i, j) > 1.0) {
        throw Error(ErrorKind::InvalidArgument, "block probabilities must lie in [0,1]");
      }
      if (std::abs(block(i, j) - block(j, i)) > 1e-12) {
        throw Error(ErrorKind::NotSymmetric, "block matrix must be symmetric");
      }
    }
  EigenPairs e = dense_symmetric_eigen(block);
  for (double v : e.values) {
    if (v < -1e-10) throw Error(ErrorKind::NotPSD, "block matrix has a negative eigenvalue");
    if (std::abs(v) <= 1e-10) throw Error(ErrorKind::RankDeficient, "block matrix is rank deficient");
  }
  // Already descending: all eigenvalues are positive here.
  Matrix atoms(k, k);
  for (std::size_t j = 0; j < k; ++j) {
    const double sign = e.vectors(k - 1, j) < 0.0 ? -1.0 : 1.0;
    const double scale = std::sqrt(e.values[j]);
    for (std::size_t i = 0; i < k; ++i) atoms(i, j) = sign * e.vectors(i, j) * scale;
  }
  return LatentDistribution::create(std::move(atoms), std::move(pi));
}

inline LatentDistribution erdos_renyi_distribution(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::DomainError, "Erdos-Renyi p must lie in (0,1)");
  return LatentDistribution::create(Matrix{{std::sqrt(p)}}, {1.0});
}

inline std::vector<int> sample_labels(const LatentDistribution& dist, std::size_t n, Rng& rng) {
  const auto& w = dist.weights();
  std::vector<int> labels(n);
  for (auto& l : labels) {
    const double u = rng.uniform();
    double acc = 0.0;
    int chosen = static_cast<int>(w.size()) - 1;
    for (std::size_t k = 0; k < w.size(); ++k) {
      acc += w[k];
      if (u < acc) {
        chosen = static_cast<int>(k);
        break;
      }
    }
    l = chosen;
  }
  return labels;
}

/// Samples the adjacency for fixed block labels: A_ij ~ Bernoulli(x_i . x_j)
/// independently for i < j, drawn in row-major order from one stream.
inline GraphSample sample_graph_with_labels(const LatentDistribution& dist, std::vector<int> labels,
                                            std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "need at least two vertices");
  const std::size_t m = dist.size();
  for (int l : labels)
    if (l < 0 || static_cast<std::size_t>(l) >= m) throw Error(ErrorKind::InvalidArgument, "label out of range");

  std::vector<std::uint64_t> threshold(m * m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) threshold[a * m + b] = bernoulli_threshold(dist.edge_probability(a, b));

  GraphSample g;
  g.n = n;
  g.seed = seed;
  g.latent = Matrix(n, dist.dim());
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = dist.atom(static_cast<std::size_t>(labels[i]));
    std::copy(a.begin(), a.end(), g.latent.row(i).begin());
  }
  g.adjacency = AdjacencyMatrix(n);
  Rng rng(derive_seed(seed, {0x65646765ULL}));
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t* t = threshold.data() + static_cast<std::size_t>(labels[i]) * m;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng() < t[labels[j]]) g.adjacency.add_edge(i, j);
    }
  }
  g.labels = std::move(labels);
  return g;
}

/// Labels i.i.d. from the mixture weights, then edges given the labels.
inline GraphSample sample_graph(const LatentDistribution& dist, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "need at least two vertices");
  Rng rng(derive_seed(seed, {0x6c6162656cULL}));
  return sample_graph_with_labels(dist, sample_labels(dist, n, rng), seed);
}

inline MomentSet moments(const LatentDistribution& dist) {
  const std::size_t d = dist.dim();
  MomentSet out;
  out.delta = Matrix(d, d);
  for (std::size_t k = 0; k < dist.size(); ++k) {
    const auto x = dist.atom(k);
    const double w = dist.weights()[k];
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) out.delta(i, j) += w * x[i] * x[j];
  }
  auto e = dense_symmetric_eigen(out.delta);
  out.delta_eigs = e.values;
  std::sort(out.delta_eigs.begin(), out.delta_eigs.end(), std::greater<>());
  for (std::size_t i = 0; i + 1 < d; ++i)
    if (out.delta_eigs[i] - out.delta_eigs[i + 1] < 1e-8) out.near_degenerate = true;
  if (d == 1) {
    double m3 = 0.0, m4 = 0.0;
    for (std::size_t k = 0; k < dist.size(); ++k) {
      const double x = dist.atom(k)[0];
      m3 += dist.weights()[k] * x * x * x;
      m4 += dist.weights()[k] * x * x * x * x;
    }
    out.m3 = m3;
    out.m4 = m4;
  }
  return out;
}

/// Matrix-free P = X X^T (diagonal included).
inline SymmetricOperator probability_operator(const Matrix& latent) {
  return {latent.rows(), [&latent](std::span<const double> x, std::span<double> y) {
            const Matrix& lat = latent;
            std::vector<double> proj(lat.cols(), 0.0);
            for (std::size_t i = 0; i < lat.rows(); ++i) {
              const auto r = lat.row(i);
              for (std::size_t c = 0; c < lat.cols(); ++c) proj[c] += r[c] * x[i];
            }
            for (std::size_t i = 0; i < lat.rows(); ++i) y[i] = dot(lat.row(i), proj);
          }};
}

inline SymmetricOperator adjacency_operator(const AdjacencyMatrix& a) {
  return {a.size(), [&a](std::span<const double> x, std::span<double> y) { a.multiply(x, y); }};
}

/// A - P as an operator, for the spectral deviation ||A - XX^T||.
inline SymmetricOperator deviation_operator(const GraphSample& g) {
  return {g.n, [&g](std::span<const double> x, std::span<double> y) {
            g.adjacency.multiply(x, y);
            std::vector<double> py(g.n);
            probability_operator(g.latent).apply(x, py);
            for (std::size_t i = 0; i < g.n; ++i) y[i] -= py[i];
          }};
}

}  // namespace rdpg
