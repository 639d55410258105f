#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "rdpg/clt.hpp"
#include "rdpg/cluster.hpp"
#include "rdpg/csv.hpp"
#include "rdpg/embed.hpp"
#include "rdpg/error.hpp"
#include "rdpg/experiments/config.hpp"
#include "rdpg/experiments/parallel.hpp"
#include "rdpg/experiments/svg.hpp"
#include "rdpg/graph_io.hpp"
#include "rdpg/model.hpp"

namespace rdpg::experiments {

/// Files produced by a run, keyed by file name; written below out_dir when
/// one is configured.
using FileSet = std::map<std::string, std::string>;

namespace tags {
inline constexpr std::uint64_t graph = 0x6772617068;
inline constexpr std::uint64_t embed = 0x656d626564;
inline constexpr std::uint64_t kmeans = 0x6b6d65616e73;
inline constexpr std::uint64_t gmm = 0x676d6d;
inline constexpr std::uint64_t bayes = 0x6261796573;
inline constexpr std::uint64_t norm = 0x6e6f726d;
}  // namespace tags

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string provenance_line(const ExperimentConfig& cfg) {
  return "spectral-clt " + std::string(kVersion) + " config_hash=" + hex64(cfg.hash()) +
         " seed=" + std::to_string(cfg.seed);
}

inline std::uint64_t cell_seed(const ExperimentConfig& cfg, std::size_t n, std::size_t rep, std::uint64_t tag) {
  return derive_seed(cfg.seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep), tag});
}

inline AseOptions ase_options(const ExperimentConfig& cfg, std::uint64_t seed) {
  AseOptions o;
  o.order = cfg.spectrum;
  o.seed = seed;
  return o;
}

inline std::size_t embedding_dim(const ExperimentConfig& cfg, const LatentDistribution& dist) {
  return cfg.d == 0 ? dist.dim() : cfg.d;
}

/// Samples and embeds one (n, replicate) cell. With `noiseless` the
/// embedding is taken from P = XX^T instead of A.
inline Embedding embed_cell(const ExperimentConfig& cfg, const LatentDistribution& dist, const GraphSample& g,
                            std::size_t rep) {
  const auto opt = ase_options(cfg, cell_seed(cfg, g.n, rep, tags::embed));
  const std::size_t d = embedding_dim(cfg, dist);
  if (cfg.noiseless) return ase(probability_operator(g.latent), d, opt);
  return ase(g, d, opt);
}

inline void write_files(const std::string& out_dir, const FileSet& files) {
  if (out_dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create output directory " + out_dir + ": " + ec.message());
  for (const auto& [name, content] : files) {
    const auto path = std::filesystem::path(out_dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
  }
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline std::vector<std::string> covariance_header(std::size_t d) {
  std::vector<std::string> h;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) h.push_back("c" + std::to_string(a + 1) + std::to_string(b + 1));
  return h;
}

inline void append_matrix(std::vector<std::string>& row, const Matrix& m) {
  for (std::size_t a = 0; a < m.rows(); ++a)
    for (std::size_t b = 0; b < m.cols(); ++b) row.push_back(format_double(m(a, b)));
}

// ---------------------------------------------------------------- table-cov

struct TableCovCell {
  std::size_t n = 0, rep = 0;
  std::vector<Matrix> cov;
  std::vector<std::size_t> counts;
  double mahalanobis_ks = 0.0;
};

struct TableCovResult {
  std::vector<TableCovCell> cells;      // grid-major, replicate-minor
  std::map<std::size_t, std::vector<Matrix>> mean_cov;  // by n, per block
  std::vector<Matrix> theoretical;
  FileSet files;

  const TableCovCell& cell(std::size_t n, std::size_t rep) const {
    for (const auto& c : cells)
      if (c.n == n && c.rep == rep) return c;
    throw Error(ErrorKind::InvalidArgument, "no such cell");
  }
};

inline TableCovResult run_table_cov(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto dist = cfg.model.build();
  const std::size_t reps = cfg.replicates;
  const std::size_t d = embedding_dim(cfg, dist);
  TableCovResult out;
  out.cells = parallel_map(cfg.n_grid.size() * reps, cfg.threads, [&](std::size_t idx) {
    const std::size_t n = cfg.n_grid[idx / reps];
    const std::size_t rep = idx % reps;
    const auto g = sample_graph(dist, n, cell_seed(cfg, n, rep, tags::graph));
    const auto emb = embed_cell(cfg, dist, g, rep);
    const auto r = residual_report(g, emb, dist);
    return TableCovCell{n, rep, r.empirical_cov, r.block_counts, r.diagnostics.at("mahalanobis_ks")};
  });
  for (std::size_t k = 0; k < dist.size(); ++k) out.theoretical.push_back(covariance_matrix(dist.atom(k), dist));

  std::ostringstream csv;
  CsvWriter w(csv);
  w.comment(provenance_line(cfg));
  std::vector<std::string> header{"n", "block", "source", "replicates"};
  for (auto& h : covariance_header(d)) header.push_back(h);
  w.row_vector(header);
  for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
    const std::size_t n = cfg.n_grid[gi];
    auto& means = out.mean_cov[n];
    for (std::size_t k = 0; k < dist.size(); ++k) {
      Matrix sum(d, d);
      std::size_t used = 0;
      for (std::size_t rep = 0; rep < reps; ++rep) {
        const auto& c = out.cells[gi * reps + rep];
        if (c.counts[k] < 2) continue;
        sum += c.cov[k];
        ++used;
      }
      if (used) sum *= 1.0 / static_cast<double>(used);
      means.push_back(sum);
      std::vector<std::string> row{std::to_string(n), std::to_string(k + 1), "mean", std::to_string(used)};
      append_matrix(row, sum);
      w.row_vector(row);
      std::vector<std::string> single{std::to_string(n), std::to_string(k + 1), "single", "1"};
      append_matrix(single, out.cells[gi * reps].cov[k]);
      w.row_vector(single);
    }
  }
  for (std::size_t k = 0; k < dist.size(); ++k) {
    std::vector<std::string> row{"inf", std::to_string(k + 1), "theoretical", "0"};
    append_matrix(row, out.theoretical[k]);
    w.row_vector(row);
  }
  out.files["table_cov.csv"] = csv.str();

  std::ostringstream per;
  CsvWriter pw(per);
  pw.comment(provenance_line(cfg));
  std::vector<std::string> ph{"n", "replicate", "block", "count"};
  for (auto& h : covariance_header(d)) ph.push_back(h);
  ph.push_back("mahalanobis_ks");
  pw.row_vector(ph);
  for (const auto& c : out.cells)
    for (std::size_t k = 0; k < c.cov.size(); ++k) {
      std::vector<std::string> row{std::to_string(c.n), std::to_string(c.rep), std::to_string(k + 1),
                                   std::to_string(c.counts[k])};
      append_matrix(row, c.cov[k]);
      row.push_back(format_double(c.mahalanobis_ks));
      pw.row_vector(row);
    }
  out.files["table_cov_replicates.csv"] = per.str();
  write_files(cfg.out_dir, out.files);
  return out;
}

// ------------------------------------------------------------- ellipse-plot

struct EllipsePanel {
  std::size_t n = 0;
  Matrix points;  // aligned embedding, n x 2
  std::vector<int> labels;
  std::vector<double> coverage;  // per block, fraction inside its level curve
};

struct EllipsePlotResult {
  std::vector<EllipsePanel> panels;
  std::vector<Matrix> sigma;
  FileSet files;
};

inline EllipsePlotResult run_ellipse_plot(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto dist = cfg.model.build();
  EllipsePlotResult out;
  for (std::size_t k = 0; k < dist.size(); ++k) out.sigma.push_back(covariance_matrix(dist.atom(k), dist));
  std::vector<Matrix> sigma_inv;
  for (const auto& s : out.sigma) sigma_inv.push_back(inverse_spd(s));

  out.panels = parallel_map(cfg.n_grid.size(), cfg.threads, [&](std::size_t idx) {
    const std::size_t n = cfg.n_grid[idx];
    const auto g = sample_graph(dist, n, cell_seed(cfg, n, 0, tags::graph));
    const auto emb = embed_cell(cfg, dist, g, 0);
    EllipsePanel p;
    p.n = n;
    p.points = emb.xhat * procrustes(emb.xhat, g.latent);
    p.labels = g.labels;
    std::vector<std::size_t> inside(dist.size(), 0), total(dist.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(g.labels[i]);
      ++total[k];
      if (inside_level_curve(sigma_inv[k], cfg.level, dist.atom(k), p.points.row(i), static_cast<double>(n))) {
        ++inside[k];
      }
    }
    for (std::size_t k = 0; k < dist.size(); ++k)
      p.coverage.push_back(total[k] ? static_cast<double>(inside[k]) / static_cast<double>(total[k]) : std::nan(""));
    return p;
  });

  std::ostringstream scatter;
  CsvWriter sw(scatter);
  sw.comment(provenance_line(cfg));
  sw.row("n", "vertex", "block", "x1", "x2");
  for (const auto& p : out.panels)
    for (std::size_t i = 0; i < p.n; ++i) sw.row(p.n, i, p.labels[i] + 1, p.points(i, 0), p.points(i, 1));
  out.files["ellipse_scatter.csv"] = scatter.str();

  std::ostringstream cov;
  CsvWriter cw(cov);
  cw.comment(provenance_line(cfg));
  cw.row("n", "block", "level", "inside_fraction");
  for (const auto& p : out.panels)
    for (std::size_t k = 0; k < p.coverage.size(); ++k) cw.row(p.n, k + 1, cfg.level, p.coverage[k]);
  out.files["ellipse_coverage.csv"] = cov.str();

  // Panel layout: two columns, shared data window around the atoms.
  const std::size_t cols = std::min<std::size_t>(2, out.panels.size());
  const std::size_t rows = (out.panels.size() + cols - 1) / cols;
  const double pw = 360, ph = 300, margin = 70;
  SvgDocument svg(cols * (pw + margin) + margin / 2, rows * (ph + margin) + margin / 2);
  const std::vector<std::string> colors{"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"};
  for (std::size_t pi = 0; pi < out.panels.size(); ++pi) {
    const auto& p = out.panels[pi];
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (std::size_t i = 0; i < p.n; ++i) {
      x0 = std::min(x0, p.points(i, 0));
      x1 = std::max(x1, p.points(i, 0));
      y0 = std::min(y0, p.points(i, 1));
      y1 = std::max(y1, p.points(i, 1));
    }
    const double padx = 0.05 * std::max(x1 - x0, 1e-3), pady = 0.05 * std::max(y1 - y0, 1e-3);
    const Panel panel{margin + (pi % cols) * (pw + margin), margin / 2 + (pi / cols) * (ph + margin), pw, ph,
                      x0 - padx, x1 + padx, y0 - pady, y1 + pady};
    svg.frame(panel, "n = " + std::to_string(p.n), "x1", "x2");
    for (std::size_t i = 0; i < p.n; ++i) {
      svg.circle(panel.px(p.points(i, 0)), panel.py(p.points(i, 1)), 1.2,
                 colors[static_cast<std::size_t>(p.labels[i]) % colors.size()], 0.35);
    }
    for (std::size_t k = 0; k < dist.size(); ++k) {
      auto curve = level_curve(out.sigma[k], cfg.level, dist.atom(k), static_cast<double>(p.n));
      for (auto& c : curve) c = {panel.px(c[0]), panel.py(c[1])};
      svg.polyline(curve, "#000000", true, true, 1.5);
    }
  }
  out.files["ellipse_plot.svg"] = svg.str();
  write_files(cfg.out_dir, out.files);
  return out;
}

// ------------------------------------------------------------ cluster-bench

struct ClusterCell {
  std::size_t n = 0, rep = 0;
  double kmeans_error = 0.0, gmm_error = 0.0;
};

struct ClusterSummary {
  std::size_t n = 0;
  double kmeans_mean = 0.0, gmm_mean = 0.0;
  double kmeans_se = 0.0, gmm_se = 0.0;
  BayesErrorEstimate bayes;
};

struct ClusterBenchResult {
  std::vector<ClusterCell> cells;
  std::vector<ClusterSummary> summary;  // in grid order
  FileSet files;
};

inline GaussianMixture limiting_mixture(const LatentDistribution& dist, std::size_t n) {
  GaussianMixture g;
  g.weights = dist.weights();
  for (std::size_t k = 0; k < dist.size(); ++k) {
    const auto a = dist.atom(k);
    g.means.emplace_back(a.begin(), a.end());
    Matrix s = covariance_matrix(a, dist);
    s *= 1.0 / static_cast<double>(n);
    g.covariances.push_back(s);
  }
  return g;
}

inline double std_error_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

inline std::string cluster_svg(const std::vector<ClusterSummary>& s) {
  const double pw = 560, ph = 360, left = 80, top = 40;
  SvgDocument svg(left + pw + 170, top + ph + 60);
  const double nlo = static_cast<double>(s.front().n), nhi = static_cast<double>(s.back().n);
  const double c = s.front().kmeans_mean * nlo / std::log(nlo);
  auto ref = [&](double n) { return c * std::log(n) / n; };
  double lo = 1e300, hi = -1e300;
  auto take = [&](double v) {
    if (v > 0.0) {
      lo = std::min(lo, std::log10(v));
      hi = std::max(hi, std::log10(v));
    }
  };
  for (const auto& r : s) {
    take(r.kmeans_mean);
    take(r.gmm_mean);
    take(r.bayes.rate);
    take(ref(static_cast<double>(r.n)));
  }
  if (!(lo < hi)) {
    lo = -4;
    hi = 0;
  }
  const Panel panel{left, top, pw, ph, nlo, nhi > nlo ? nhi : nlo + 1, std::floor(lo), std::ceil(hi)};
  svg.frame(panel, "Classification error", "n", "log10 error");
  struct Series {
    std::string name, color;
    bool dashed;
    std::function<double(const ClusterSummary&)> value;
  };
  const std::vector<Series> series{
      {"K-means", "#1f77b4", false, [](const ClusterSummary& r) { return r.kmeans_mean; }},
      {"GMM", "#d62728", false, [](const ClusterSummary& r) { return r.gmm_mean; }},
      {"Bayes", "#2ca02c", false, [](const ClusterSummary& r) { return r.bayes.rate; }},
      {"C log(n)/n", "#555555", true, [&](const ClusterSummary& r) { return ref(static_cast<double>(r.n)); }},
  };
  for (std::size_t si = 0; si < series.size(); ++si) {
    std::vector<std::array<double, 2>> pts;
    for (const auto& r : s) {
      const double v = series[si].value(r);
      if (v > 0.0) pts.push_back({panel.px(static_cast<double>(r.n)), panel.py(std::log10(v))});
    }
    svg.polyline(pts, series[si].color, false, series[si].dashed, 2.0);
    for (const auto& p : pts) svg.circle(p[0], p[1], 2.5, series[si].color, 0.9);
    const double ly = top + 20 + 18 * static_cast<double>(si);
    svg.polyline({{left + pw + 20, ly - 4}, {left + pw + 45, ly - 4}}, series[si].color, false, series[si].dashed, 2.0);
    svg.text(left + pw + 50, ly, series[si].name);
  }
  return svg.str();
}

inline ClusterBenchResult run_cluster_bench(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto dist = cfg.model.build();
  const std::size_t reps = cfg.replicates;
  const std::size_t k = dist.size();
  ClusterBenchResult out;
  out.cells = parallel_map(cfg.n_grid.size() * reps, cfg.threads, [&](std::size_t idx) {
    const std::size_t n = cfg.n_grid[idx / reps];
    const std::size_t rep = idx % reps;
    const auto g = sample_graph(dist, n, cell_seed(cfg, n, rep, tags::graph));
    const auto emb = embed_cell(cfg, dist, g, rep);
    const auto km = kmeans(emb.xhat, k, cell_seed(cfg, n, rep, tags::kmeans));
    const auto gm = gmm_em(emb.xhat, k, cell_seed(cfg, n, rep, tags::gmm));
    return ClusterCell{n, rep, misclassification(km.labels, g.labels), misclassification(gm.labels, g.labels)};
  });
  const auto bayes = parallel_map(cfg.n_grid.size(), cfg.threads, [&](std::size_t gi) {
    const std::size_t n = cfg.n_grid[gi];
    return bayes_error(limiting_mixture(dist, n), cfg.bayes_draws, cell_seed(cfg, n, 0, tags::bayes));
  });

  std::ostringstream csv;
  CsvWriter w(csv);
  w.comment(provenance_line(cfg));
  w.row("n", "replicate", "method", "error");
  for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
    const std::size_t n = cfg.n_grid[gi];
    std::vector<double> km, gm;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const auto& c = out.cells[gi * reps + rep];
      w.row(n, rep, "kmeans", c.kmeans_error);
      w.row(n, rep, "gmm", c.gmm_error);
      km.push_back(c.kmeans_error);
      gm.push_back(c.gmm_error);
    }
    w.row(n, "NA", "bayes", bayes[gi].rate);
    out.summary.push_back({n, mean_of(km), mean_of(gm), std_error_of(km), std_error_of(gm), bayes[gi]});
  }
  out.files["cluster_bench.csv"] = csv.str();

  std::ostringstream sum;
  CsvWriter sw(sum);
  sw.comment(provenance_line(cfg));
  sw.row("n", "method", "mean_error", "std_error");
  for (const auto& s : out.summary) {
    sw.row(s.n, "kmeans", s.kmeans_mean, s.kmeans_se);
    sw.row(s.n, "gmm", s.gmm_mean, s.gmm_se);
    sw.row(s.n, "bayes", s.bayes.rate, s.bayes.std_error);
  }
  out.files["cluster_bench_summary.csv"] = sum.str();
  out.files["cluster_bench.svg"] = cluster_svg(out.summary);
  write_files(cfg.out_dir, out.files);
  return out;
}

// ------------------------------------------------------------------ er-clt

struct ErCltRow {
  std::size_t n = 0;
  std::size_t pooled = 0;
  double variance = 0.0;        // pooled sample variance of sqrt(n)(xhat - sqrt(p))
  double mean = 0.0;
  double theoretical = 0.0;     // 1 - p
  double ks = 0.0;              // against N(0, 1 - p)
};

struct ErCltResult {
  std::vector<ErCltRow> rows;
  FileSet files;
};

inline ErCltResult run_er_clt(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto dist = cfg.model.build();
  const double p = cfg.model.p;
  const double root = std::sqrt(p);
  const std::size_t reps = cfg.replicates;
  auto cells = parallel_map(cfg.n_grid.size() * reps, cfg.threads, [&](std::size_t idx) {
    const std::size_t n = cfg.n_grid[idx / reps];
    const std::size_t rep = idx % reps;
    const auto g = sample_graph(dist, n, cell_seed(cfg, n, rep, tags::graph));
    const auto emb = embed_cell(cfg, dist, g, rep);
    // The top eigenvector of an ER graph is entrywise positive up to sign.
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += emb.xhat(i, 0);
    const double sign = sum < 0.0 ? -1.0 : 1.0;
    const double scale = std::sqrt(static_cast<double>(n));
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = scale * (sign * emb.xhat(i, 0) - root);
    return r;
  });
  ErCltResult out;
  for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
    std::vector<double> pooled;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const auto& c = cells[gi * reps + rep];
      pooled.insert(pooled.end(), c.begin(), c.end());
    }
    ErCltRow row;
    row.n = cfg.n_grid[gi];
    row.pooled = pooled.size();
    row.mean = mean_of(pooled);
    double ss = 0.0;
    for (double v : pooled) ss += (v - row.mean) * (v - row.mean);
    row.variance = ss / static_cast<double>(pooled.size() - 1);
    row.theoretical = 1.0 - p;
    row.ks = ks_normal_1d(pooled, row.theoretical);
    out.rows.push_back(row);
  }
  std::ostringstream csv;
  CsvWriter w(csv);
  w.comment(provenance_line(cfg));
  w.row("n", "p", "replicates", "pooled", "mean", "variance", "theoretical_variance", "ks");
  for (const auto& r : out.rows) w.row(r.n, p, reps, r.pooled, r.mean, r.variance, r.theoretical, r.ks);
  out.files["er_clt.csv"] = csv.str();
  write_files(cfg.out_dir, out.files);
  return out;
}

// ------------------------------------------------------------- bounds-audit

struct BoundsSummary {
  std::size_t n = 0;
  double xhat_violation = 0.0, v_violation = 0.0, a_violation = 0.0;  // frequencies
  double median_s_minus_shat = 0.0, median_vtv_minus_identity = 0.0, median_lambda1_gap = 0.0;
};

struct BoundsAuditResult {
  std::vector<ConcentrationReport> reports;  // grid-major
  std::vector<BoundsSummary> summary;
  FileSet files;
};

/// `with_operator_norm = false` skips the Krylov estimate of ||A - P||
/// (reported as NaN), which dominates the cost at large n.
inline BoundsAuditResult run_bounds_audit(const ExperimentConfig& cfg, bool with_operator_norm = true) {
  cfg.validate();
  const auto dist = cfg.model.build();
  const double delta_min = moments(dist).delta_min();
  const std::size_t reps = cfg.replicates;
  BoundsAuditResult out;
  out.reports = parallel_map(cfg.n_grid.size() * reps, cfg.threads, [&](std::size_t idx) {
    const std::size_t n = cfg.n_grid[idx / reps];
    const std::size_t rep = idx % reps;
    const auto g = sample_graph(dist, n, cell_seed(cfg, n, rep, tags::graph));
    const auto emb = embed_cell(cfg, dist, g, rep);
    const auto truth = upca(g.latent);
    return concentration_report(deviation_operator(g), emb, truth, cfg.eta, delta_min,
                                cell_seed(cfg, n, rep, tags::norm), with_operator_norm ? 150 : 0);
  });

  std::ostringstream csv;
  CsvWriter w(csv);
  w.comment(provenance_line(cfg));
  w.row("n", "replicate", "xhat_minus_xtilde", "bound_xhat", "vhat_minus_v", "bound_v", "a_minus_p", "bound_a",
        "s_minus_shat", "vtv_minus_identity", "lambda1_gap");
  for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
    BoundsSummary s;
    s.n = cfg.n_grid[gi];
    std::vector<double> sf, vt, lg;
    std::size_t vx = 0, vv = 0, va = 0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const auto& r = out.reports[gi * reps + rep];
      w.row(s.n, rep, r.xhat_minus_xtilde, r.bound_xhat, r.vhat_minus_v, r.bound_v, r.a_minus_p, r.bound_a,
            r.s_minus_shat, r.vtv_minus_identity, r.lambda1_gap);
      vx += r.xhat_violated();
      vv += r.v_violated();
      va += r.a_violated();
      sf.push_back(r.s_minus_shat);
      vt.push_back(r.vtv_minus_identity);
      lg.push_back(r.lambda1_gap);
    }
    const double m = static_cast<double>(reps);
    s.xhat_violation = static_cast<double>(vx) / m;
    s.v_violation = static_cast<double>(vv) / m;
    s.a_violation = with_operator_norm ? static_cast<double>(va) / m : std::nan("");
    s.median_s_minus_shat = median_of(sf);
    s.median_vtv_minus_identity = median_of(vt);
    s.median_lambda1_gap = median_of(lg);
    out.summary.push_back(s);
  }
  out.files["bounds_audit.csv"] = csv.str();

  std::ostringstream sum;
  CsvWriter sw(sum);
  sw.comment(provenance_line(cfg));
  sw.row("n", "eta", "violation_xhat", "violation_v", "violation_a", "median_s_minus_shat",
         "median_vtv_minus_identity", "median_lambda1_gap");
  for (const auto& s : out.summary)
    sw.row(s.n, cfg.eta, s.xhat_violation, s.v_violation, s.a_violation, s.median_s_minus_shat,
           s.median_vtv_minus_identity, s.median_lambda1_gap);
  out.files["bounds_audit_summary.csv"] = sum.str();
  write_files(cfg.out_dir, out.files);
  return out;
}

// ------------------------------------------------------------------ sample

struct SampleResult {
  std::vector<GraphSample> graphs;  // grid-major
  FileSet files;
};

inline SampleResult run_sample(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto dist = cfg.model.build();
  const std::size_t reps = cfg.replicates;
  SampleResult out;
  out.graphs = parallel_map(cfg.n_grid.size() * reps, cfg.threads, [&](std::size_t idx) {
    const std::size_t n = cfg.n_grid[idx / reps];
    return sample_graph(dist, n, cell_seed(cfg, n, idx % reps, tags::graph));
  });
  std::ostringstream index;
  CsvWriter w(index);
  w.comment(provenance_line(cfg));
  w.row("file", "n", "replicate", "seed", "edges");
  for (std::size_t idx = 0; idx < out.graphs.size(); ++idx) {
    const auto& g = out.graphs[idx];
    const std::string name = "graph_n" + std::to_string(g.n) + "_r" + std::to_string(idx % reps) + ".txt";
    std::ostringstream body;
    write_graph(body, g);
    out.files[name] = body.str();
    w.row(name, g.n, idx % reps, g.seed, g.adjacency.edge_count());
  }
  out.files["samples.csv"] = index.str();
  write_files(cfg.out_dir, out.files);
  return out;
}

/// Runs the configured experiment and returns its files.
inline FileSet run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::TableCov: return run_table_cov(cfg).files;
    case Experiment::EllipsePlot: return run_ellipse_plot(cfg).files;
    case Experiment::ClusterBench: return run_cluster_bench(cfg).files;
    case Experiment::ErClt: return run_er_clt(cfg).files;
    case Experiment::BoundsAudit: return run_bounds_audit(cfg).files;
    case Experiment::Sample: return run_sample(cfg).files;
  }
  throw Error(ErrorKind::Internal, "unhandled experiment");
}

}  // namespace rdpg::experiments
