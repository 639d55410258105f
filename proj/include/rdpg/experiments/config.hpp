#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rdpg/error.hpp"
#include "rdpg/graph_io.hpp"
#include "rdpg/linalg.hpp"
#include "rdpg/matrix.hpp"
#include "rdpg/model.hpp"

namespace rdpg::experiments {

enum class Experiment { TableCov, EllipsePlot, ClusterBench, ErClt, BoundsAudit, Sample };

inline const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::TableCov: return "table-cov";
    case Experiment::EllipsePlot: return "ellipse-plot";
    case Experiment::ClusterBench: return "cluster-bench";
    case Experiment::ErClt: return "er-clt";
    case Experiment::BoundsAudit: return "bounds-audit";
    case Experiment::Sample: return "sample";
  }
  return "?";
}

inline Experiment parse_experiment(const std::string& s) {
  for (auto e : {Experiment::TableCov, Experiment::EllipsePlot, Experiment::ClusterBench, Experiment::ErClt,
                 Experiment::BoundsAudit, Experiment::Sample})
    if (s == to_string(e)) return e;
  throw Error(ErrorKind::Config, "unknown experiment '" + s + "'");
}

/// Latent model as written in a config: a block matrix with block
/// weights, an Erdos-Renyi p, or explicit atoms with weights.
struct ModelSpec {
  enum class Kind { Sbm, ErdosRenyi, Atoms };
  Kind kind = Kind::Sbm;
  Matrix block{{0.42, 0.42}, {0.42, 0.5}};
  std::vector<double> pi{0.6, 0.4};
  double p = 0.25;
  Matrix atoms;
  std::vector<double> weights;

  LatentDistribution build() const {
    switch (kind) {
      case Kind::Sbm: return sbm_to_latent(block, pi);
      case Kind::ErdosRenyi: return erdos_renyi_distribution(p);
      case Kind::Atoms: return LatentDistribution::create(atoms, weights);
    }
    throw Error(ErrorKind::Config, "unknown model kind");
  }

  std::string canonical() const;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::TableCov;
  ModelSpec model;
  std::vector<std::size_t> n_grid;
  std::size_t replicates = 1;
  std::size_t d = 0;  // 0: the model's latent dimension
  double eta = 0.05;
  std::uint64_t seed = 20140101;
  std::string out_dir;

  // execution and per-experiment knobs
  std::size_t threads = 1;
  double level = 0.95;
  bool noiseless = false;
  SpectrumOrder spectrum = SpectrumOrder::Largest;
  std::size_t bayes_draws = 100000;

  /// Serialization of every field that affects results. Thread count and
  /// output location are excluded so the hash is stable across both.
  std::string canonical() const;
  std::uint64_t hash() const;
  void validate() const;
};

inline std::string join_doubles(std::span<const double> v, char sep = ',') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += format_double(v[i]);
  }
  return s;
}

inline std::string format_matrix(const Matrix& m) {
  std::string s;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (i) s += ';';
    s += join_doubles(m.row(i));
  }
  return s;
}

inline std::string ModelSpec::canonical() const {
  switch (kind) {
    case Kind::Sbm: return "sbm B=" + format_matrix(block) + " pi=" + join_doubles(pi);
    case Kind::ErdosRenyi: return "er p=" + format_double(p);
    case Kind::Atoms: return "atoms X=" + format_matrix(atoms) + " w=" + join_doubles(weights);
  }
  return "";
}

inline std::string ExperimentConfig::canonical() const {
  std::ostringstream s;
  s << "experiment=" << to_string(experiment) << "\nmodel=" << model.canonical() << "\nn_grid=";
  for (std::size_t i = 0; i < n_grid.size(); ++i) s << (i ? "," : "") << n_grid[i];
  s << "\nreplicates=" << replicates << "\nd=" << d << "\neta=" << format_double(eta) << "\nseed=" << seed
    << "\nlevel=" << format_double(level) << "\nnoiseless=" << (noiseless ? 1 : 0)
    << "\nspectrum=" << (spectrum == SpectrumOrder::Largest ? "largest" : "magnitude")
    << "\nbayes_draws=" << bayes_draws << '\n';
  return s.str();
}

inline std::uint64_t ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline void ExperimentConfig::validate() const {
  if (n_grid.empty()) throw Error(ErrorKind::Config, "n_grid is empty");
  for (auto n : n_grid)
    if (n < 100) throw Error(ErrorKind::Config, "n_grid entries must be >= 100");
  if (replicates < 1) throw Error(ErrorKind::Config, "replicates must be >= 1");
  if (!(eta > 0.0 && eta < 0.5)) throw Error(ErrorKind::Config, "eta must lie in (0, 1/2)");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::Config, "level must lie in (0, 1)");
  if (threads < 1) throw Error(ErrorKind::Config, "threads must be >= 1");
  if (bayes_draws < 100000) throw Error(ErrorKind::Config, "bayes_draws must be >= 100000");
  LatentDistribution dist = [&] {
    try {
      return model.build();
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, std::string("invalid model: ") + e.what());
    }
  }();
  if (d != 0 && d != dist.dim()) throw Error(ErrorKind::Config, "d must equal the latent dimension of the model");
  const std::size_t dim = dist.dim();
  switch (experiment) {
    case Experiment::TableCov:
      break;
    case Experiment::EllipsePlot:
      if (dim != 2) throw Error(ErrorKind::Config, "ellipse-plot needs a two-dimensional model");
      break;
    case Experiment::ClusterBench:
      if (dim != 2 || dist.size() != 2) throw Error(ErrorKind::Config, "cluster-bench needs a two-block, d = 2 model");
      break;
    case Experiment::ErClt:
      if (model.kind != ModelSpec::Kind::ErdosRenyi) throw Error(ErrorKind::Config, "er-clt needs an Erdos-Renyi model");
      break;
    case Experiment::BoundsAudit:
    case Experiment::Sample:
      break;
  }
}

namespace detail {

inline std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto t = trim(v);
  auto r = std::from_chars(t.data(), t.data() + t.size(), out);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size()) {
    throw Error(ErrorKind::Config, "key '" + key + "': not a number: '" + v + "'");
  }
  return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto t = trim(v);
  auto r = std::from_chars(t.data(), t.data() + t.size(), out);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size()) {
    throw Error(ErrorKind::Config, "key '" + key + "': not a non-negative integer: '" + v + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  const auto t = trim(v);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw Error(ErrorKind::Config, "key '" + key + "': not a boolean: '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split(v, ',')) out.push_back(parse_double(key, item));
  return out;
}

inline Matrix parse_matrix(const std::string& key, const std::string& v) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : split(v, ';')) rows.push_back(parse_list(key, r));
  if (rows.empty() || rows.front().empty()) throw Error(ErrorKind::Config, "key '" + key + "': empty matrix");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) throw Error(ErrorKind::Config, "key '" + key + "': ragged matrix");
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

/// "1000,2000" or "start:stop:step" (inclusive).
inline std::vector<std::size_t> parse_grid(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& item : split(v, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() == 3) {
      const auto a = parse_uint(key, parts[0]);
      const auto b = parse_uint(key, parts[1]);
      const auto s = parse_uint(key, parts[2]);
      if (s == 0 || b < a) throw Error(ErrorKind::Config, "key '" + key + "': bad range '" + item + "'");
      for (auto x = a; x <= b; x += s) out.push_back(x);
    } else if (parts.size() == 1) {
      out.push_back(parse_uint(key, parts[0]));
    } else {
      throw Error(ErrorKind::Config, "key '" + key + "': bad grid item '" + item + "'");
    }
  }
  return out;
}

}  // namespace detail

/// Applies one key=value setting. Keys inside a [model] section arrive as
/// "model.<key>".
inline void apply_setting(ExperimentConfig& cfg, const std::string& raw_key, const std::string& value) {
  using namespace detail;
  const std::string key = trim(raw_key);
  if (key == "experiment") {
    cfg.experiment = parse_experiment(trim(value));
  } else if (key == "n_grid" || key == "n") {
    cfg.n_grid = parse_grid(key, value);
  } else if (key == "replicates") {
    cfg.replicates = parse_uint(key, value);
  } else if (key == "d") {
    cfg.d = parse_uint(key, value);
  } else if (key == "eta") {
    cfg.eta = parse_double(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_uint(key, value);
  } else if (key == "out_dir" || key == "out") {
    cfg.out_dir = trim(value);
  } else if (key == "threads") {
    cfg.threads = parse_uint(key, value);
  } else if (key == "level") {
    cfg.level = parse_double(key, value);
  } else if (key == "noiseless") {
    cfg.noiseless = parse_bool(key, value);
  } else if (key == "spectrum") {
    const auto v = trim(value);
    if (v == "largest") cfg.spectrum = SpectrumOrder::Largest;
    else if (v == "magnitude") cfg.spectrum = SpectrumOrder::Magnitude;
    else throw Error(ErrorKind::Config, "spectrum must be 'largest' or 'magnitude'");
  } else if (key == "bayes_draws") {
    cfg.bayes_draws = parse_uint(key, value);
  } else if (key == "model.type") {
    const auto v = trim(value);
    if (v == "sbm") cfg.model.kind = ModelSpec::Kind::Sbm;
    else if (v == "er") cfg.model.kind = ModelSpec::Kind::ErdosRenyi;
    else if (v == "atoms") cfg.model.kind = ModelSpec::Kind::Atoms;
    else throw Error(ErrorKind::Config, "model.type must be sbm, er or atoms");
  } else if (key == "model.B") {
    cfg.model.block = parse_matrix(key, value);
  } else if (key == "model.pi") {
    cfg.model.pi = parse_list(key, value);
  } else if (key == "model.p") {
    cfg.model.p = parse_double(key, value);
  } else if (key == "model.atoms") {
    cfg.model.atoms = parse_matrix(key, value);
  } else if (key == "model.weights") {
    cfg.model.weights = parse_list(key, value);
  } else {
    throw Error(ErrorKind::Config, "unknown key '" + key + "'");
  }
}

/// Flat key=value text with optional [section] headers; '#' starts a
/// comment line.
inline std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": bad section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    out.emplace_back(key, detail::trim(line.substr(eq + 1)));
  }
  return out;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Config, "cannot read config file " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Defaults that depend on the experiment: grid, replicate count and, for
/// er-clt, the Erdos-Renyi model. Only fills fields the user left unset.
struct ExplicitFields {
  bool n_grid = false, replicates = false, model_type = false;
};

inline void apply_experiment_defaults(ExperimentConfig& cfg, const ExplicitFields& set) {
  if (!set.model_type && cfg.experiment == Experiment::ErClt) cfg.model.kind = ModelSpec::Kind::ErdosRenyi;
  if (!set.n_grid) {
    switch (cfg.experiment) {
      case Experiment::TableCov: cfg.n_grid = {2000, 4000, 8000, 16000}; break;
      case Experiment::EllipsePlot: cfg.n_grid = {1000, 2000, 4000, 8000}; break;
      case Experiment::ClusterBench: cfg.n_grid = detail::parse_grid("n_grid", "1000:4000:250"); break;
      case Experiment::ErClt: cfg.n_grid = {4000}; break;
      case Experiment::BoundsAudit: cfg.n_grid = {2000}; break;
      case Experiment::Sample: cfg.n_grid = {1000}; break;
    }
  }
  if (!set.replicates) {
    switch (cfg.experiment) {
      case Experiment::TableCov: cfg.replicates = 10; break;
      case Experiment::EllipsePlot: cfg.replicates = 1; break;
      case Experiment::ClusterBench: cfg.replicates = 100; break;
      case Experiment::ErClt: cfg.replicates = 20; break;
      case Experiment::BoundsAudit: cfg.replicates = 100; break;
      case Experiment::Sample: cfg.replicates = 1; break;
    }
  }
}

/// Builds a config from file settings followed by overrides (later wins).
inline ExperimentConfig make_config(const std::string& experiment,
                                    const std::vector<std::pair<std::string, std::string>>& settings) {
  ExperimentConfig cfg;
  ExplicitFields set;
  std::string exp_name = experiment;
  for (const auto& [k, v] : settings)
    if (k == "experiment" && exp_name.empty()) exp_name = v;
  if (exp_name.empty()) throw Error(ErrorKind::Config, "no experiment given");
  for (const auto& [k, v] : settings) {
    if (k == "experiment") continue;
    apply_setting(cfg, k, v);
    if (k == "n_grid" || k == "n") set.n_grid = true;
    if (k == "replicates") set.replicates = true;
    if (k == "model.type") set.model_type = true;
  }
  cfg.experiment = parse_experiment(detail::trim(exp_name));
  apply_experiment_defaults(cfg, set);
  cfg.validate();
  return cfg;
}

}  // namespace rdpg::experiments
