// spectral-clt: command-line driver for the experiments.
//
//   spectral-clt <experiment> [--config file] [--n grid] [--replicates r]
//                [--seed s] [--eta e] [--out dir] [--threads t] [--set key=value]...
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure, 1 other.

#include <exception>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "rdpg/error.hpp"
#include "rdpg/experiments/config.hpp"
#include "rdpg/experiments/runners.hpp"

namespace {

using Settings = std::vector<std::pair<std::string, std::string>>;

void summarize(const rdpg::experiments::FileSet& files, const std::string& out_dir) {
  for (const auto& [name, content] : files) {
    if (out_dir.empty()) {
      if (name.ends_with(".csv")) std::cout << "== " << name << '\n' << content;
    } else {
      std::cerr << "wrote " << out_dir << '/' << name << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral embedding CLT experiments for random dot product graphs", "spectral-clt"};
  app.set_version_flag("--version", std::string(rdpg::kVersion));

  std::string experiment, config_path, grid, out_dir;
  std::size_t replicates = 0, threads = 0;
  std::uint64_t seed = 0;
  double eta = 0.0;
  std::vector<std::string> overrides;

  app.add_option("experiment", experiment,
                 "table-cov | ellipse-plot | cluster-bench | er-clt | bounds-audit | sample")
      ->required();
  app.add_option("-c,--config", config_path, "key=value config file");
  auto* n_opt = app.add_option("-n,--n", grid, "vertex counts, e.g. 1000,2000 or 1000:4000:250");
  auto* r_opt = app.add_option("-r,--replicates", replicates, "replicates per n");
  auto* s_opt = app.add_option("-s,--seed", seed, "master seed");
  auto* e_opt = app.add_option("--eta", eta, "confidence parameter in (0, 1/2)");
  auto* o_opt = app.add_option("-o,--out", out_dir, "output directory (stdout when omitted)");
  auto* t_opt = app.add_option("-t,--threads", threads, "worker threads");
  app.add_option("--set", overrides, "extra key=value setting, e.g. model.p=0.5 or level=0.5");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Settings settings;
    if (!config_path.empty()) {
      settings = rdpg::experiments::parse_config_text(rdpg::experiments::read_text_file(config_path));
    }
    if (*n_opt) settings.emplace_back("n_grid", grid);
    if (*r_opt) settings.emplace_back("replicates", std::to_string(replicates));
    if (*s_opt) settings.emplace_back("seed", std::to_string(seed));
    if (*e_opt) settings.emplace_back("eta", rdpg::format_double(eta));
    if (*o_opt) settings.emplace_back("out_dir", out_dir);
    if (*t_opt) settings.emplace_back("threads", std::to_string(threads));
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw rdpg::Error(rdpg::ErrorKind::Config, "--set expects key=value: " + kv);
      settings.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }

    const auto cfg = rdpg::experiments::make_config(experiment, settings);
    std::cerr << "spectral-clt " << rdpg::kVersion << ": " << rdpg::experiments::to_string(cfg.experiment)
              << " config_hash=" << rdpg::experiments::hex64(cfg.hash()) << " threads=" << cfg.threads << '\n';
    summarize(rdpg::experiments::run_experiment(cfg), cfg.out_dir);
    return 0;
  } catch (const rdpg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (e.kind() == rdpg::ErrorKind::Config) return 2;
    if (e.is_numerical()) return 3;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
