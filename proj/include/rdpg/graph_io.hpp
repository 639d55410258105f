#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "rdpg/error.hpp"
#include "rdpg/model.hpp"

namespace rdpg {

// Text layout, LF line endings:
//   n d seed
//   label,x_1,...,x_d        (n lines, one per vertex)
//   i j                      (one line per edge, 0-based, i < j)

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_graph(std::ostream& out, const GraphSample& g) {
  out << g.n << ' ' << g.dim() << ' ' << g.seed << '\n';
  for (std::size_t i = 0; i < g.n; ++i) {
    out << g.labels[i];
    for (double v : g.latent.row(i)) out << ',' << format_double(v);
    out << '\n';
  }
  g.adjacency.for_each_edge([&](std::size_t i, std::size_t j) { out << i << ' ' << j << '\n'; });
}

inline GraphSample read_graph(std::istream& in) {
  GraphSample g;
  std::string line;
  std::size_t d = 0;
  if (!std::getline(in, line)) throw Error(ErrorKind::Io, "missing graph header");
  {
    std::istringstream hs(line);
    if (!(hs >> g.n >> d >> g.seed)) throw Error(ErrorKind::Io, "malformed graph header: " + line);
  }
  g.latent = Matrix(g.n, d);
  g.labels.resize(g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    if (!std::getline(in, line)) throw Error(ErrorKind::Io, "truncated latent block");
    const char* p = line.data();
    const char* end = p + line.size();
    auto r = std::from_chars(p, end, g.labels[i]);
    if (r.ec != std::errc()) throw Error(ErrorKind::Io, "bad label on line " + std::to_string(i + 2));
    p = r.ptr;
    for (std::size_t c = 0; c < d; ++c) {
      if (p == end || *p != ',') throw Error(ErrorKind::Io, "bad latent row " + std::to_string(i + 2));
      ++p;
      auto rv = std::from_chars(p, end, g.latent(i, c));
      if (rv.ec != std::errc()) throw Error(ErrorKind::Io, "bad latent value on line " + std::to_string(i + 2));
      p = rv.ptr;
    }
  }
  g.adjacency = AdjacencyMatrix(g.n);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream es(line);
    std::size_t i = 0, j = 0;
    if (!(es >> i >> j) || i >= j || j >= g.n) throw Error(ErrorKind::Io, "bad edge line: " + line);
    g.adjacency.add_edge(i, j);
  }
  return g;
}

inline void save_graph(const std::string& path, const GraphSample& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
  write_graph(out, g);
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path);
}

inline GraphSample load_graph(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  return read_graph(in);
}

}  // namespace rdpg
