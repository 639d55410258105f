#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rdpg/clt.hpp"
#include "rdpg/embed.hpp"
#include "rdpg/graph_io.hpp"

namespace rdpg {

inline constexpr std::string_view kVersion = "1.0.0";

/// RFC-4180 style writer with LF line endings. Fields containing a comma,
/// quote or newline are quoted; doubles use the shortest round-trip form so
/// equal values always print identically.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void comment(std::string_view text) { out_ << "# " << text << '\n'; }

  template <class... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((write_field(fields, first)), ...);
    out_ << '\n';
  }

  void row_vector(const std::vector<std::string>& fields) {
    bool first = true;
    for (const auto& f : fields) write_field(f, first);
    out_ << '\n';
  }

  static std::string quote(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    out += '"';
    return out;
  }

  static std::string field(double v) { return format_double(v); }
  static std::string field(float v) { return format_double(v); }
  static std::string field(const std::string& v) { return v; }
  static std::string field(std::string_view v) { return std::string(v); }
  static std::string field(const char* v) { return v; }
  template <class T>
    requires std::is_integral_v<T>
  static std::string field(T v) {
    return std::to_string(v);
  }

 private:
  template <class T>
  void write_field(const T& v, bool& first) {
    if (!first) out_ << ',';
    first = false;
    out_ << quote(field(v));
  }

  std::ostream& out_;
};

/// `# eigenvalues v1 ... vd` comment, an `x1..xd` header, then one row per
/// vertex.
inline void write_embedding_csv(std::ostream& out, const Embedding& e) {
  CsvWriter w(out);
  std::string vals = "eigenvalues";
  for (double v : e.values) vals += " " + format_double(v);
  w.comment(vals);
  std::vector<std::string> header;
  for (std::size_t j = 0; j < e.d; ++j) header.push_back("x" + std::to_string(j + 1));
  w.row_vector(header);
  for (std::size_t i = 0; i < e.xhat.rows(); ++i) {
    std::vector<std::string> r;
    for (double v : e.xhat.row(i)) r.push_back(format_double(v));
    w.row_vector(r);
  }
}

/// One row per vertex: label then the d residual coordinates.
inline void write_residuals_csv(std::ostream& out, const ResidualReport& rep) {
  CsvWriter w(out);
  std::vector<std::string> header{"label"};
  for (std::size_t j = 0; j < rep.residuals.cols(); ++j) header.push_back("r" + std::to_string(j + 1));
  w.row_vector(header);
  for (std::size_t i = 0; i < rep.residuals.rows(); ++i) {
    std::vector<std::string> r{std::to_string(rep.labels[i])};
    for (double v : rep.residuals.row(i)) r.push_back(format_double(v));
    w.row_vector(r);
  }
}

/// Long-format summary: item,block,name,value. Items are empirical_cov,
/// theoretical_cov, count and diagnostic; covariance names are c<i><j>
/// (1-based).
inline void write_residual_summary_csv(std::ostream& out, const ResidualReport& rep) {
  CsvWriter w(out);
  w.row("item", "block", "name", "value");
  const std::size_t d = rep.residuals.cols();
  for (std::size_t k = 0; k < rep.block_counts.size(); ++k) {
    w.row("count", k + 1, "n", rep.block_counts[k]);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) {
        const std::string name = "c" + std::to_string(a + 1) + std::to_string(b + 1);
        w.row("empirical_cov", k + 1, name, rep.empirical_cov[k](a, b));
      }
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) {
        const std::string name = "c" + std::to_string(a + 1) + std::to_string(b + 1);
        w.row("theoretical_cov", k + 1, name, rep.theoretical_cov[k](a, b));
      }
  }
  for (const auto& [name, value] : rep.diagnostics) w.row("diagnostic", "", name, value);
}

}  // namespace rdpg
