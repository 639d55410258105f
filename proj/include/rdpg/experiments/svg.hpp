#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "rdpg/graph_io.hpp"

namespace rdpg::experiments {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

/// A rectangular plot panel mapping data coordinates linearly onto a
/// pixel box inside an SVG document.
struct Panel {
  double left, top, width, height;
  double x0, x1, y0, y1;  // data range

  double px(double x) const { return left + (x - x0) / (x1 - x0) * width; }
  double py(double y) const { return top + height - (y - y0) / (y1 - y0) * height; }
};

class SvgDocument {
 public:
  SvgDocument(double width, double height) : width_(width), height_(height) {}

  void frame(const Panel& p, const std::string& title, const std::string& xlabel, const std::string& ylabel) {
    body_ << "<rect x=\"" << fmt(p.left) << "\" y=\"" << fmt(p.top) << "\" width=\"" << fmt(p.width)
          << "\" height=\"" << fmt(p.height) << "\" fill=\"none\" stroke=\"#444\"/>\n";
    text(p.left + p.width / 2, p.top - 8, title, "middle", 13);
    text(p.left + p.width / 2, p.top + p.height + 32, xlabel, "middle", 11);
    body_ << "<text x=\"" << fmt(p.left - 40) << "\" y=\"" << fmt(p.top + p.height / 2)
          << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 "
          << fmt(p.left - 40) << ' ' << fmt(p.top + p.height / 2) << ")\">" << xml_escape(ylabel) << "</text>\n";
    for (int t = 0; t <= 4; ++t) {
      const double xv = p.x0 + (p.x1 - p.x0) * t / 4.0;
      const double yv = p.y0 + (p.y1 - p.y0) * t / 4.0;
      text(p.px(xv), p.top + p.height + 14, tick(xv), "middle", 9);
      text(p.left - 4, p.py(yv) + 3, tick(yv), "end", 9);
    }
  }

  void circle(double cx, double cy, double r, const std::string& color, double opacity = 0.5) {
    body_ << "<circle cx=\"" << fmt(cx) << "\" cy=\"" << fmt(cy) << "\" r=\"" << fmt(r) << "\" fill=\"" << color
          << "\" fill-opacity=\"" << fmt(opacity) << "\"/>\n";
  }

  void polyline(const std::vector<std::array<double, 2>>& pts, const std::string& color, bool closed,
                bool dashed = false, double stroke_width = 1.5) {
    body_ << "<" << (closed ? "polygon" : "polyline") << " points=\"";
    for (const auto& p : pts) body_ << fmt(p[0]) << ',' << fmt(p[1]) << ' ';
    body_ << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << fmt(stroke_width) << '"';
    if (dashed) body_ << " stroke-dasharray=\"6,4\"";
    body_ << "/>\n";
  }

  void text(double x, double y, const std::string& s, const std::string& anchor = "start", int size = 11) {
    body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-family=\"sans-serif\" font-size=\"" << size
          << "\" text-anchor=\"" << anchor << "\">" << xml_escape(s) << "</text>\n";
  }

  std::string str() const {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(width_) << "\" height=\""
        << fmt(height_) << "\" viewBox=\"0 0 " << fmt(width_) << ' ' << fmt(height_) << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body_.str() << "</svg>\n";
    return out.str();
  }

 private:
  static std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
  }

  double width_, height_;
  std::ostringstream body_;
};

}  // namespace rdpg::experiments
