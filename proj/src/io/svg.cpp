#include "zabs/io/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "zabs/errors.hpp"

namespace zabs::io {

namespace {

constexpr double kWidth = 520.0;
constexpr double kHeight = 400.0;
constexpr double kMarginL = 58.0;
constexpr double kMarginR = 16.0;
constexpr double kMarginT = 34.0;
constexpr double kMarginB = 46.0;

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void absorb(double v) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  void pad() {
    if (!(hi > lo)) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double d = 0.05 * (hi - lo);
    lo -= d;
    hi += d;
  }
};

std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
  const double span = hi - lo;
  double step = std::pow(10.0, std::floor(std::log10(span / target)));
  if (span / step > 5.0 * target) step *= 5.0;
  else if (span / step > 2.0 * target) step *= 2.0;
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step) {
    ticks.push_back(std::fabs(t) < 1e-12 * span ? 0.0 : t);
  }
  return ticks;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<SvgSeries>& series) {
  Range rx, ry;
  for (const auto& s : series) {
    for (double v : s.x) rx.absorb(v);
    for (double v : s.y) ry.absorb(v);
  }
  rx.pad();
  ry.pad();
  const double pw = kWidth - kMarginL - kMarginR;
  const double ph = kHeight - kMarginT - kMarginB;
  auto mapx = [&](double v) { return kMarginL + pw * (v - rx.lo) / (rx.hi - rx.lo); };
  auto mapy = [&](double v) { return kMarginT + ph * (1.0 - (v - ry.lo) / (ry.hi - ry.lo)); };

  std::ofstream out(path);
  if (!out) throw zabs::DataError("cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";

  for (double t : nice_ticks(rx.lo, rx.hi)) {
    const double x = mapx(t);
    out << "<line x1=\"" << x << "\" y1=\"" << kMarginT + ph << "\" x2=\"" << x
        << "\" y2=\"" << kMarginT + ph + 5 << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << x << "\" y=\"" << kMarginT + ph + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">" << fmt(t) << "</text>\n";
  }
  for (double t : nice_ticks(ry.lo, ry.hi)) {
    const double y = mapy(t);
    out << "<line x1=\"" << kMarginL - 5 << "\" y1=\"" << y << "\" x2=\""
        << kMarginL << "\" y2=\"" << y << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << kMarginL - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt(t) << "</text>\n";
  }
  out << "<rect x=\"" << kMarginL << "\" y=\"" << kMarginT << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#444\"/>\n";
  out << "<text x=\"" << kMarginL + pw / 2 << "\" y=\"" << kHeight - 8
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << xlabel << "</text>\n";
  out << "<text x=\"14\" y=\"" << kMarginT + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 14 " << kMarginT + ph / 2 << ")\">" << ylabel
      << "</text>\n";

  for (const auto& s : series) {
    if (s.line) {
      out << "<polyline fill=\"none\" stroke=\"" << s.color
          << "\" stroke-width=\"1.3\"";
      if (s.dashed) out << " stroke-dasharray=\"5,4\"";
      out << " points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        out << mapx(s.x[i]) << "," << mapy(s.y[i]) << " ";
      }
      out << "\"/>\n";
    } else {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        out << "<circle cx=\"" << mapx(s.x[i]) << "\" cy=\"" << mapy(s.y[i])
            << "\" r=\"" << s.radius << "\" fill=\"" << s.color
            << "\" fill-opacity=\"0.7\"/>\n";
      }
    }
  }
  out << "</svg>\n";
}

}  // namespace zabs::io
