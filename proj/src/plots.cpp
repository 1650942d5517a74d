#include "peps/plots.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "peps/errors.hpp"

namespace peps {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 180.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
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

std::string file_stem(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                    c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out.empty() ? "instance" : out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) {
      const double pad = std::max(1e-3, std::abs(hi) * 0.05);
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

std::string render_svg(const std::string& title, const std::string& y_label,
                       const std::vector<Series>& series) {
  Range xr, yr;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xr.add(s.x[i]);
      const double b = i < s.band.size() ? s.band[i] : 0.0;
      yr.add(s.y[i] - b);
      yr.add(s.y[i] + b);
    }
  }
  xr.finish();
  yr.finish();
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) {
    y = std::clamp(y, yr.lo, yr.hi);
    return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph;
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth)
      << "\" height=\"" << num(kHeight) << "\" font-family=\"sans-serif\" "
      << "font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"22\" "
      << "text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
      << "</text>\n";
  out << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\""
      << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    out << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(kTop + ph + 18)
        << "\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
    out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(yv) + 4)
        << "\" text-anchor=\"end\">" << tick_label(yv) << "</text>\n";
    out << "<line x1=\"" << num(kLeft) << "\" x2=\"" << num(kLeft + pw)
        << "\" y1=\"" << num(py(yv)) << "\" y2=\"" << num(py(yv))
        << "\" stroke=\"#dddddd\"/>\n";
  }
  out << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 10)
      << "\" text-anchor=\"middle\">samples t</text>\n";
  out << "<text transform=\"translate(16," << num(kTop + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(y_label)
      << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    if (!s.band.empty() && !s.x.empty()) {
      out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" "
          << "stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        out << num(px(s.x[i])) << ',' << num(py(s.y[i] + s.band[i])) << ' ';
      }
      for (std::size_t i = s.x.size(); i-- > 0;) {
        out << num(px(s.x[i])) << ',' << num(py(s.y[i] - s.band[i])) << ' ';
      }
      out << "\"/>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      out << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
    }
    out << "\"/>\n";
    const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
    out << "<line x1=\"" << num(kLeft + pw + 12) << "\" x2=\""
        << num(kLeft + pw + 32) << "\" y1=\"" << num(ly) << "\" y2=\""
        << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << num(kLeft + pw + 38) << "\" y=\"" << num(ly + 4)
        << "\">" << xml_escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::vector<std::filesystem::path> emit_plots(
    const std::vector<MetricRow>& rows, const std::filesystem::path& out_dir) {
  if (rows.empty()) throw InputError("no result rows to plot");
  std::filesystem::create_directories(out_dir);

  // Per (instance, strategy, t): mean cumulative rejections and wall time.
  struct Acc {
    double rejections = 0.0;
    double wall = 0.0;
    int n = 0;
  };
  std::map<std::string, std::map<std::string, std::map<long, Acc>>> per_step;
  for (const auto& r : rows) {
    auto& a = per_step[r.instance_id][r.strategy][r.t];
    a.rejections += static_cast<double>(r.rejections_cumulative);
    a.wall += r.wall_ms;
    ++a.n;
  }

  std::map<std::string, std::vector<Series>> confidence;
  for (const auto& c : aggregate_confidence(rows)) {
    Series s;
    s.label = c.strategy;
    const bool band = std::any_of(c.count.begin(), c.count.end(),
                                  [](int n) { return n > 1; });
    for (std::size_t i = 0; i < c.t.size(); ++i) {
      s.x.push_back(static_cast<double>(c.t[i]));
      s.y.push_back(c.mean[i]);
      if (band) s.band.push_back(2.0 * c.std_error[i]);
    }
    confidence[c.instance_id].push_back(std::move(s));
  }

  std::vector<std::filesystem::path> written;
  auto write = [&](const std::filesystem::path& path, const std::string& svg) {
    std::ofstream out(path);
    out << svg;
    written.push_back(path);
  };
  for (const auto& [instance, strategies] : per_step) {
    const std::string stem = file_stem(instance);
    write(out_dir / (stem + "_confidence.svg"),
          render_svg(instance + ": identification confidence",
                     "mean posterior confidence", confidence[instance]));

    std::vector<Series> rejections, wall;
    for (const auto& [strategy, by_t] : strategies) {
      Series rs{strategy, {}, {}, {}};
      Series ws{strategy, {}, {}, {}};
      long prev_t = 0;
      double prev_r = 0.0, prev_w = 0.0;
      for (const auto& [t, a] : by_t) {
        const double r = a.rejections / a.n;
        const double w = a.wall / a.n;
        const double dt = static_cast<double>(t - prev_t);
        rs.x.push_back(static_cast<double>(t));
        rs.y.push_back((r - prev_r) / dt);
        ws.x.push_back(static_cast<double>(t));
        ws.y.push_back((w - prev_w) / dt);
        prev_t = t;
        prev_r = r;
        prev_w = w;
      }
      rejections.push_back(std::move(rs));
      wall.push_back(std::move(ws));
    }
    write(out_dir / (stem + "_rejections.svg"),
          render_svg(instance + ": rejection draws per step",
                     "mean draws per step", rejections));
    write(out_dir / (stem + "_wall.svg"),
          render_svg(instance + ": wall time per step", "ms per step", wall));
  }
  return written;
}

}  // namespace peps
