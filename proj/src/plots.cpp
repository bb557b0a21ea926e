#include "lmc/harness.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace lmc {

namespace {

struct Axis {
  double lo, hi;
  bool log;
  double map(double v, double a, double b) const {
    const double t = log ? (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo)) : (v - lo) / (hi - lo);
    return a + t * (b - a);
  }
};

Axis make_axis(const std::vector<double>& v, bool log) {
  double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
  if (log) {
    lo = std::pow(10.0, std::floor(std::log10(lo)));
    hi = std::pow(10.0, std::ceil(std::log10(hi)));
    if (hi <= lo) hi = lo * 10.0;
  } else if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  return {lo, hi, log};
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

std::vector<double> ticks(const Axis& a) {
  std::vector<double> t;
  if (a.log) {
    for (double v = a.lo; v <= a.hi * 1.0001; v *= 10.0) t.push_back(v);
  } else {
    for (int i = 0; i <= 4; ++i) t.push_back(a.lo + (a.hi - a.lo) * i / 4.0);
  }
  return t;
}

std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                     const std::vector<double>& xs, const std::vector<double>& ys, bool logx, bool logy,
                     const std::string& note) {
  const double W = 640, H = 420, left = 80, right = 20, top = 40, bottom = 60;
  const Axis ax = make_axis(xs, logx), ay = make_axis(ys, logy);
  std::ostringstream s;
  s << std::setprecision(6);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << W - left - right << "\" height=\""
    << H - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ticks(ax)) {
    const double px = ax.map(t, left, W - right);
    s << "<line x1=\"" << px << "\" y1=\"" << H - bottom << "\" x2=\"" << px << "\" y2=\"" << H - bottom + 5
      << "\" stroke=\"black\"/><text x=\"" << px << "\" y=\"" << H - bottom + 18 << "\" text-anchor=\"middle\">"
      << fmt(t) << "</text>\n";
  }
  for (double t : ticks(ay)) {
    const double py = ay.map(t, H - bottom, top);
    s << "<line x1=\"" << left - 5 << "\" y1=\"" << py << "\" x2=\"" << left << "\" y2=\"" << py
      << "\" stroke=\"black\"/><text x=\"" << left - 8 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">" << fmt(t)
      << "</text>\n";
  }
  s << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << xlabel
    << "</text>\n";
  s << "<text x=\"18\" y=\"" << (top + H - bottom) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << (top + H - bottom) / 2 << ")\">" << ylabel << "</text>\n";
  s << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i)
    s << ax.map(xs[i], left, W - right) << ',' << ay.map(ys[i], H - bottom, top) << ' ';
  s << "\"/>\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    s << "<circle cx=\"" << ax.map(xs[i], left, W - right) << "\" cy=\"" << ay.map(ys[i], H - bottom, top)
      << "\" r=\"2.5\" fill=\"#1f77b4\"/>\n";
  if (!note.empty())
    s << "<text x=\"" << W - right - 10 << "\" y=\"" << top + 18 << "\" text-anchor=\"end\">" << note << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

// Keeps the points usable on the requested axes.
void filter(std::vector<double>& xs, std::vector<double>& ys, bool logx, bool logy) {
  std::vector<double> a, b;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
    if ((logx && xs[i] <= 0) || (logy && ys[i] <= 0)) continue;
    a.push_back(xs[i]);
    b.push_back(ys[i]);
  }
  xs = std::move(a);
  ys = std::move(b);
}

std::vector<double> numbers(const json& j) {
  std::vector<double> v;
  if (!j.is_array()) return v;
  for (const auto& x : j) v.push_back(x.is_number() ? x.get<double>() : NAN);
  return v;
}

}  // namespace

PlotOutcome emit_plots(const std::filesystem::path& report_path, const std::filesystem::path& out_dir) {
  std::ifstream in(report_path);
  if (!in) throw UsageError("plot: cannot open " + report_path.string());
  json rep;
  try {
    rep = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("plot: not a JSON report: ") + e.what());
  }
  if (!rep.contains("experiment") || !rep.contains("results")) throw UsageError("plot: report lacks experiment/results");

  const std::string kind = rep["experiment"].get<std::string>();
  const std::string name = rep.contains("config") ? rep["config"].value("name", "experiment") : "experiment";
  const auto dir = out_dir.empty() ? report_path.parent_path() : out_dir;
  const auto& res = rep["results"];
  PlotOutcome out;

  std::vector<double> xs, ys;
  std::string title, xl, yl, note, suffix;
  bool logx = false, logy = true;
  if (kind == "od" || kind == "ud") {
    if (res.contains("series"))
      for (const auto& r : res["series"]) {
        xs.push_back(r["iteration"].get<double>());
        ys.push_back(r["w1"].get<double>());
      }
    title = "sliced W1 to target (" + kind + ")";
    xl = "iteration";
    yl = "W1";
    suffix = ".w1.svg";
  } else if (kind == "coupled-od") {
    xs = numbers(res.value("times", json::array()));
    ys = numbers(res.value("mean_f", json::array()));
    title = "E f(|x - y|), reflection coupling";
    xl = "t";
    yl = "mean f";
    if (res.contains("slope") && res["slope"].is_number()) note = "slope " + fmt(res["slope"].get<double>());
    suffix = ".coupling.svg";
  } else if (kind == "coupled-ud") {
    xs = numbers(res.value("times", json::array()));
    ys = numbers(res.value("mean_L", json::array()));
    title = "mean Lyapunov value";
    xl = "t";
    yl = "mean L";
    suffix = ".lyapunov.svg";
  } else {
    xs = numbers(res.value("deltas", json::array()));
    ys = numbers(res.value("errors", json::array()));
    logx = true;
    title = kind == "discretization-od" ? "one-step error" : "gradient-freeze error";
    xl = "delta";
    yl = "error";
    if (res.contains("slope") && res["slope"].is_number()) note = "slope " + fmt(res["slope"].get<double>());
    suffix = ".sweep.svg";
  }
  filter(xs, ys, logx, logy);
  if (xs.empty()) {
    out.warnings.push_back("no plottable points in " + report_path.string() + "; no figure written");
    return out;
  }
  const auto p = dir / (name + suffix);
  atomic_write(p, svg_plot(title, xl, yl, xs, ys, logx, logy, note));
  out.files.push_back(p);
  return out;
}

}  // namespace lmc
