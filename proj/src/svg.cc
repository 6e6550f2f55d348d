#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "lyapset/cli.h"
#include "lyapset/limits.h"

namespace lyapset {
namespace {

using nlohmann::json;

constexpr double kCanvas = 600.0;
constexpr double kMargin = 48.0;

// Screen coordinates are printed with a fixed format so output bytes only
// depend on the report.
std::string F(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  // Avoid "-0.00".
  if (std::string(buf) == "-0.00") return "0.00";
  return buf;
}

std::string G(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string Escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* LabelColor(const std::string& label) {
  if (label == "attracted") return "#9bd39b";
  if (label == "weakly_attracted") return "#f3e08a";
  return "#f2a3a3";
}

std::vector<double> Vec(const json& j) { return j.get<std::vector<double>>(); }

struct Extent {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void Add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool empty() const { return lo > hi; }
};

// World → screen mapping. In 1-D the vertical axis is time.
class Canvas {
 public:
  Canvas(int n, int ax, int ay) : one_d_(n == 1), ax_(ax), ay_(ay) {}

  bool one_d() const { return one_d_; }

  double U(const std::vector<double>& x) const { return x[ax_]; }
  double V(const std::vector<double>& x) const { return one_d_ ? 0.0 : x[ay_]; }

  void AddU(double u) { eu_.Add(u); }
  void AddV(double v) { ev_.Add(v); }
  void Add(const std::vector<double>& x, double grow = 0.0) {
    eu_.Add(U(x) - grow);
    eu_.Add(U(x) + grow);
    if (!one_d_) {
      ev_.Add(V(x) - grow);
      ev_.Add(V(x) + grow);
    }
  }

  void Finish() {
    for (Extent* e : {&eu_, &ev_}) {
      if (e->empty()) *e = {-1.0, 1.0};
      if (e->hi - e->lo < 1e-9) {
        e->lo -= 1.0;
        e->hi += 1.0;
      }
      const double pad = 0.05 * (e->hi - e->lo);
      e->lo -= pad;
      e->hi += pad;
    }
    const double span = kCanvas - 2 * kMargin;
    su_ = span / (eu_.hi - eu_.lo);
    sv_ = span / (ev_.hi - ev_.lo);
    if (!one_d_) {
      // Equal aspect so circles stay round; center the shorter axis.
      const double s = std::min(su_, sv_);
      ou_ = kMargin + 0.5 * (span - s * (eu_.hi - eu_.lo));
      ov_ = kMargin + 0.5 * (span - s * (ev_.hi - ev_.lo));
      su_ = sv_ = s;
    } else {
      ou_ = ov_ = kMargin;
    }
  }

  double X(double u) const { return ou_ + (u - eu_.lo) * su_; }
  double Y(double v) const { return kCanvas - (ov_ + (v - ev_.lo) * sv_); }
  double LenU(double d) const { return d * su_; }
  double LenV(double d) const { return d * sv_; }
  const Extent& eu() const { return eu_; }
  const Extent& ev() const { return ev_; }

 private:
  bool one_d_;
  int ax_, ay_;
  Extent eu_, ev_;
  double su_ = 1, sv_ = 1, ou_ = 0, ov_ = 0;
};

void Rect(std::ostream& o, double x0, double y0, double x1, double y1,
          const std::string& attrs) {
  o << "<rect x=\"" << F(std::min(x0, x1)) << "\" y=\"" << F(std::min(y0, y1))
    << "\" width=\"" << F(std::fabs(x1 - x0)) << "\" height=\"" << F(std::fabs(y1 - y0))
    << "\" " << attrs << "/>\n";
}

void Circle(std::ostream& o, double cx, double cy, double r, const std::string& attrs) {
  o << "<circle cx=\"" << F(cx) << "\" cy=\"" << F(cy) << "\" r=\"" << F(r) << "\" "
    << attrs << "/>\n";
}

// Outline (or fill) of the r-neighbourhood of M. r = 0 draws M itself.
void DrawNeighbourhood(std::ostream& o, const Canvas& c, const json& set, double r,
                       const std::string& attrs) {
  const std::string type = set["type"].get<std::string>();
  const double top = c.Y(c.ev().hi), bottom = c.Y(c.ev().lo);
  auto interval = [&](double lo, double hi) {
    // Degenerate intervals (M itself in 1-D) still get a visible sliver.
    const double mid = 0.5 * (c.X(lo) + c.X(hi));
    const double half = std::max(0.5 * (c.X(hi) - c.X(lo)), 1.0);
    Rect(o, mid - half, top, mid + half, bottom, attrs);
  };
  if (type == "point" || type == "ball") {
    const auto p = Vec(set.contains("coords") ? set["coords"] : set["center"]);
    const double radius = r + (type == "ball" ? set["radius"].get<double>() : 0.0);
    if (c.one_d()) {
      interval(c.U(p) - radius, c.U(p) + radius);
    } else {
      Circle(o, c.X(c.U(p)), c.Y(c.V(p)), std::max(c.LenU(radius), 3.0), attrs);
    }
  } else if (type == "box") {
    const auto lo = Vec(set["lo"]), hi = Vec(set["hi"]);
    if (c.one_d()) {
      interval(c.U(lo) - r, c.U(hi) + r);
    } else {
      const double x0 = c.X(c.U(lo) - r), x1 = c.X(c.U(hi) + r);
      const double y0 = c.Y(c.V(lo) - r), y1 = c.Y(c.V(hi) + r);
      Rect(o, x0, y0, x1, y1, "rx=\"" + F(c.LenU(r)) + "\" " + attrs);
    }
  } else {
    for (const auto& q : set["points"]) {
      const auto p = Vec(q);
      if (c.one_d()) {
        interval(c.U(p) - r, c.U(p) + r);
      } else if (r > 0.0) {
        Circle(o, c.X(c.U(p)), c.Y(c.V(p)), c.LenU(r), attrs);
      } else {
        Circle(o, c.X(c.U(p)), c.Y(c.V(p)), 1.5, attrs);
      }
    }
  }
}

}  // namespace

PlotAxes ParseAxes(const std::string& text) {
  int i = 0, j = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d,%d%c", &i, &j, &tail) != 2 || i < 1 || j < 1 || i == j) {
    throw PlotError("--axes expects two distinct 1-based coordinates, e.g. --axes=1,2");
  }
  return {i, j};
}

std::string RenderSvg(const json& report, const std::optional<PlotAxes>& axes) {
  if (!report.contains("problem") || !report.contains("set") || !report.contains("blocks")) {
    throw PlotError("not a lyapset report (missing problem, set or blocks)");
  }
  const int n = report["problem"]["dimension"].get<int>();
  int ax = 0, ay = 1;
  if (axes) {
    if (axes->first > n || axes->second > n) {
      throw PlotError("--axes index exceeds the problem dimension " + std::to_string(n));
    }
    ax = axes->first - 1;
    ay = axes->second - 1;
  } else if (n > 2) {
    throw PlotError("cannot plot a " + std::to_string(n) +
                    "-dimensional problem directly; choose coordinates with --axes=i,j");
  }

  const json& set = report["set"];
  const json& blocks = report["blocks"];
  Canvas c(n, ax, ay);

  // Everything drawn contributes to the viewport.
  if (blocks.contains("roa")) {
    c.Add(Vec(blocks["roa"]["box"]["lo"]));
    c.Add(Vec(blocks["roa"]["box"]["hi"]));
  }
  double eps_max = 0.0;
  if (blocks.contains("stability")) {
    for (const auto& pair : blocks["stability"]["pairs"]) {
      eps_max = std::max(eps_max, pair["epsilon"].get<double>());
    }
  }
  {
    const std::string type = set["type"].get<std::string>();
    if (type == "point") c.Add(Vec(set["coords"]), eps_max);
    if (type == "ball") c.Add(Vec(set["center"]), set["radius"].get<double>() + eps_max);
    if (type == "box") {
      c.Add(Vec(set["lo"]), eps_max);
      c.Add(Vec(set["hi"]), eps_max);
    }
    if (type == "cloud") {
      for (const auto& q : set["points"]) c.Add(Vec(q), eps_max);
    }
  }
  if (blocks.contains("omega") && blocks["omega"].contains("points")) {
    for (const auto& q : blocks["omega"]["points"]) c.Add(Vec(q));
  }
  if (blocks.contains("trajectories")) {
    for (const auto& orbit : blocks["trajectories"]["orbits"]) {
      for (const auto& q : orbit["states"]) c.Add(Vec(q));
      if (c.one_d()) {
        for (const auto& t : orbit["times"]) c.AddV(t.get<double>());
      }
    }
  }
  if (c.one_d()) c.AddV(0.0);
  c.Finish();

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << F(kCanvas) << "\" height=\""
    << F(kCanvas) << "\" viewBox=\"0 0 " << F(kCanvas) << " " << F(kCanvas) << "\">\n";
  o << "<title>" << Escape(report.value("field_id", std::string())) << "</title>\n";
  Rect(o, 0, 0, kCanvas, kCanvas, "fill=\"#ffffff\"");

  o << "<g id=\"roa\" shape-rendering=\"crispEdges\">\n";
  if (blocks.contains("roa")) {
    const json& roa = blocks["roa"];
    const Box box{ToPoint(Vec(roa["box"]["lo"])), ToPoint(Vec(roa["box"]["hi"]))};
    const auto resolution = roa["resolution"].get<std::vector<int>>();
    const auto labels = roa["labels"].get<std::vector<std::string>>();
    const std::vector<StatePoint> nodes = GridNodes(box, resolution);
    auto cell = [&](int axis) {
      const double span = box.hi[axis] - box.lo[axis];
      return resolution[axis] > 1 ? span / (resolution[axis] - 1) : 1.0;
    };
    const double wu = cell(ax);
    const double wv = c.one_d() ? 0.0 : cell(ay);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const auto p = ToVector(nodes[k]);
      const std::string attrs = std::string("class=\"roa-cell\" fill=\"") +
                                LabelColor(k < labels.size() ? labels[k] : "") + "\"";
      const double u = c.U(p);
      if (c.one_d()) {
        Rect(o, c.X(u - wu / 2), c.Y(c.ev().hi), c.X(u + wu / 2), c.Y(c.ev().lo), attrs);
      } else {
        const double v = c.V(p);
        Rect(o, c.X(u - wu / 2), c.Y(v - wv / 2), c.X(u + wu / 2), c.Y(v + wv / 2), attrs);
      }
    }
  }
  o << "</g>\n";

  o << "<g id=\"set\">\n";
  DrawNeighbourhood(o, c, set, 0.0,
                    "class=\"set\" fill=\"#4a6fa5\" fill-opacity=\"0.6\" stroke=\"#26466d\"");
  o << "</g>\n";

  if (blocks.contains("stability")) {
    o << "<g id=\"neighbourhoods\">\n";
    for (const auto& pair : blocks["stability"]["pairs"]) {
      DrawNeighbourhood(o, c, set, pair["epsilon"].get<double>(),
                        "class=\"epsilon\" fill=\"none\" stroke=\"#c0392b\" "
                        "stroke-dasharray=\"6 3\"");
      if (!pair["delta"].is_null()) {
        DrawNeighbourhood(o, c, set, pair["delta"].get<double>(),
                          "class=\"delta\" fill=\"none\" stroke=\"#2e86c1\" "
                          "stroke-dasharray=\"2 2\"");
      }
    }
    o << "</g>\n";
  }

  if (blocks.contains("omega") && blocks["omega"].contains("points")) {
    o << "<g id=\"omega\">\n";
    for (const auto& q : blocks["omega"]["points"]) {
      const auto p = Vec(q);
      Circle(o, c.X(c.U(p)), c.one_d() ? c.Y(c.ev().lo) : c.Y(c.V(p)), 1.0,
             "class=\"omega\" fill=\"#8e44ad\"");
    }
    o << "</g>\n";
  }

  if (blocks.contains("trajectories")) {
    o << "<g id=\"trajectories\">\n";
    for (const auto& orbit : blocks["trajectories"]["orbits"]) {
      const auto& states = orbit["states"];
      const auto& times = orbit["times"];
      o << "<polyline class=\"trajectory\" fill=\"none\" stroke=\"#222222\" "
           "stroke-width=\"1.2\" points=\"";
      for (std::size_t k = 0; k < states.size(); ++k) {
        const auto p = Vec(states[k]);
        const double y = c.one_d() ? c.Y(times[k].get<double>()) : c.Y(c.V(p));
        o << (k ? " " : "") << F(c.X(c.U(p))) << "," << F(y);
      }
      o << "\"/>\n";
    }
    o << "</g>\n";
  }

  // Frame and axis annotations.
  const double x0 = c.X(c.eu().lo), x1 = c.X(c.eu().hi);
  const double y0 = c.Y(c.ev().lo), y1 = c.Y(c.ev().hi);
  o << "<g id=\"axes\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\">\n";
  Rect(o, x0, y0, x1, y1, "fill=\"none\" stroke=\"#333333\"");
  o << "<text x=\"" << F(x0) << "\" y=\"" << F(y0 + 14) << "\">" << G(c.eu().lo) << "</text>\n";
  o << "<text x=\"" << F(x1) << "\" y=\"" << F(y0 + 14) << "\" text-anchor=\"end\">"
    << G(c.eu().hi) << "</text>\n";
  o << "<text x=\"" << F(x0 - 4) << "\" y=\"" << F(y0) << "\" text-anchor=\"end\">"
    << G(c.ev().lo) << "</text>\n";
  o << "<text x=\"" << F(x0 - 4) << "\" y=\"" << F(y1 + 10) << "\" text-anchor=\"end\">"
    << G(c.ev().hi) << "</text>\n";
  o << "<text x=\"" << F(0.5 * (x0 + x1)) << "\" y=\"" << F(y0 + 28)
    << "\" text-anchor=\"middle\">x" << ax + 1 << "</text>\n";
  o << "<text x=\"" << F(x0 - 30) << "\" y=\"" << F(0.5 * (y0 + y1)) << "\">"
    << (c.one_d() ? std::string("t") : "x" + std::to_string(ay + 1)) << "</text>\n";
  o << "</g>\n";
  o << "</svg>\n";
  return o.str();
}

int CmdPlot(const PlotArgs& args, std::ostream& out, std::ostream& err) {
  namespace fs = std::filesystem;
  json report;
  {
    std::ifstream in(args.report_path, std::ios::binary);
    if (!in) {
      err << "error: cannot open report '" << args.report_path << "'\n";
      return kExitInputError;
    }
    try {
      report = json::parse(in);
    } catch (const json::parse_error& e) {
      err << "error: malformed JSON at byte " << e.byte << " in '" << args.report_path << "'\n";
      return kExitInputError;
    }
  }
  std::string svg;
  try {
    svg = RenderSvg(report, args.axes);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  fs::path path = args.out_path;
  if (path.empty()) {
    std::string stem = fs::path(args.report_path).stem().string();  // drops ".json"
    const std::string suffix = ".report";
    if (stem.size() > suffix.size() && stem.ends_with(suffix)) {
      stem.resize(stem.size() - suffix.size());
    }
    path = fs::path(args.report_path).parent_path() / (stem + ".svg");
  }
  std::ofstream file(path, std::ios::binary);
  file << svg;
  if (!file) {
    err << "error: cannot write '" << path.string() << "'\n";
    return kExitInputError;
  }
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

}  // namespace lyapset
