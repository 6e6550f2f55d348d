#include "lyapset/problem.h"

#include <fstream>
#include <set>
#include <sstream>

namespace lyapset {
namespace {

using nlohmann::json;

// Schema reader that tracks the JSON pointer of the value it is looking at.
class Reader {
 public:
  Reader(const json& value, std::string pointer)
      : value_(value), pointer_(std::move(pointer)) {}

  [[noreturn]] void Fail(const std::string& message) const {
    throw ProblemError(pointer_.empty() ? "/" : pointer_, message);
  }

  const json& value() const { return value_; }
  const std::string& pointer() const { return pointer_; }

  void RequireObject(std::initializer_list<const char*> allowed) const {
    if (!value_.is_object()) Fail("expected an object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, _] : value_.items()) {
      if (!keys.count(key)) Reader(value_[key], pointer_ + "/" + key).Fail("unknown key");
    }
  }

  bool Has(const char* key) const { return value_.contains(key); }

  Reader At(const char* key) const {
    if (!value_.contains(key)) Fail(std::string("missing required key '") + key + "'");
    return Reader(value_.at(key), pointer_ + "/" + key);
  }

  Reader At(std::size_t i) const {
    return Reader(value_.at(i), pointer_ + "/" + std::to_string(i));
  }

  double Number() const {
    if (!value_.is_number()) Fail("expected a number");
    const double v = value_.get<double>();
    if (!std::isfinite(v)) Fail("expected a finite number");
    return v;
  }

  double Positive() const {
    const double v = Number();
    if (!(v > 0.0)) Fail("expected a positive number");
    return v;
  }

  double NonNegative() const {
    const double v = Number();
    if (!(v >= 0.0)) Fail("expected a non-negative number");
    return v;
  }

  long long Integer(long long min_value) const {
    if (!value_.is_number_integer()) Fail("expected an integer");
    const long long v = value_.get<long long>();
    if (v < min_value) Fail("expected an integer >= " + std::to_string(min_value));
    return v;
  }

  std::string String() const {
    if (!value_.is_string()) Fail("expected a string");
    return value_.get<std::string>();
  }

  std::size_t ArraySize() const {
    if (!value_.is_array()) Fail("expected an array");
    return value_.size();
  }

  std::vector<double> Vector(int n) const {
    if (ArraySize() != static_cast<std::size_t>(n)) {
      Fail("expected an array of " + std::to_string(n) + " numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < value_.size(); ++i) out.push_back(At(i).Number());
    return out;
  }

  std::vector<std::vector<double>> Points(int n, bool nonempty) const {
    const std::size_t count = ArraySize();
    if (nonempty && count == 0) Fail("expected a nonempty array of points");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(At(i).Vector(n));
    return out;
  }

  // [[lo...], [hi...]] with lo <= hi.
  std::pair<std::vector<double>, std::vector<double>> Bounds(int n) const {
    if (ArraySize() != 2) Fail("expected [[lo...], [hi...]]");
    auto lo = At(std::size_t{0}).Vector(n);
    auto hi = At(std::size_t{1}).Vector(n);
    for (int k = 0; k < n; ++k) {
      if (lo[k] > hi[k]) Fail("box lo must be <= hi componentwise");
    }
    return {lo, hi};
  }

 private:
  const json& value_;
  std::string pointer_;
};

template <typename T>
void Optional(const Reader& r, const char* key, T& target,
              T (*read)(const Reader&)) {
  if (r.Has(key)) target = read(r.At(key));
}

double ReadPositive(const Reader& r) { return r.Positive(); }
int ReadCount(const Reader& r) { return static_cast<int>(r.Integer(1)); }

OmegaOptions ReadOmegaOptions(const Reader& r, OmegaOptions o) {
  Optional(r, "transient", o.transient_T, ReadPositive);
  Optional(r, "window", o.window_T, ReadPositive);
  Optional(r, "out_dt", o.out_dt, ReadPositive);
  Optional(r, "cluster_tol", o.cluster_tol, ReadPositive);
  return o;
}

json OmegaOptionsJson(const OmegaOptions& o) {
  return {{"transient", o.transient_T},
          {"window", o.window_T},
          {"out_dt", o.out_dt},
          {"cluster_tol", o.cluster_tol}};
}

SetSpec ReadSet(const Reader& r, int n) {
  if (!r.value().is_object()) r.Fail("expected an object");
  SetSpec s;
  s.type = r.At("type").String();
  if (s.type == "point") {
    r.RequireObject({"type", "coords"});
    s.points = {r.At("coords").Vector(n)};
  } else if (s.type == "cloud") {
    r.RequireObject({"type", "points"});
    s.points = r.At("points").Points(n, true);
  } else if (s.type == "ball") {
    r.RequireObject({"type", "center", "radius"});
    s.center = r.At("center").Vector(n);
    s.radius = r.At("radius").NonNegative();
  } else if (s.type == "box") {
    r.RequireObject({"type", "lo", "hi"});
    s.lo = r.At("lo").Vector(n);
    s.hi = r.At("hi").Vector(n);
    for (int k = 0; k < n; ++k) {
      if (s.lo[k] > s.hi[k]) r.At("lo").Fail("box lo must be <= hi componentwise");
    }
  } else if (s.type == "omega") {
    r.RequireObject({"type", "x0", "transient", "window", "out_dt", "cluster_tol"});
    s.x0 = r.At("x0").Vector(n);
    s.omega = ReadOmegaOptions(r, {});
  } else {
    r.At("type").Fail("unknown set type '" + s.type +
                      "' (expected point, cloud, ball, box or omega)");
  }
  return s;
}

json SetJson(const SetSpec& s) {
  json j = {{"type", s.type}};
  if (s.type == "point") {
    j["coords"] = s.points.front();
  } else if (s.type == "cloud") {
    j["points"] = s.points;
  } else if (s.type == "ball") {
    j["center"] = s.center;
    j["radius"] = s.radius;
  } else if (s.type == "box") {
    j["lo"] = s.lo;
    j["hi"] = s.hi;
  } else {
    j.update(OmegaOptionsJson(s.omega));
    j["x0"] = s.x0;
  }
  return j;
}

IntegratorConfig ReadIntegrator(const Reader& r) {
  r.RequireObject({"method", "dt", "rel_tol", "abs_tol", "blowup_radius", "max_steps"});
  IntegratorConfig c;
  if (r.Has("method")) {
    const std::string m = r.At("method").String();
    if (m == "rk45" || m == "rk45_adaptive") {
      c.method = IntegratorMethod::kRk45Adaptive;
    } else if (m == "rk4" || m == "rk4_fixed") {
      c.method = IntegratorMethod::kRk4Fixed;
    } else {
      r.At("method").Fail("unknown method '" + m + "' (expected rk45 or rk4)");
    }
  }
  Optional(r, "dt", c.dt, ReadPositive);
  Optional(r, "rel_tol", c.rel_tol, ReadPositive);
  Optional(r, "abs_tol", c.abs_tol, ReadPositive);
  Optional(r, "blowup_radius", c.blowup_radius, ReadPositive);
  if (r.Has("max_steps")) c.max_steps = r.At("max_steps").Integer(1);
  return c;
}

std::vector<int> ReadResolution(const Reader& r, int n) {
  if (r.value().is_array()) {
    if (r.ArraySize() != static_cast<std::size_t>(n)) {
      r.Fail("expected one resolution per axis");
    }
    std::vector<int> out;
    for (int k = 0; k < n; ++k) out.push_back(static_cast<int>(r.At(k).Integer(2)));
    return out;
  }
  return std::vector<int>(n, static_cast<int>(r.Integer(2)));
}

}  // namespace

ProblemError::ProblemError(std::string pointer, const std::string& message)
    : std::runtime_error(pointer + ": " + message), pointer_(std::move(pointer)) {}

StatePoint ToPoint(const std::vector<double>& coords) {
  return Eigen::Map<const StatePoint>(coords.data(), static_cast<Eigen::Index>(coords.size()));
}

std::vector<double> ToVector(const StatePoint& p) {
  return std::vector<double>(p.data(), p.data() + p.size());
}

std::uint64_t DeriveSeed(std::uint64_t seed, const std::string& block) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : block) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return seed + h;
}

ProblemDefinition ParseProblem(const json& doc) {
  const Reader root(doc, "");
  root.RequireObject({"dimension", "field", "set", "integrator", "omega", "stability",
                      "roa", "converse", "certificate", "trajectories", "seed"});
  ProblemDefinition p;
  p.dimension = static_cast<int>(root.At("dimension").Integer(1));
  const int n = p.dimension;

  const Reader field = root.At("field");
  if (field.ArraySize() != static_cast<std::size_t>(n)) {
    field.Fail("expected " + std::to_string(n) + " component expressions");
  }
  for (int i = 0; i < n; ++i) {
    const Reader c = field.At(i);
    p.field.push_back(c.String());
    try {
      Parse(p.field.back(), n);
    } catch (const ExprError& err) {
      c.Fail(err.what());
    }
  }

  p.set = ReadSet(root.At("set"), n);
  if (root.Has("integrator")) p.integrator = ReadIntegrator(root.At("integrator"));
  if (root.Has("seed")) p.seed = static_cast<std::uint64_t>(root.At("seed").Integer(0));

  if (root.Has("omega")) {
    const Reader r = root.At("omega");
    r.RequireObject({"x0", "transient", "window", "out_dt", "cluster_tol"});
    p.omega = OmegaBlock{r.At("x0").Vector(n), ReadOmegaOptions(r, {})};
  }

  if (root.Has("stability")) {
    const Reader r = root.At("stability");
    r.RequireObject({"epsilons", "horizon", "shell_samples", "out_dt", "invariance_samples",
                     "invariance_horizon", "box", "resolution", "roa_horizon", "tol"});
    StabilityBlock b;
    const Reader eps = r.At("epsilons");
    if (eps.ArraySize() == 0) eps.Fail("expected a nonempty array");
    for (std::size_t i = 0; i < eps.value().size(); ++i) {
      b.epsilons.push_back(eps.At(i).Positive());
    }
    Optional(r, "horizon", b.horizon, ReadPositive);
    Optional(r, "shell_samples", b.shell_samples, ReadCount);
    Optional(r, "out_dt", b.out_dt, ReadPositive);
    Optional(r, "invariance_samples", b.invariance_samples, ReadCount);
    Optional(r, "invariance_horizon", b.invariance_horizon, ReadPositive);
    if (r.Has("box")) b.box = r.At("box").Bounds(n);
    if (r.Has("resolution")) b.resolution = static_cast<int>(r.At("resolution").Integer(2));
    Optional(r, "roa_horizon", b.roa_horizon, ReadPositive);
    Optional(r, "tol", b.tol, ReadPositive);
    p.stability = b;
  }

  if (root.Has("roa")) {
    const Reader r = root.At("roa");
    r.RequireObject({"box", "resolution", "horizon", "tol", "out_dt"});
    RoaBlock b;
    std::tie(b.lo, b.hi) = r.At("box").Bounds(n);
    b.resolution = r.Has("resolution") ? ReadResolution(r.At("resolution"), n)
                                       : std::vector<int>(n, 21);
    Optional(r, "horizon", b.horizon, ReadPositive);
    Optional(r, "tol", b.tol, ReadPositive);
    Optional(r, "out_dt", b.out_dt, ReadPositive);
    p.roa = b;
  }

  if (root.Has("converse")) {
    const Reader r = root.At("converse");
    r.RequireObject({"lambda", "horizon", "out_dt", "quadrature", "box", "samples", "tol"});
    ConverseBlock b;
    Optional(r, "lambda", b.config.lambda, ReadPositive);
    Optional(r, "horizon", b.config.horizon_T, ReadPositive);
    Optional(r, "out_dt", b.config.out_dt, ReadPositive);
    if (r.Has("quadrature")) {
      const std::string q = r.At("quadrature").String();
      if (q == "simpson") {
        b.config.quadrature = Quadrature::kSimpson;
      } else if (q == "trapezoid") {
        b.config.quadrature = Quadrature::kTrapezoid;
      } else {
        r.At("quadrature").Fail("expected 'simpson' or 'trapezoid'");
      }
    }
    try {
      b.config.Validate();
    } catch (const std::invalid_argument& err) {
      r.Fail(err.what());
    }
    if (r.Has("box")) b.box = r.At("box").Bounds(n);
    Optional(r, "samples", b.samples, ReadCount);
    Optional(r, "tol", b.tol, ReadPositive);
    p.converse = b;
  }

  if (root.Has("certificate")) {
    const Reader r = root.At("certificate");
    r.RequireObject({"L", "annulus", "samples", "tol", "probe_time"});
    CertificateBlock b;
    const Reader l = r.At("L");
    b.candidate = l.String();
    try {
      Parse(b.candidate, n);
    } catch (const ExprError& err) {
      l.Fail(err.what());
    }
    const Reader ann = r.At("annulus");
    if (ann.ArraySize() != 2) ann.Fail("expected [r_in, r_out]");
    b.r_in = ann.At(std::size_t{0}).NonNegative();
    b.r_out = ann.At(std::size_t{1}).Number();
    if (!(b.r_out > b.r_in)) ann.At(std::size_t{1}).Fail("r_out must exceed r_in");
    Optional(r, "samples", b.samples, ReadCount);
    Optional(r, "tol", b.tol, ReadPositive);
    Optional(r, "probe_time", b.probe_time, ReadPositive);
    p.certificate = b;
  }

  if (root.Has("trajectories")) {
    const Reader r = root.At("trajectories");
    r.RequireObject({"initial", "horizon", "out_dt"});
    TrajectoriesBlock b;
    b.initial = r.At("initial").Points(n, true);
    Optional(r, "horizon", b.horizon, ReadPositive);
    Optional(r, "out_dt", b.out_dt, ReadPositive);
    if (b.out_dt > b.horizon) r.At("out_dt").Fail("out_dt must not exceed horizon");
    p.trajectories = b;
  }
  return p;
}

ProblemDefinition LoadProblem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProblemError("/", "cannot open problem file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::parse_error& err) {
    // nlohmann counts bytes from 1; report a 0-based offset.
    const std::size_t offset = err.byte > 0 ? err.byte - 1 : 0;
    throw ProblemError("/", "malformed JSON at byte " + std::to_string(offset) +
                                ": " + err.what());
  }
  return ParseProblem(doc);
}

json ToJson(const ProblemDefinition& p) {
  json j;
  j["dimension"] = p.dimension;
  j["field"] = p.field;
  j["set"] = SetJson(p.set);
  j["integrator"] = {{"method", ToString(p.integrator.method)},
                     {"dt", p.integrator.dt},
                     {"rel_tol", p.integrator.rel_tol},
                     {"abs_tol", p.integrator.abs_tol},
                     {"blowup_radius", p.integrator.blowup_radius},
                     {"max_steps", p.integrator.max_steps}};
  j["seed"] = p.seed;
  if (p.omega) {
    j["omega"] = OmegaOptionsJson(p.omega->options);
    j["omega"]["x0"] = p.omega->x0;
  }
  if (p.stability) {
    const auto& b = *p.stability;
    j["stability"] = {{"epsilons", b.epsilons},
                      {"horizon", b.horizon},
                      {"shell_samples", b.shell_samples},
                      {"out_dt", b.out_dt},
                      {"invariance_samples", b.invariance_samples},
                      {"invariance_horizon", b.invariance_horizon},
                      {"resolution", b.resolution},
                      {"roa_horizon", b.roa_horizon},
                      {"tol", b.tol}};
    if (b.box) j["stability"]["box"] = {b.box->first, b.box->second};
  }
  if (p.roa) {
    j["roa"] = {{"box", {p.roa->lo, p.roa->hi}},
                {"resolution", p.roa->resolution},
                {"horizon", p.roa->horizon},
                {"tol", p.roa->tol},
                {"out_dt", p.roa->out_dt}};
  }
  if (p.converse) {
    const auto& b = *p.converse;
    j["converse"] = {{"lambda", b.config.lambda},
                     {"horizon", b.config.horizon_T},
                     {"out_dt", b.config.out_dt},
                     {"quadrature", ToString(b.config.quadrature)},
                     {"samples", b.samples},
                     {"tol", b.tol}};
    if (b.box) j["converse"]["box"] = {b.box->first, b.box->second};
  }
  if (p.certificate) {
    const auto& b = *p.certificate;
    j["certificate"] = {{"L", b.candidate},
                        {"annulus", {b.r_in, b.r_out}},
                        {"samples", b.samples},
                        {"tol", b.tol},
                        {"probe_time", b.probe_time}};
  }
  if (p.trajectories) {
    j["trajectories"] = {{"initial", p.trajectories->initial},
                         {"horizon", p.trajectories->horizon},
                         {"out_dt", p.trajectories->out_dt}};
  }
  return j;
}

CompactSet ResolveSet(const ProblemDefinition& p) {
  const SetSpec& s = p.set;
  if (s.type == "point") return CompactSet::Point(ToPoint(s.points.front()));
  if (s.type == "ball") return CompactSet::Ball(ToPoint(s.center), s.radius);
  if (s.type == "box") return CompactSet::MakeBox(ToPoint(s.lo), ToPoint(s.hi));
  if (s.type == "cloud") {
    std::vector<StatePoint> pts;
    for (const auto& c : s.points) pts.push_back(ToPoint(c));
    return CompactSet::Cloud(std::move(pts));
  }
  const VectorField field = VectorField::Parse(p.field);
  const OmegaEstimate est = EstimateOmega(field, ToPoint(s.x0), p.integrator, s.omega);
  return CompactSet::Cloud(est.points.points);
}

}  // namespace lyapset
