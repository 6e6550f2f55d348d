#include "lyapset/flow.h"

#include <algorithm>
#include <cmath>

namespace lyapset {
namespace {

// Dormand–Prince 5(4) tableau.
constexpr double kC2 = 1.0 / 5.0, kC3 = 3.0 / 10.0, kC4 = 4.0 / 5.0,
                 kC5 = 8.0 / 9.0;
constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0,
                 kA53 = 64448.0 / 6561.0, kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0,
                 kA63 = 46732.0 / 5247.0, kA64 = 49.0 / 176.0,
                 kA65 = -5103.0 / 18656.0;
constexpr double kB1 = 35.0 / 384.0, kB3 = 500.0 / 1113.0,
                 kB4 = 125.0 / 192.0, kB5 = -2187.0 / 6784.0,
                 kB6 = 11.0 / 84.0;
// Fifth-order weights minus the embedded fourth-order weights.
constexpr double kE1 = kB1 - 5179.0 / 57600.0, kE3 = kB3 - 7571.0 / 16695.0,
                 kE4 = kB4 - 393.0 / 640.0, kE5 = kB5 - -92097.0 / 339200.0,
                 kE6 = kB6 - 187.0 / 2100.0, kE7 = -1.0 / 40.0;

constexpr double kMinStep = 1e-12;

// Integrates sign·V forward in internal time s >= 0, carrying the adaptive
// step size across calls so consecutive output samples are cheap.
class Stepper {
 public:
  Stepper(const VectorField& field, double sign, const IntegratorConfig& cfg,
          const StatePoint& x0, double horizon)
      : field_(field),
        sign_(sign),
        cfg_(cfg),
        y_(x0),
        h_(std::min(cfg.dt, horizon)),
        h_max_(horizon) {
    const int n = static_cast<int>(x0.size());
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &y_new_}) {
      v->resize(n);
    }
    CheckDomain(y_);
    have_k1_ = false;
  }

  double time() const { return s_; }
  const StatePoint& state() const { return y_; }

  void AdvanceTo(double target) {
    if (cfg_.method == IntegratorMethod::kRk4Fixed) {
      AdvanceFixed(target);
    } else {
      AdvanceAdaptive(target);
    }
  }

 private:
  void Rhs(const StatePoint& y, StatePoint& out) {
    try {
      field_.Evaluate(y, out);
    } catch (const EvalError& err) {
      throw FlowError(FlowError::Kind::kEvaluation, sign_ * s_, y,
                      std::string("vector field evaluation failed: ") +
                          err.what());
    }
    if (sign_ < 0) out = -out;
  }

  void CheckDomain(const StatePoint& y) const {
    if (!y.allFinite() || y.norm() > cfg_.blowup_radius) {
      throw FlowError(FlowError::Kind::kEscapedDomain, sign_ * s_, y,
                      "escaped domain: |x| exceeded blow-up radius " +
                          std::to_string(cfg_.blowup_radius) + " at t=" +
                          std::to_string(sign_ * s_));
    }
  }

  void CountStep() {
    if (++steps_ > cfg_.max_steps) {
      throw FlowError(FlowError::Kind::kMaxSteps, sign_ * s_, y_,
                      "max_steps exceeded (" + std::to_string(cfg_.max_steps) +
                          ")");
    }
  }

  void AdvanceFixed(double target) {
    while (s_ < target) {
      const double remaining = target - s_;
      const bool last = remaining <= cfg_.dt * (1.0 + 1e-9);
      const double h = last ? remaining : cfg_.dt;
      CountStep();
      Rhs(y_, k1_);
      tmp_ = y_ + 0.5 * h * k1_;
      Rhs(tmp_, k2_);
      tmp_ = y_ + 0.5 * h * k2_;
      Rhs(tmp_, k3_);
      tmp_ = y_ + h * k3_;
      Rhs(tmp_, k4_);
      y_ += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
      s_ = last ? target : s_ + h;
      CheckDomain(y_);
    }
  }

  void AdvanceAdaptive(double target) {
    while (s_ < target) {
      const double remaining = target - s_;
      const bool clipped = remaining <= h_ * 1.0001;
      const double h = clipped ? remaining : h_;
      CountStep();
      if (!have_k1_) {
        Rhs(y_, k1_);
        have_k1_ = true;
      }
      tmp_ = y_ + h * (kA21 * k1_);
      Rhs(tmp_, k2_);
      tmp_ = y_ + h * (kA31 * k1_ + kA32 * k2_);
      Rhs(tmp_, k3_);
      tmp_ = y_ + h * (kA41 * k1_ + kA42 * k2_ + kA43 * k3_);
      Rhs(tmp_, k4_);
      tmp_ = y_ + h * (kA51 * k1_ + kA52 * k2_ + kA53 * k3_ + kA54 * k4_);
      Rhs(tmp_, k5_);
      tmp_ = y_ + h * (kA61 * k1_ + kA62 * k2_ + kA63 * k3_ + kA64 * k4_ +
                       kA65 * k5_);
      Rhs(tmp_, k6_);
      y_new_ = y_ + h * (kB1 * k1_ + kB3 * k3_ + kB4 * k4_ + kB5 * k5_ +
                         kB6 * k6_);
      Rhs(y_new_, k7_);
      tmp_ = h * (kE1 * k1_ + kE3 * k3_ + kE4 * k4_ + kE5 * k5_ + kE6 * k6_ +
                  kE7 * k7_);

      double err_sq = 0.0;
      for (int i = 0; i < y_.size(); ++i) {
        const double scale =
            cfg_.abs_tol +
            cfg_.rel_tol * std::max(std::abs(y_[i]), std::abs(y_new_[i]));
        const double ratio = tmp_[i] / scale;
        err_sq += ratio * ratio;
      }
      const double err = std::sqrt(err_sq / static_cast<double>(y_.size()));
      if (!std::isfinite(err)) {
        h_ = std::max(kMinStep, 0.2 * h);
        if (h <= kMinStep) CheckDomain(y_new_);
        continue;
      }

      const double factor =
          err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      if (err <= 1.0 || h <= kMinStep) {
        y_.swap(y_new_);
        k1_.swap(k7_);  // first same as last
        s_ = clipped ? target : s_ + h;
        CheckDomain(y_);
        const double proposal = std::clamp(h * factor, kMinStep, h_max_);
        h_ = clipped ? std::max(h_, proposal) : proposal;
      } else {
        h_ = std::clamp(h * std::min(1.0, factor), kMinStep, h_max_);
      }
    }
  }

  const VectorField& field_;
  double sign_;
  const IntegratorConfig& cfg_;
  StatePoint y_;
  double s_ = 0.0;
  double h_;
  double h_max_;
  std::int64_t steps_ = 0;
  bool have_k1_ = false;
  StatePoint k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, y_new_;
};

void RequireDimension(const VectorField& field, const StatePoint& x) {
  RequireFinite(x, "flow");
  if (x.size() != field.dimension()) {
    throw GeometryError("flow: state dimension " + std::to_string(x.size()) +
                        " does not match field dimension " +
                        std::to_string(field.dimension()));
  }
}

}  // namespace

const char* ToString(IntegratorMethod method) {
  return method == IntegratorMethod::kRk4Fixed ? "rk4" : "rk45";
}

const char* ToString(FlowError::Kind kind) {
  switch (kind) {
    case FlowError::Kind::kEscapedDomain:
      return "escaped_domain";
    case FlowError::Kind::kMaxSteps:
      return "max_steps_exceeded";
    case FlowError::Kind::kEvaluation:
      return "evaluation_error";
  }
  return "?";
}

void IntegratorConfig::Validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("integrator: dt must be > 0");
  }
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
    throw std::invalid_argument("integrator: tolerances must be > 0");
  }
  if (!(blowup_radius > 0.0)) {
    throw std::invalid_argument("integrator: blowup_radius must be > 0");
  }
  if (max_steps < 1) throw std::invalid_argument("integrator: max_steps must be >= 1");
}

FlowError::FlowError(Kind kind, double time, StatePoint state,
                     const std::string& what)
    : std::runtime_error(what), kind_(kind), time_(time), state_(std::move(state)) {}

std::vector<double> SampleTimes(double T, double out_dt) {
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw std::invalid_argument("sample times: T must be > 0");
  }
  if (!(out_dt > 0.0) || out_dt > T * (1.0 + 1e-12)) {
    throw std::invalid_argument("sample times: need 0 < out_dt <= T");
  }
  const auto count = static_cast<std::size_t>(std::floor(T / out_dt + 1e-9));
  std::vector<double> times;
  times.reserve(count + 2);
  for (std::size_t k = 0; k <= count; ++k) {
    times.push_back(std::min(T, static_cast<double>(k) * out_dt));
  }
  if (T - times.back() > 1e-9 * out_dt) {
    times.push_back(T);
  } else {
    times.back() = T;
  }
  return times;
}

StatePoint Flow(const VectorField& field, const StatePoint& x, double t,
                const IntegratorConfig& cfg) {
  if (t == 0.0) return x;
  cfg.Validate();
  RequireDimension(field, x);
  if (!std::isfinite(t)) throw std::invalid_argument("flow: t must be finite");
  const double horizon = std::abs(t);
  Stepper stepper(field, t < 0.0 ? -1.0 : 1.0, cfg, x, horizon);
  stepper.AdvanceTo(horizon);
  return stepper.state();
}

void IntegrateSampled(
    const VectorField& field, const StatePoint& x, double T, double out_dt,
    const IntegratorConfig& cfg,
    const std::function<bool(double t, const StatePoint& state)>& visit) {
  cfg.Validate();
  RequireDimension(field, x);
  const std::vector<double> times = SampleTimes(T, out_dt);
  if (!visit(0.0, x)) return;
  Stepper stepper(field, 1.0, cfg, x, T);
  for (std::size_t k = 1; k < times.size(); ++k) {
    stepper.AdvanceTo(times[k]);
    if (!visit(times[k], stepper.state())) return;
  }
}

Trajectory ComputeTrajectory(const VectorField& field, const StatePoint& x,
                             double T, double out_dt,
                             const IntegratorConfig& cfg) {
  Trajectory traj;
  traj.field_id = field.id();
  IntegrateSampled(field, x, T, out_dt, cfg,
                   [&traj](double t, const StatePoint& state) {
                     traj.times.push_back(t);
                     traj.states.push_back(state);
                     return true;
                   });
  return traj;
}

double SemigroupDefect(const VectorField& field, const StatePoint& x, double t1,
                       double t2, const IntegratorConfig& cfg) {
  const StatePoint composite = Flow(field, Flow(field, x, t1, cfg), t2, cfg);
  const StatePoint direct = Flow(field, x, t1 + t2, cfg);
  return (composite - direct).norm();
}

}  // namespace lyapset
