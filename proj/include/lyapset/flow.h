#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lyapset/expr.h"
#include "lyapset/geometry.h"

namespace lyapset {

enum class IntegratorMethod { kRk4Fixed, kRk45Adaptive };

const char* ToString(IntegratorMethod method);

/// Numerical realization of the flow φ. `dt` is the fixed step for RK4 and
/// the initial step for the adaptive Dormand–Prince 4(5) pair.
struct IntegratorConfig {
  IntegratorMethod method = IntegratorMethod::kRk45Adaptive;
  double dt = 1e-2;
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  /// Leaving the ball |x| <= blowup_radius is reported as an escape.
  double blowup_radius = 1e6;
  std::int64_t max_steps = 10'000'000;

  /// Throws std::invalid_argument on a violated invariant.
  void Validate() const;
};

class FlowError : public std::runtime_error {
 public:
  enum class Kind { kEscapedDomain, kMaxSteps, kEvaluation };

  FlowError(Kind kind, double time, StatePoint state, const std::string& what);

  Kind kind() const { return kind_; }
  /// Signed time at which integration stopped.
  double time() const { return time_; }
  /// Last state reached (the first state outside the domain on escape).
  const StatePoint& state() const { return state_; }

 private:
  Kind kind_;
  double time_;
  StatePoint state_;
};

const char* ToString(FlowError::Kind kind);

/// A sampled positive semi-trajectory γ⁺(x) on [0, T].
struct Trajectory {
  std::vector<double> times;
  std::vector<StatePoint> states;
  std::string field_id;
};

/// Output grid {0, out_dt, 2·out_dt, ...} ∪ {T}, built by multiplication so
/// it is reproducible; a final sample within 1e-9·out_dt of T is snapped to T.
std::vector<double> SampleTimes(double T, double out_dt);

/// φ(x, t). Returns x unchanged (bitwise) for t == 0; negative t integrates
/// the reversed field −V forward for |t|.
StatePoint Flow(const VectorField& field, const StatePoint& x, double t,
                const IntegratorConfig& cfg);

/// Integrates from x through the SampleTimes(T, out_dt) grid, landing a step
/// exactly on every sample and handing it to `visit`. Returning false from
/// `visit` stops the integration early. Throws FlowError; samples visited
/// before the failure stay valid.
void IntegrateSampled(
    const VectorField& field, const StatePoint& x, double T, double out_dt,
    const IntegratorConfig& cfg,
    const std::function<bool(double t, const StatePoint& state)>& visit);

Trajectory ComputeTrajectory(const VectorField& field, const StatePoint& x,
                             double T, double out_dt,
                             const IntegratorConfig& cfg);

/// d(φ(φ(x, t1), t2), φ(x, t1 + t2)).
double SemigroupDefect(const VectorField& field, const StatePoint& x, double t1,
                       double t2, const IntegratorConfig& cfg);

}  // namespace lyapset
