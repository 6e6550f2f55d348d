#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lyapset/flow.h"
#include "lyapset/geometry.h"
#include "lyapset/limits.h"
#include "lyapset/lyapunov.h"

namespace lyapset {

/// Schema violation in a problem file. `pointer` is a JSON pointer
/// ("/stability/epsilons/1") to the offending value.
class ProblemError : public std::runtime_error {
 public:
  ProblemError(std::string pointer, const std::string& message);
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

/// How M is given in the problem file. "omega" sets are resolved by
/// estimating the ω-limit set of `x0` and using the representatives as a
/// point cloud.
struct SetSpec {
  std::string type;  // point | cloud | ball | box | omega
  std::vector<std::vector<double>> points;  // point: 1 entry; cloud: all
  std::vector<double> center;
  double radius = 0.0;
  std::vector<double> lo, hi;
  std::vector<double> x0;
  OmegaOptions omega;
};

struct OmegaBlock {
  std::vector<double> x0;
  OmegaOptions options;
};

struct StabilityBlock {
  std::vector<double> epsilons;
  double horizon = 50.0;
  int shell_samples = 16;
  double out_dt = 0.05;
  int invariance_samples = 32;
  double invariance_horizon = 20.0;
  std::optional<std::pair<std::vector<double>, std::vector<double>>> box;
  int resolution = 11;
  double roa_horizon = 50.0;
  double tol = 1e-3;
};

struct RoaBlock {
  std::vector<double> lo, hi;
  std::vector<int> resolution;
  double horizon = 40.0;
  double tol = 1e-3;
  double out_dt = 0.01;
};

struct ConverseBlock {
  ConverseConfig config;
  /// Sample box; unset means the bounding box of M grown by 1.
  std::optional<std::pair<std::vector<double>, std::vector<double>>> box;
  int samples = 100;
  double tol = 1e-3;
};

struct CertificateBlock {
  std::string candidate;
  double r_in = 0.0;
  double r_out = 1.0;
  int samples = 500;
  double tol = 1e-9;
  double probe_time = 0.1;
};

struct TrajectoriesBlock {
  std::vector<std::vector<double>> initial;
  double horizon = 20.0;
  double out_dt = 0.05;
};

struct ProblemDefinition {
  int dimension = 0;
  std::vector<std::string> field;
  SetSpec set;
  IntegratorConfig integrator;
  std::optional<OmegaBlock> omega;
  std::optional<StabilityBlock> stability;
  std::optional<RoaBlock> roa;
  std::optional<ConverseBlock> converse;
  std::optional<CertificateBlock> certificate;
  std::optional<TrajectoriesBlock> trajectories;
  std::uint64_t seed = 0;
};

/// Validates `doc` against the problem schema. Unknown keys are rejected.
ProblemDefinition ParseProblem(const nlohmann::json& doc);

/// Reads and parses a problem file. Malformed JSON is reported with its
/// byte offset; schema errors with a JSON pointer.
ProblemDefinition LoadProblem(const std::string& path);

/// Canonical form with every default spelled out.
nlohmann::json ToJson(const ProblemDefinition& problem);

/// Builds M. "omega" sets run the ω-limit estimator on the problem's field.
CompactSet ResolveSet(const ProblemDefinition& problem);

/// seed + FNV-1a(block name): per-block seeds that do not move when other
/// blocks are added or removed.
std::uint64_t DeriveSeed(std::uint64_t seed, const std::string& block);

StatePoint ToPoint(const std::vector<double>& coords);
std::vector<double> ToVector(const StatePoint& p);

}  // namespace lyapset
