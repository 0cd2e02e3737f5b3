#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace risloc {

/// Search interval of one dimension. Periodic dimensions wrap instead of clamping.
struct Bound {
  double lo = 0.0;
  double hi = 1.0;
  bool periodic = false;

  double range() const { return hi - lo; }
};

/// Particle swarm settings. The defaults are the constriction-equivalent
/// coefficients (w = 0.729, c1 = c2 = 1.49445).
struct PsoConfig {
  std::size_t swarm_size = 60;
  std::size_t iterations = 400;
  double inertia = 0.729;
  double cognitive = 1.49445;
  double social = 1.49445;
  double velocity_clamp = 0.5;  // fraction of each dimension's range
  std::uint64_t seed = 0;
  double stop_tol = 1e-12;      // relative improvement counted as progress
  std::size_t patience = 50;    // stagnant iterations before stopping a swarm
  std::size_t restarts = 1;     // independent swarms; the best result wins
  std::vector<Bound> bounds;
  // Points placed as initial particles of the first swarm (clamped into bounds).
  std::vector<Eigen::VectorXd> initial_points;
};

struct OptResult {
  Eigen::VectorXd best_point;
  double best_value = 0.0;
  std::size_t iterations_run = 0;
  std::size_t evaluations = 0;
  // Global-best value after initialisation and after each iteration, all swarms concatenated.
  std::vector<double> history;
};

using CostFunction = std::function<double(const Eigen::VectorXd&)>;

/// Bounded global-best particle swarm minimisation. Deterministic for a fixed
/// config. Throws NumericError naming the point when the cost is not finite,
/// and ConfigError for invalid settings.
OptResult minimize(const CostFunction& cost, const PsoConfig& config);

void validate(const PsoConfig& config);

}  // namespace risloc
