#pragma once

#include "risloc/channel.hpp"
#include "risloc/pso.hpp"
#include "risloc/scene.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace risloc {

/// Everything the direct-positioning cost needs, precomputed from one measurement.
class CostContext {
 public:
  /// `noise_power` scales the residuals by 1/sigma^2; zero means unscaled phase residuals.
  CostContext(const Eigen::VectorXcd& y, const ReflectionMatrix& beta, const Scene& scene,
              double noise_power);
  CostContext(const Eigen::VectorXcd& y, const ReflectionMatrix& beta, const Scene& scene)
      : CostContext(y, beta, scene, scene.noise_power()) {}

  int pilots() const { return static_cast<int>(amplitude_.size()); }
  const Eigen::VectorXd& amplitudes() const { return amplitude_; }
  const Eigen::VectorXd& phases() const { return phase_; }
  const Eigen::VectorXd& weights() const { return weight_; }
  const Eigen::MatrixXcd& beta() const { return beta_; }
  const Scene& scene() const { return *scene_; }

  /// sum_k beta_tk h_k(p) with zero offset, for every pilot.
  Eigen::VectorXcd model_signal(const Eigen::Vector2d& p) const;

 private:
  Eigen::VectorXd amplitude_;
  Eigen::VectorXd phase_;
  Eigen::VectorXd weight_;  // a_t^2 / sigma^2
  Eigen::MatrixXcd beta_;
  Eigen::VectorXd incident_distance_;
  const Scene* scene_;
};

struct HypotheticalPhases {
  Eigen::VectorXd phase;  // one per pilot
  bool degenerate = false;  // some pilot's model sum was exactly zero (phase reported as 0)
};

/// Model phase of pilot t at candidate position p (offset excluded).
double hypothetical_phase(const Eigen::Vector2d& p, int pilot, const CostContext& ctx,
                          bool* degenerate = nullptr);
HypotheticalPhases hypothetical_phases(const Eigen::Vector2d& p, const CostContext& ctx);

/// sum_t (a_t^2 / sigma^2) sin^2(measured_t - model_t(p) - phi0).
double direct_cost(const Eigen::Vector2d& p, double phi0, const CostContext& ctx);

/// Closed-form minimiser of the cost over phi0 at fixed p, in [0, 2 pi), with its cost.
std::pair<double, double> best_phase_offset(const Eigen::Vector2d& p, const CostContext& ctx);

struct EstimationResult {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  std::optional<double> phi0;
  double residual_cost = 0.0;
  double latency_ms = 0.0;
  std::optional<Eigen::Vector2d> nn_position;  // hybrid: the network's first guess
  bool fallback = false;                        // hybrid: box had to be re-centred
  std::size_t evaluations = 0;
};

/// How the estimators treat the phase offset phi0.
enum class OffsetMode {
  kSearched,  // phi0 is a third, periodic swarm dimension
  kProfiled,  // phi0 eliminated in closed form at every candidate position
};

/// Default swarm for the direct estimator over (x, y, phi0); bounds are filled in by the estimator.
PsoConfig default_direct_pso();

/// Maximum-likelihood direct positioning: PSO over x, y in the UE region and periodic phi0.
EstimationResult estimate_direct(const Eigen::VectorXcd& y, const ReflectionMatrix& beta,
                                 const Scene& scene, const PsoConfig& pso,
                                 OffsetMode mode = OffsetMode::kProfiled);

/// PSO over a planar box (and phi0). Injected particles in `pso.initial_points`
/// are planar (x, y); their phi0 is set to the closed-form optimum.
EstimationResult refine_in_box(const CostContext& ctx, const Rect& box, PsoConfig pso,
                               OffsetMode mode = OffsetMode::kProfiled);

}  // namespace risloc
