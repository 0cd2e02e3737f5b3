#pragma once

#include "risloc/direct_position.hpp"
#include "risloc/nn/train.hpp"

namespace risloc {

struct HybridConfig {
  double halfwidth = 0.5;  // metres, per axis
  PsoConfig pso{};         // bounds are filled in from the box
  bool clamp_to_region = true;
  OffsetMode mode = OffsetMode::kProfiled;
};

void validate(const HybridConfig& config);

/// Box of +-halfwidth around `center`, intersected with `region` when `clamp`.
/// Sets `fallback` and re-centres on the nearest region point if the intersection is empty.
Rect neighborhood_box(const Eigen::Vector2d& center, double halfwidth, const Rect& region, bool clamp,
                      bool* fallback = nullptr);

/// Network first guess, then PSO on the direct cost restricted to the box around it.
/// The guess is injected into the swarm, so the refined cost never exceeds the cost there.
EstimationResult estimate_hybrid(const Eigen::VectorXcd& y, const ReflectionMatrix& beta, const Scene& scene,
                                 const nn::ModelBundle& bundle, const HybridConfig& config);

/// Same refinement when the network output is already known.
EstimationResult refine_guess(const Eigen::VectorXcd& y, const ReflectionMatrix& beta, const Scene& scene,
                              const Eigen::Vector2d& guess, const HybridConfig& config);

/// The network alone, wrapped as an estimation result.
EstimationResult estimate_lstm(const Eigen::VectorXcd& y, const ReflectionMatrix& beta,
                               const nn::ModelBundle& bundle);

}  // namespace risloc
