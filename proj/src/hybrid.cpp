#include "risloc/hybrid.hpp"

#include "risloc/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace risloc {

void validate(const HybridConfig& config) {
  if (!(config.halfwidth > 0.0) || !std::isfinite(config.halfwidth)) {
    throw ConfigError("hybrid neighborhood halfwidth must be positive");
  }
}

Rect neighborhood_box(const Eigen::Vector2d& center, double halfwidth, const Rect& region, bool clamp,
                      bool* fallback) {
  Rect box{center.x() - halfwidth, center.x() + halfwidth, center.y() - halfwidth, center.y() + halfwidth};
  if (fallback) *fallback = false;
  if (!clamp) return box;
  const Rect clipped{std::max(box.x_min, region.x_min), std::min(box.x_max, region.x_max),
                     std::max(box.y_min, region.y_min), std::min(box.y_max, region.y_max)};
  if (clipped.x_min < clipped.x_max && clipped.y_min < clipped.y_max) return clipped;
  if (fallback) *fallback = true;
  const Eigen::Vector2d c = region.clamp(center);
  return Rect{std::max(c.x() - halfwidth, region.x_min), std::min(c.x() + halfwidth, region.x_max),
              std::max(c.y() - halfwidth, region.y_min), std::min(c.y() + halfwidth, region.y_max)};
}

EstimationResult refine_guess(const Eigen::VectorXcd& y, const ReflectionMatrix& beta, const Scene& scene,
                              const Eigen::Vector2d& guess, const HybridConfig& config) {
  validate(config);
  bool fallback = false;
  const Rect box = neighborhood_box(guess, config.halfwidth, scene.ue_region(), config.clamp_to_region, &fallback);
  PsoConfig pso = config.pso;
  pso.initial_points.push_back(box.clamp(guess));
  const CostContext ctx(y, beta, scene);
  EstimationResult r = refine_in_box(ctx, box, pso, config.mode);
  r.nn_position = guess;
  r.fallback = fallback;
  return r;
}

EstimationResult estimate_hybrid(const Eigen::VectorXcd& y, const ReflectionMatrix& beta, const Scene& scene,
                                 const nn::ModelBundle& bundle, const HybridConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const nn::Prediction guess = nn::predict(bundle, y, beta);
  EstimationResult r = refine_guess(y, beta, scene, guess.position, config);
  r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

EstimationResult estimate_lstm(const Eigen::VectorXcd& y, const ReflectionMatrix& beta,
                               const nn::ModelBundle& bundle) {
  const nn::Prediction p = nn::predict(bundle, y, beta);
  EstimationResult r;
  r.position = p.position;
  r.nn_position = p.position;
  r.latency_ms = p.latency_ms;
  return r;
}

}  // namespace risloc
