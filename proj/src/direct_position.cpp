#include "risloc/direct_position.hpp"

#include "risloc/error.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

namespace risloc {

CostContext::CostContext(const Eigen::VectorXcd& y, const ReflectionMatrix& beta, const Scene& scene,
                         double noise_power)
    : beta_(beta.beta), scene_(&scene) {
  const auto pilots = y.size();
  if (beta.beta.rows() != pilots || beta.beta.cols() != scene.num_tiles()) {
    throw ConfigError("cost context: y / beta / scene shapes disagree");
  }
  if (noise_power < 0.0) throw ConfigError("cost context: negative noise power");
  amplitude_ = y.cwiseAbs();
  phase_.resize(pilots);
  for (Eigen::Index t = 0; t < pilots; ++t) phase_(t) = std::arg(y(t));
  const double scale = noise_power > 0.0 ? 1.0 / noise_power : 1.0;
  weight_ = amplitude_.array().square() * scale;

  incident_distance_.resize(scene.num_tiles());
  for (const Tile& tile : scene.tiles()) {
    incident_distance_(tile.index) = (scene.bs_position() - tile.centroid).norm();
  }
}

Eigen::VectorXcd CostContext::model_signal(const Eigen::Vector2d& p) const {
  const Scene& scene = *scene_;
  const Eigen::Vector3d ue = scene.ue_point(p);
  const double lambda = scene.wavelength();
  const double scale = lambda / (4.0 * std::numbers::pi);
  const double k0 = kTwoPi / lambda;
  Eigen::VectorXcd h(scene.num_tiles());
  for (const Tile& tile : scene.tiles()) {
    const double di = incident_distance_(tile.index);
    const double dr = (ue - tile.centroid).norm();
    if (!(dr > 0.0)) throw GeometryError("candidate position coincides with a tile");
    h(tile.index) = std::polar(scale * scale / (di * dr), -k0 * (di + dr));
  }
  return beta_ * h;
}

double hypothetical_phase(const Eigen::Vector2d& p, int pilot, const CostContext& ctx,
                          bool* degenerate) {
  if (pilot < 0 || pilot >= ctx.pilots()) throw ConfigError("pilot index out of range");
  const Complex s = ctx.model_signal(p)(pilot);
  const bool zero = s == Complex{};
  if (degenerate) *degenerate = zero;
  return zero ? 0.0 : std::arg(s);
}

HypotheticalPhases hypothetical_phases(const Eigen::Vector2d& p, const CostContext& ctx) {
  const Eigen::VectorXcd s = ctx.model_signal(p);
  HypotheticalPhases out;
  out.phase.resize(s.size());
  for (Eigen::Index t = 0; t < s.size(); ++t) {
    if (s(t) == Complex{}) {
      out.phase(t) = 0.0;
      out.degenerate = true;
    } else {
      out.phase(t) = std::arg(s(t));
    }
  }
  return out;
}

double direct_cost(const Eigen::Vector2d& p, double phi0, const CostContext& ctx) {
  const HypotheticalPhases model = hypothetical_phases(p, ctx);
  double total = 0.0;
  for (int t = 0; t < ctx.pilots(); ++t) {
    const double r = std::sin(ctx.phases()(t) - model.phase(t) - phi0);
    total += ctx.weights()(t) * r * r;
  }
  return total;
}

std::pair<double, double> best_phase_offset(const Eigen::Vector2d& p, const CostContext& ctx) {
  // sum w sin^2(d - phi0) = W/2 - Re(S e^{-2 j phi0}) / 2 with S = sum w e^{2 j d}.
  const HypotheticalPhases model = hypothetical_phases(p, ctx);
  Complex s{};
  double w_total = 0.0;
  for (int t = 0; t < ctx.pilots(); ++t) {
    const double d = ctx.phases()(t) - model.phase(t);
    s += ctx.weights()(t) * std::polar(1.0, 2.0 * d);
    w_total += ctx.weights()(t);
  }
  double phi0 = s == Complex{} ? 0.0 : std::arg(s) / 2.0;
  if (phi0 < 0.0) phi0 += kTwoPi;
  return {phi0, std::max(0.0, direct_cost(p, phi0, ctx))};
}

PsoConfig default_direct_pso() {
  PsoConfig pso;
  pso.restarts = 5;
  return pso;
}

EstimationResult refine_in_box(const CostContext& ctx, const Rect& box, PsoConfig pso,
                               OffsetMode mode) {
  const auto start = std::chrono::steady_clock::now();
  pso.bounds = {Bound{box.x_min, box.x_max, false}, Bound{box.y_min, box.y_max, false}};
  for (Eigen::VectorXd& p : pso.initial_points) {
    if (p.size() != 2) throw ConfigError("injected particles must be planar (x, y)");
  }
  EstimationResult r;
  if (mode == OffsetMode::kSearched) {
    pso.bounds.push_back(Bound{0.0, kTwoPi, true});
    for (Eigen::VectorXd& p : pso.initial_points) {
      const Eigen::Vector2d xy = box.clamp({p(0), p(1)});
      const double phi0 = best_phase_offset(xy, ctx).first;
      p = Eigen::Vector3d{xy.x(), xy.y(), phi0};
    }
    const OptResult opt = minimize(
        [&ctx](const Eigen::VectorXd& x) { return direct_cost({x(0), x(1)}, x(2), ctx); }, pso);
    r.position = {opt.best_point(0), opt.best_point(1)};
    r.phi0 = opt.best_point(2);
    r.residual_cost = opt.best_value;
    r.evaluations = opt.evaluations;
  } else {
    const OptResult opt = minimize(
        [&ctx](const Eigen::VectorXd& x) { return best_phase_offset({x(0), x(1)}, ctx).second; }, pso);
    r.position = {opt.best_point(0), opt.best_point(1)};
    const auto [phi0, value] = best_phase_offset(r.position, ctx);
    r.phi0 = phi0;
    r.residual_cost = value;
    r.evaluations = opt.evaluations;
  }
  r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

EstimationResult estimate_direct(const Eigen::VectorXcd& y, const ReflectionMatrix& beta,
                                 const Scene& scene, const PsoConfig& pso, OffsetMode mode) {
  const auto start = std::chrono::steady_clock::now();
  const CostContext ctx(y, beta, scene);
  EstimationResult r = refine_in_box(ctx, scene.ue_region(), pso, mode);
  r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace risloc
