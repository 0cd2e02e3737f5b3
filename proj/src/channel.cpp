#include "risloc/channel.hpp"

#include "risloc/error.hpp"

#include <cmath>
#include <numbers>

namespace risloc {
namespace {

constexpr double kSingularTol = 1e-12;

void check_schedule(const Scene& scene, const PhaseSchedule& schedule) {
  if (schedule.pilots() != scene.pilots() || schedule.tiles() != scene.num_tiles()) {
    throw ConfigError("phase schedule shape does not match the scene (T x K)");
  }
}

}  // namespace

double radiation_pattern(const SolidAngle& angle, double q) {
  if (angle.theta < 0.0 || angle.theta > std::numbers::pi / 2.0) return 0.0;
  const double c = std::cos(angle.theta);
  return c <= 0.0 ? 0.0 : std::pow(c, q);
}

double dirichlet_ratio(int n, double x) {
  const double s = std::sin(x);
  // Distance of x from the nearest multiple of pi.
  const double r = std::remainder(x, std::numbers::pi);
  if (std::abs(r) < kSingularTol || s == 0.0) {
    // L'Hopital: N cos(N x) / cos(x) -> N (-1)^{m (N - 1)} at x = m pi.
    const double m = std::round((x - r) / std::numbers::pi);
    const bool odd = (static_cast<long long>(m) * (n - 1)) % 2 != 0;
    return odd ? -n : n;
  }
  return std::sin(n * x) / s;
}

double array_factor(const SolidAngle& angle, int cells_x, int cells_y, double pitch_x,
                    double pitch_y, double wavelength) {
  const double st = std::sin(angle.theta);
  const double u = st * std::sin(angle.phi);
  const double v = st * std::cos(angle.phi);
  const double kx = std::numbers::pi * pitch_x * u / wavelength;
  const double ky = std::numbers::pi * pitch_y * v / wavelength;
  return dirichlet_ratio(cells_x, kx) * dirichlet_ratio(cells_y, ky) /
         std::sqrt(static_cast<double>(cells_x) * cells_y);
}

double array_factor(const SolidAngle& angle, const TileOptics& o) {
  return array_factor(angle, o.cells_x, o.cells_y, o.pitch_x, o.pitch_y, o.wavelength);
}

Complex reflection_coefficient(const SolidAngle& incident, const SolidAngle& reflected, double psi,
                               const TileOptics& optics) {
  const double fi = radiation_pattern(incident, optics.radiation_exponent);
  const double fr = radiation_pattern(reflected, optics.radiation_exponent);
  if (fi == 0.0 || fr == 0.0) return {0.0, 0.0};
  const double mag = std::sqrt(fi * fr) * array_factor(incident, optics) *
                     array_factor(reflected, optics) * optics.boresight_gain;
  return std::polar(1.0, psi) * mag;
}

Complex cascaded_channel(const Tile& tile, const Eigen::Vector3d& bs, const Eigen::Vector3d& ue,
                         double phi0, double wavelength) {
  const double di = (bs - tile.centroid).norm();
  const double dr = (ue - tile.centroid).norm();
  if (!(di > 0.0) || !(dr > 0.0)) throw GeometryError("cascaded channel: zero-length hop");
  const double scale = wavelength / (4.0 * std::numbers::pi);
  const double amp = scale * scale / (di * dr);
  const double phase = -kTwoPi * (di + dr) / wavelength + phi0;
  return std::polar(amp, phase);
}

Eigen::VectorXcd cascaded_channels(const Scene& scene, const Eigen::Vector3d& ue, double phi0) {
  Eigen::VectorXcd h(scene.num_tiles());
  for (const Tile& tile : scene.tiles()) {
    h(tile.index) = cascaded_channel(tile, scene.bs_position(), ue, phi0, scene.wavelength());
  }
  return h;
}

Complex complex_normal(Rng& rng, double variance) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double re = n(rng);
  const double im = n(rng);
  const double s = std::sqrt(variance / 2.0);
  return {s * re, s * im};
}

Complex multipath_component(const MultipathConfig& cfg, double mean_ris_power, Rng& rng) {
  if (!cfg.enabled || cfg.relative_power == 0.0) return {0.0, 0.0};
  return complex_normal(rng, cfg.relative_power * mean_ris_power);
}

ReflectionMatrix reflection_matrix(const Scene& scene, const PhaseSchedule& schedule,
                                   const Eigen::Vector2d& ue) {
  check_schedule(scene, schedule);
  const Eigen::Vector3d ue3 = scene.ue_point(ue);
  const int k_count = scene.num_tiles();
  ReflectionMatrix out;
  out.beta.resize(schedule.pilots(), k_count);
  for (const Tile& tile : scene.tiles()) {
    const SolidAngle in = solid_angles(tile, scene.bs_position());
    const SolidAngle re = solid_angles(tile, ue3);
    // |beta| does not depend on psi, so evaluate the magnitude once per tile.
    const Complex base = reflection_coefficient(in, re, 0.0, scene.optics());
    for (int t = 0; t < schedule.pilots(); ++t) {
      out.beta(t, tile.index) = base * std::polar(1.0, schedule.psi(t, tile.index));
    }
  }
  return out;
}

std::pair<MeasurementSet, ReflectionMatrix> simulate_measurements(const Scene& scene,
                                                                  const PhaseSchedule& schedule,
                                                                  const Eigen::Vector2d& ue,
                                                                  double phi0, Rng& rng,
                                                                  std::string scenario_id) {
  if (!scene.ue_region().contains(ue)) {
    throw GeometryError("UE position outside the configured region");
  }
  const std::uint64_t multipath_key = rng();

  ReflectionMatrix beta = reflection_matrix(scene, schedule, ue);
  const Eigen::VectorXcd h = cascaded_channels(scene, scene.ue_point(ue), phi0);
  const Eigen::VectorXcd ris = beta.beta * h;

  const int pilots = schedule.pilots();
  const double mean_power = ris.squaredNorm() / pilots;
  const MultipathConfig& mp = scene.config().multipath;
  Rng mp_rng(derive_seed(mp.seed, multipath_key));

  MeasurementSet m;
  m.y.resize(pilots);
  m.truth_position = ue;
  m.truth_phi0 = phi0;
  m.scenario_id = std::move(scenario_id);

  Complex shared = mp.per_pilot ? Complex{} : multipath_component(mp, mean_power, mp_rng);
  for (int t = 0; t < pilots; ++t) {
    const Complex f = mp.per_pilot ? multipath_component(mp, mean_power, mp_rng) : shared;
    const Complex w = complex_normal(rng, scene.noise_power());
    m.y(t) = f + ris(t) + w;
  }
  return {std::move(m), std::move(beta)};
}

}  // namespace risloc
