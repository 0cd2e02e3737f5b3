#pragma once

#include "risloc/random.hpp"
#include "risloc/scene.hpp"

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <utility>

namespace risloc {

using Complex = std::complex<double>;

/// Per-pilot, per-tile reflection coefficients (T x K).
struct ReflectionMatrix {
  Eigen::MatrixXcd beta;

  int pilots() const { return static_cast<int>(beta.rows()); }
  int tiles() const { return static_cast<int>(beta.cols()); }
};

/// One received pilot sequence plus the ground truth that produced it.
struct MeasurementSet {
  Eigen::VectorXcd y;  // length T
  Eigen::Vector2d truth_position = Eigen::Vector2d::Zero();
  double truth_phi0 = 0.0;
  std::string scenario_id;
};

/// cos^q(theta) on the front half-space, 0 behind the tile.
double radiation_pattern(const SolidAngle& angle, double q);

/// Dirichlet kernel sin(N x) / sin(x), replaced by its limit where sin(x) vanishes.
double dirichlet_ratio(int n, double x);

/// Uniform rectangular cell-array factor normalised by 1/sqrt(N_x N_y).
double array_factor(const SolidAngle& angle, int cells_x, int cells_y, double pitch_x,
                    double pitch_y, double wavelength);
double array_factor(const SolidAngle& angle, const TileOptics& optics);

Complex reflection_coefficient(const SolidAngle& incident, const SolidAngle& reflected, double psi,
                               const TileOptics& optics);

/// BS -> tile -> UE gain: (lambda / 4 pi)^2 / (d_i d_r) with phase -2 pi (d_i + d_r) / lambda + phi0.
/// Throws GeometryError for a zero-length hop.
Complex cascaded_channel(const Tile& tile, const Eigen::Vector3d& bs, const Eigen::Vector3d& ue,
                         double phi0, double wavelength);

/// Cascaded channel of every tile toward `ue`.
Eigen::VectorXcd cascaded_channels(const Scene& scene, const Eigen::Vector3d& ue, double phi0);

/// Zero when disabled, otherwise sqrt(relative_power * mean_ris_power) times a unit CN(0, 1) draw.
Complex multipath_component(const MultipathConfig& cfg, double mean_ris_power, Rng& rng);

/// Reflection coefficients for a UE position given the scene geometry and phase schedule.
ReflectionMatrix reflection_matrix(const Scene& scene, const PhaseSchedule& schedule,
                                   const Eigen::Vector2d& ue);

/// Complex circularly-symmetric normal with the given total variance.
Complex complex_normal(Rng& rng, double variance);

/// y_t = f_mp + sum_k beta_tk h_k + w_t with unit pilot symbols.
///
/// The generator is consumed in a fixed order (multipath key, then T noise draws)
/// whether or not multipath or noise are active, so toggling either keeps the
/// remaining randomness aligned.
std::pair<MeasurementSet, ReflectionMatrix> simulate_measurements(const Scene& scene,
                                                                  const PhaseSchedule& schedule,
                                                                  const Eigen::Vector2d& ue,
                                                                  double phi0, Rng& rng,
                                                                  std::string scenario_id = {});

}  // namespace risloc
