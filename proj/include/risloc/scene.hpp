#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace risloc {

inline constexpr double kSpeedOfLight = 299'792'458.0;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Axis-aligned rectangle in the horizontal plane.
struct Rect {
  double x_min = -4.0;
  double x_max = 4.0;
  double y_min = 1.0;
  double y_max = 10.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  bool contains(const Eigen::Vector2d& p, double tol = 1e-9) const {
    return p.x() >= x_min - tol && p.x() <= x_max + tol && p.y() >= y_min - tol &&
           p.y() <= y_max + tol;
  }
  Eigen::Vector2d clamp(const Eigen::Vector2d& p) const {
    return {std::clamp(p.x(), x_min, x_max), std::clamp(p.y(), y_min, y_max)};
  }
};

/// Direct-link scattering term added to the measurement.
struct MultipathConfig {
  bool enabled = false;
  // Multipath power relative to the mean RIS-path power of the sample (linear).
  double relative_power = 1.0;
  bool per_pilot = false;
  std::uint64_t seed = 0;
};

/// Physical world description. Defaults reproduce the 10 x 10 x 3 m room with
/// two 50-tile RIS segments, 3.5 GHz carrier and UE plane z = 1 m.
///
/// The room footprint spans x in [-L/2, L/2] and y in [0, W]. Segment 1 runs along
/// the y = 0 wall starting at x = -L/2, segment 2 along the x = L/2 wall from y = 0.
struct SceneConfig {
  Eigen::Vector3d room_dims{10.0, 10.0, 3.0};
  Eigen::Vector2d bs_xy{0.0, 5.0};
  double mount_height_z = 1.0;  // BS and RIS share this height
  double tile_pitch = 0.2;
  int num_tiles = 100;
  int cells_x = 4;   // along the wall's horizontal axis
  int cells_y = 25;  // along the vertical axis
  std::optional<double> cell_pitch_x;  // half wavelength when unset
  std::optional<double> cell_pitch_y;
  double carrier_freq = 3.5e9;
  int pilots = 32;
  double noise_power = dbm_to_watts(-120.2);
  double boresight_gain = db_to_linear(5.0);
  double radiation_exponent = 0.57;
  Rect ue_region{};
  double ue_height = 1.0;
  MultipathConfig multipath{};
  int phase_levels = 4;
  std::uint64_t seed = 1;

  double wavelength() const { return kSpeedOfLight / carrier_freq; }
};

/// Orthonormal tile frame: x_axis along the wall, y_axis vertical, normal into the room.
struct Tile {
  int index = 0;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  Eigen::Vector3d x_axis = Eigen::Vector3d::UnitX();
  Eigen::Vector3d y_axis = Eigen::Vector3d::UnitY();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
};

/// Direction seen from a tile: theta from the normal, phi about it.
struct SolidAngle {
  double theta = 0.0;  // [0, pi]
  double phi = 0.0;    // [0, 2 pi)
};

/// Quantities every tile shares (cell array, gain, radiation exponent, carrier).
struct TileOptics {
  int cells_x = 4;
  int cells_y = 25;
  double pitch_x = 0.0;
  double pitch_y = 0.0;
  double wavelength = 0.0;
  double boresight_gain = 1.0;
  double radiation_exponent = 0.57;
};

class Scene {
 public:
  const SceneConfig& config() const { return config_; }
  const std::vector<Tile>& tiles() const { return tiles_; }
  const Eigen::Vector3d& bs_position() const { return bs_; }
  const TileOptics& optics() const { return optics_; }
  double wavelength() const { return optics_.wavelength; }
  int num_tiles() const { return static_cast<int>(tiles_.size()); }
  int pilots() const { return config_.pilots; }
  const Rect& ue_region() const { return config_.ue_region; }
  double noise_power() const { return config_.noise_power; }

  Eigen::Vector3d ue_point(const Eigen::Vector2d& p) const {
    return {p.x(), p.y(), config_.ue_height};
  }

  /// Stable 64-bit digest of the configuration, used to tie artifacts to a scene.
  std::uint64_t fingerprint() const;

 private:
  friend Scene build_scene(const SceneConfig& config);

  SceneConfig config_;
  std::vector<Tile> tiles_;
  Eigen::Vector3d bs_ = Eigen::Vector3d::Zero();
  TileOptics optics_;
};

/// Per-pilot, per-tile phase matrix known to simulator and estimators.
struct PhaseSchedule {
  Eigen::MatrixXd psi;  // T x K, entries on the grid 2 pi m / num_levels
  int num_levels = 4;
  std::uint64_t seed = 0;

  int pilots() const { return static_cast<int>(psi.rows()); }
  int tiles() const { return static_cast<int>(psi.cols()); }
};

/// Validates the configuration and lays out both RIS segments. Throws
/// ConfigError for invalid parameters and GeometryError for layouts that do
/// not fit the room.
Scene build_scene(const SceneConfig& config);

/// Throws GeometryError when the point coincides with the tile centroid.
SolidAngle solid_angles(const Tile& tile, const Eigen::Vector3d& point);

/// Unit vector in global coordinates for a solid angle in the tile frame.
Eigen::Vector3d direction_from_angles(const Tile& tile, const SolidAngle& angle);

PhaseSchedule generate_schedule(int pilots, int tiles, int num_levels, std::uint64_t seed);

/// Schedule matching a scene's pilot and tile counts and its configured seed and levels.
PhaseSchedule schedule_for(const Scene& scene);

}  // namespace risloc
