#include "risloc/scene.hpp"

#include "risloc/config.hpp"
#include "risloc/error.hpp"
#include "risloc/hash.hpp"
#include "risloc/random.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace risloc {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid scene config: " + what);
}

void validate(const SceneConfig& c) {
  require(c.num_tiles > 0, "num_tiles must be positive");
  require(c.num_tiles % 2 == 0, "num_tiles must be even (two RIS segments)");
  require(c.tile_pitch > 0.0, "tile_pitch must be positive");
  require(c.cells_x >= 1 && c.cells_y >= 1, "cells per tile must be >= 1");
  require(c.carrier_freq > 0.0 && std::isfinite(c.wavelength()), "carrier frequency must be positive");
  require(c.pilots >= 1, "pilots must be >= 1");
  require(c.noise_power >= 0.0, "noise power must be >= 0");
  require(c.radiation_exponent > 0.0, "radiation exponent must be positive");
  require(c.boresight_gain > 0.0, "boresight gain must be positive");
  require(c.phase_levels >= 1, "phase_levels must be >= 1");
  require(c.multipath.relative_power >= 0.0, "multipath relative power must be >= 0");
  require((c.room_dims.array() > 0.0).all(), "room dimensions must be positive");
  require(!c.cell_pitch_x || *c.cell_pitch_x > 0.0, "cell pitch must be positive");
  require(!c.cell_pitch_y || *c.cell_pitch_y > 0.0, "cell pitch must be positive");
  const Rect& r = c.ue_region;
  require(r.x_min < r.x_max && r.y_min < r.y_max, "UE region must be non-empty");
  const double half_len = c.room_dims.x() / 2.0;
  require(r.x_min >= -half_len && r.x_max <= half_len && r.y_min >= 0.0 && r.y_max <= c.room_dims.y(),
          "UE region must lie inside the room footprint");
  require(c.ue_height > 0.0 && c.ue_height < c.room_dims.z(), "UE height must be inside the room");
}

Tile make_tile(int index, const Eigen::Vector3d& centroid, const Eigen::Vector3d& normal) {
  Tile t;
  t.index = index;
  t.centroid = centroid;
  t.normal = normal;
  t.y_axis = Eigen::Vector3d::UnitZ();
  t.x_axis = t.y_axis.cross(t.normal);  // right-handed: x cross y = n
  return t;
}

}  // namespace

std::uint64_t Scene::fingerprint() const { return fnv1a(to_json(config_).dump()); }

Scene build_scene(const SceneConfig& config) {
  validate(config);

  const double half_len = config.room_dims.x() / 2.0;
  const double depth = config.room_dims.y();
  const double z = config.mount_height_z;
  const double d = config.tile_pitch;
  const int per_segment = config.num_tiles / 2;

  if (per_segment * d > config.room_dims.x() + 1e-9 || per_segment * d > depth + 1e-9) {
    throw GeometryError("RIS segment of " + std::to_string(per_segment) + " tiles at pitch " +
                        std::to_string(d) + " m exceeds the wall length");
  }
  if (z <= 0.0 || z > config.room_dims.z()) {
    throw GeometryError("mount height must lie within the room height");
  }
  const Eigen::Vector3d bs{config.bs_xy.x(), config.bs_xy.y(), z};
  if (bs.x() <= -half_len || bs.x() >= half_len || bs.y() <= 0.0 || bs.y() >= depth) {
    throw GeometryError("base station lies outside the room");
  }

  Scene scene;
  scene.config_ = config;
  scene.bs_ = bs;
  scene.tiles_.reserve(static_cast<std::size_t>(config.num_tiles));
  for (int j = 0; j < per_segment; ++j) {
    scene.tiles_.push_back(make_tile(j, {-half_len + d / 2.0 + j * d, 0.0, z}, Eigen::Vector3d::UnitY()));
  }
  for (int j = 0; j < per_segment; ++j) {
    scene.tiles_.push_back(
        make_tile(per_segment + j, {half_len, d / 2.0 + j * d, z}, -Eigen::Vector3d::UnitX()));
  }

  const double lambda = config.wavelength();
  scene.optics_ = TileOptics{
      .cells_x = config.cells_x,
      .cells_y = config.cells_y,
      .pitch_x = config.cell_pitch_x.value_or(lambda / 2.0),
      .pitch_y = config.cell_pitch_y.value_or(lambda / 2.0),
      .wavelength = lambda,
      .boresight_gain = config.boresight_gain,
      .radiation_exponent = config.radiation_exponent,
  };
  return scene;
}

SolidAngle solid_angles(const Tile& tile, const Eigen::Vector3d& point) {
  const Eigen::Vector3d v = point - tile.centroid;
  const double norm = v.norm();
  if (!(norm > 0.0)) throw GeometryError("solid angle undefined: point coincides with tile centroid");
  const Eigen::Vector3d u = v / norm;
  const double a = u.dot(tile.x_axis);
  const double b = u.dot(tile.y_axis);
  const double c = std::clamp(u.dot(tile.normal), -1.0, 1.0);

  SolidAngle out;
  out.theta = std::acos(c);
  if (std::hypot(a, b) < 1e-15) {
    out.phi = 0.0;
    return out;
  }
  // sin(theta) sin(phi) = a, sin(theta) cos(phi) = b
  double phi = std::atan2(a, b);
  if (phi < 0.0) phi += kTwoPi;
  if (phi >= kTwoPi) phi = 0.0;
  out.phi = phi;
  return out;
}

Eigen::Vector3d direction_from_angles(const Tile& tile, const SolidAngle& angle) {
  const double s = std::sin(angle.theta);
  return s * std::sin(angle.phi) * tile.x_axis + s * std::cos(angle.phi) * tile.y_axis +
         std::cos(angle.theta) * tile.normal;
}

PhaseSchedule generate_schedule(int pilots, int tiles, int num_levels, std::uint64_t seed) {
  if (pilots < 1 || tiles < 1 || num_levels < 1) {
    throw ConfigError("phase schedule needs pilots, tiles and levels >= 1");
  }
  PhaseSchedule s;
  s.num_levels = num_levels;
  s.seed = seed;
  s.psi.resize(pilots, tiles);
  Rng rng(seed);
  std::uniform_int_distribution<int> level(0, num_levels - 1);
  const double step = kTwoPi / num_levels;
  // Row-major fill so the draw order does not depend on Eigen's storage order.
  for (int t = 0; t < pilots; ++t) {
    for (int k = 0; k < tiles; ++k) s.psi(t, k) = step * level(rng);
  }
  return s;
}

PhaseSchedule schedule_for(const Scene& scene) {
  const SceneConfig& c = scene.config();
  return generate_schedule(c.pilots, c.num_tiles, c.phase_levels, c.seed);
}

}  // namespace risloc
