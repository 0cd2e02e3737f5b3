#include "risloc/config.hpp"

#include "risloc/error.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace risloc {
namespace {

template <typename T>
void take(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void take_vec2(const Json& j, const char* key, Eigen::Vector2d& out) {
  if (!j.contains(key)) return;
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 2) throw ConfigError(std::string("config key '") + key + "' needs 2 values");
  out = {v[0], v[1]};
}

void take_vec3(const Json& j, const char* key, Eigen::Vector3d& out) {
  if (!j.contains(key)) return;
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 3) throw ConfigError(std::string("config key '") + key + "' needs 3 values");
  out = {v[0], v[1], v[2]};
}

}  // namespace

void apply_json(const Json& j, MultipathConfig& cfg) {
  if (!j.is_object()) throw ConfigError("multipath config must be an object");
  take(j, "enabled", cfg.enabled);
  take(j, "relative_power", cfg.relative_power);
  if (j.contains("relative_power_db")) cfg.relative_power = db_to_linear(j.at("relative_power_db").get<double>());
  take(j, "per_pilot", cfg.per_pilot);
  take(j, "seed", cfg.seed);
}

void apply_json(const Json& j, SceneConfig& cfg) {
  if (!j.is_object()) throw ConfigError("scene config must be an object");
  try {
    take_vec3(j, "room_dims", cfg.room_dims);
    take_vec2(j, "bs_xy", cfg.bs_xy);
    take(j, "mount_height_z", cfg.mount_height_z);
    take(j, "tile_pitch", cfg.tile_pitch);
    take(j, "num_tiles", cfg.num_tiles);
    take(j, "cells_x", cfg.cells_x);
    take(j, "cells_y", cfg.cells_y);
    if (j.contains("cell_pitch_x")) cfg.cell_pitch_x = j.at("cell_pitch_x").get<double>();
    if (j.contains("cell_pitch_y")) cfg.cell_pitch_y = j.at("cell_pitch_y").get<double>();
    take(j, "carrier_freq", cfg.carrier_freq);
    take(j, "pilots", cfg.pilots);
    take(j, "noise_power", cfg.noise_power);
    if (j.contains("noise_power_dbm")) cfg.noise_power = dbm_to_watts(j.at("noise_power_dbm").get<double>());
    take(j, "boresight_gain", cfg.boresight_gain);
    if (j.contains("boresight_gain_dbi")) cfg.boresight_gain = db_to_linear(j.at("boresight_gain_dbi").get<double>());
    take(j, "radiation_exponent", cfg.radiation_exponent);
    if (j.contains("ue_region")) {
      const auto r = j.at("ue_region").get<std::vector<double>>();
      if (r.size() != 4) throw ConfigError("ue_region needs [x_min, x_max, y_min, y_max]");
      cfg.ue_region = Rect{r[0], r[1], r[2], r[3]};
    }
    take(j, "ue_height", cfg.ue_height);
    take(j, "phase_levels", cfg.phase_levels);
    take(j, "seed", cfg.seed);
    if (j.contains("multipath")) apply_json(j.at("multipath"), cfg.multipath);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("scene config: ") + e.what());
  }
}

Json to_json(const MultipathConfig& cfg) {
  return Json{{"enabled", cfg.enabled},
              {"relative_power", cfg.relative_power},
              {"per_pilot", cfg.per_pilot},
              {"seed", cfg.seed}};
}

Json to_json(const SceneConfig& cfg) {
  Json j{{"room_dims", {cfg.room_dims.x(), cfg.room_dims.y(), cfg.room_dims.z()}},
         {"bs_xy", {cfg.bs_xy.x(), cfg.bs_xy.y()}},
         {"mount_height_z", cfg.mount_height_z},
         {"tile_pitch", cfg.tile_pitch},
         {"num_tiles", cfg.num_tiles},
         {"cells_x", cfg.cells_x},
         {"cells_y", cfg.cells_y},
         {"carrier_freq", cfg.carrier_freq},
         {"pilots", cfg.pilots},
         {"noise_power", cfg.noise_power},
         {"boresight_gain", cfg.boresight_gain},
         {"radiation_exponent", cfg.radiation_exponent},
         {"ue_region", {cfg.ue_region.x_min, cfg.ue_region.x_max, cfg.ue_region.y_min, cfg.ue_region.y_max}},
         {"ue_height", cfg.ue_height},
         {"phase_levels", cfg.phase_levels},
         {"seed", cfg.seed},
         {"multipath", to_json(cfg.multipath)}};
  if (cfg.cell_pitch_x) j["cell_pitch_x"] = *cfg.cell_pitch_x;
  if (cfg.cell_pitch_y) j["cell_pitch_y"] = *cfg.cell_pitch_y;
  return j;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return Json::object();
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace risloc
