#pragma once

#include "risloc/scene.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace risloc {

using Json = nlohmann::json;

// Field-by-field overlay: keys absent from the JSON keep the value already in `cfg`.
void apply_json(const Json& j, SceneConfig& cfg);
void apply_json(const Json& j, MultipathConfig& cfg);
Json to_json(const SceneConfig& cfg);
Json to_json(const MultipathConfig& cfg);

/// Reads a JSON document; an empty file yields an empty object.
/// Throws ConfigError when the file is missing or malformed.
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

std::string hex64(std::uint64_t value);

}  // namespace risloc
