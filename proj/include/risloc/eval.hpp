#pragma once

#include "risloc/direct_position.hpp"
#include "risloc/hybrid.hpp"
#include "risloc/nn/train.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace risloc {

/// Percentile grid used for the error-distribution tables.
inline const std::vector<double> kReportPercentiles{10, 25, 40, 50, 60, 65, 70, 75, 80, 85, 90, 92.5, 95, 98};

/// Linear interpolation between closest ranks: position (n - 1) q / 100 in the sorted list.
/// NaN entries (failed estimates) are ignored. Throws ConfigError when nothing is left.
double percentile(std::vector<double> values, double q);

struct PercentileRow {
  double percentile = 0.0;
  double value = 0.0;
};
std::vector<PercentileRow> percentile_curve(const std::vector<double>& values,
                                            const std::vector<double>& percentiles = kReportPercentiles);

enum class EstimatorKind { kPso, kLstm, kHybrid };
EstimatorKind parse_estimator(const std::string& name);
std::string estimator_name(EstimatorKind kind);

/// Estimator over one simulated measurement; `seed` decorrelates stochastic estimators across samples.
using Estimator = std::function<EstimationResult(const MeasurementSet&, const ReflectionMatrix&, std::uint64_t seed)>;

struct EstimatorSettings {
  PsoConfig direct_pso = default_direct_pso();
  OffsetMode mode = OffsetMode::kProfiled;
  HybridConfig hybrid{};
};

/// Throws ArtifactMismatch when an NN-based estimator is requested without a bundle
/// or with one trained for different (T, K).
Estimator make_estimator(EstimatorKind kind, const Scene& scene, const nn::ModelBundle* bundle,
                         const EstimatorSettings& settings = {});

/// Grid points x_min + i r, y_min + j r covering the region with inclusive endpoints,
/// y-major (all x for the first y, then the next y).
std::vector<Eigen::Vector2d> heatmap_grid(const Rect& region, double resolution);
std::size_t heatmap_point_count(const Rect& region, double resolution);

struct HeatmapCell {
  double x = 0.0;
  double y = 0.0;
  double error_cm = 0.0;  // NaN when the estimator failed at this point
};

/// Simulates a fresh measurement (scene noise model, random phi0) at every grid point
/// and records the planar error. Sample i uses generator (seed, i).
std::vector<HeatmapCell> heatmap(const Scene& scene, const PhaseSchedule& schedule, const Estimator& estimator,
                                 double resolution, std::uint64_t seed, unsigned threads = 1);

struct ScenarioSpec {
  std::string name = "z1";
  SceneConfig scene{};
  EstimatorKind estimator = EstimatorKind::kPso;
  std::size_t samples = 200;            // random positions, used when resolution is unset
  std::optional<double> grid_resolution;  // dense grid instead of random positions
  std::uint64_t seed = 0;
  unsigned threads = 1;
  EstimatorSettings settings{};
};

struct ErrorReport {
  std::string scenario;
  std::string estimator;
  std::vector<Eigen::Vector2d> truths;
  std::vector<double> errors_cm;  // NaN marks a failed estimate
  std::vector<double> latency_ms;
  std::vector<PercentileRow> percentiles;
  double latency_p50_ms = 0.0;
  double latency_p95_ms = 0.0;
  std::size_t failures = 0;
  std::uint64_t scene_fingerprint = 0;
  bool multipath = false;
  double mount_height_z = 0.0;
};

ErrorReport run_scenario(const ScenarioSpec& spec, const nn::ModelBundle* bundle = nullptr);

/// Writes percentiles.csv, latency.csv, errors.csv and summary.json into `dir`; returns the paths written.
std::vector<std::filesystem::path> write_report(const ErrorReport& report, const std::filesystem::path& dir,
                                                const Json& extra_summary = {});
void write_heatmap_csv(const std::filesystem::path& path, const std::vector<HeatmapCell>& cells);

/// Named experiment: scene plus the model, training and dataset sizes that go with it.
struct Preset {
  std::string name;
  SceneConfig scene{};
  nn::ModelConfig model{};
  nn::TrainConfig train{};
  std::size_t dataset_size = 100000;
};

/// z1, z3, z1_mp, z3_mp at full size (K=100, T=32) and desk_z1, desk_z3, desk_z1_mp,
/// desk_z3_mp at desk scale (K=20, T=16, hidden 64). Throws ConfigError for unknown names.
Preset builtin_preset(const std::string& name);
std::vector<std::string> builtin_preset_names();

/// Applies {"scene": {...}, "model": {...}, "train": {...}, "dataset_size": n} overrides.
void apply_json(const Json& j, Preset& preset);
Json to_json(const Preset& preset);

}  // namespace risloc
