#include "risloc/eval.hpp"

#include "risloc/config.hpp"
#include "risloc/error.hpp"
#include "risloc/parallel.hpp"
#include "risloc/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>

namespace risloc {
namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(10);
  return out;
}

void check_written(const std::ofstream& out, const std::filesystem::path& path) {
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

double percentile(std::vector<double> values, double q) {
  if (!(q >= 0.0 && q <= 100.0)) throw ConfigError("percentile must lie in [0, 100]");
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) throw ConfigError("percentile of an empty error list");
  std::sort(values.begin(), values.end());
  const double pos = (static_cast<double>(values.size()) - 1.0) * q / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<PercentileRow> percentile_curve(const std::vector<double>& values, const std::vector<double>& percentiles) {
  std::vector<PercentileRow> out;
  out.reserve(percentiles.size());
  for (double q : percentiles) out.push_back({q, percentile(values, q)});
  return out;
}

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "pso") return EstimatorKind::kPso;
  if (name == "lstm") return EstimatorKind::kLstm;
  if (name == "hybrid") return EstimatorKind::kHybrid;
  throw ConfigError("unknown estimator '" + name + "' (expected pso, lstm or hybrid)");
}

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kPso: return "pso";
    case EstimatorKind::kLstm: return "lstm";
    case EstimatorKind::kHybrid: return "hybrid";
  }
  return "unknown";
}

Estimator make_estimator(EstimatorKind kind, const Scene& scene, const nn::ModelBundle* bundle,
                         const EstimatorSettings& settings) {
  if (kind != EstimatorKind::kPso) {
    if (!bundle) throw ArtifactMismatch(estimator_name(kind) + " estimator needs a trained model");
    if (bundle->meta.pilots != scene.pilots() || bundle->meta.tiles != scene.num_tiles()) {
      throw ArtifactMismatch("model trained for T=" + std::to_string(bundle->meta.pilots) + ", K=" +
                             std::to_string(bundle->meta.tiles) + " but the scene has T=" +
                             std::to_string(scene.pilots()) + ", K=" + std::to_string(scene.num_tiles()));
    }
  }
  switch (kind) {
    case EstimatorKind::kPso:
      return [&scene, settings](const MeasurementSet& m, const ReflectionMatrix& beta, std::uint64_t seed) {
        PsoConfig pso = settings.direct_pso;
        pso.seed = seed;
        return estimate_direct(m.y, beta, scene, pso, settings.mode);
      };
    case EstimatorKind::kLstm:
      return [bundle](const MeasurementSet& m, const ReflectionMatrix& beta, std::uint64_t) {
        return estimate_lstm(m.y, beta, *bundle);
      };
    case EstimatorKind::kHybrid:
      return [&scene, bundle, settings](const MeasurementSet& m, const ReflectionMatrix& beta, std::uint64_t seed) {
        HybridConfig cfg = settings.hybrid;
        cfg.pso.seed = seed;
        return estimate_hybrid(m.y, beta, scene, *bundle, cfg);
      };
  }
  throw ConfigError("unknown estimator");
}

std::size_t heatmap_point_count(const Rect& region, double resolution) {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) throw ConfigError("heatmap resolution must be positive");
  // Small slack so that exact divisions are not lost to rounding (8 / 0.1 = 79.999...).
  const auto nx = static_cast<std::size_t>(std::floor(region.width() / resolution + 1e-9)) + 1;
  const auto ny = static_cast<std::size_t>(std::floor(region.height() / resolution + 1e-9)) + 1;
  return nx * ny;
}

std::vector<Eigen::Vector2d> heatmap_grid(const Rect& region, double resolution) {
  heatmap_point_count(region, resolution);
  const auto nx = static_cast<std::size_t>(std::floor(region.width() / resolution + 1e-9)) + 1;
  const auto ny = static_cast<std::size_t>(std::floor(region.height() / resolution + 1e-9)) + 1;
  std::vector<Eigen::Vector2d> out;
  out.reserve(nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      Eigen::Vector2d p{region.x_min + static_cast<double>(i) * resolution,
                        region.y_min + static_cast<double>(j) * resolution};
      out.push_back(region.clamp(p));  // keep the last column on the boundary despite rounding
    }
  }
  return out;
}

namespace {

struct SampleOutcome {
  double error_cm = std::numeric_limits<double>::quiet_NaN();
  double latency_ms = std::numeric_limits<double>::quiet_NaN();
};

SampleOutcome evaluate_point(const Scene& scene, const PhaseSchedule& schedule, const Estimator& estimator,
                             const Eigen::Vector2d& truth, Rng& rng, std::uint64_t pso_seed) {
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  const double phi0 = phase(rng);
  SampleOutcome out;
  try {
    const auto [m, beta] = simulate_measurements(scene, schedule, truth, phi0, rng);
    const EstimationResult r = estimator(m, beta, pso_seed);
    out.error_cm = 100.0 * (r.position - truth).norm();
    out.latency_ms = r.latency_ms;
  } catch (const Error&) {
    // recorded as NaN; the caller counts failures
  }
  return out;
}

}  // namespace

std::vector<HeatmapCell> heatmap(const Scene& scene, const PhaseSchedule& schedule, const Estimator& estimator,
                                 double resolution, std::uint64_t seed, unsigned threads) {
  const auto grid = heatmap_grid(scene.ue_region(), resolution);
  std::vector<HeatmapCell> cells(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    Rng rng = make_rng(seed, i);
    const SampleOutcome o = evaluate_point(scene, schedule, estimator, grid[i], rng, derive_seed(seed ^ 0x9e11, i));
    cells[i] = {grid[i].x(), grid[i].y(), o.error_cm};
  });
  return cells;
}

ErrorReport run_scenario(const ScenarioSpec& spec, const nn::ModelBundle* bundle) {
  const Scene scene = build_scene(spec.scene);
  const PhaseSchedule schedule = schedule_for(scene);
  const Estimator estimator = make_estimator(spec.estimator, scene, bundle, spec.settings);

  ErrorReport report;
  report.scenario = spec.name;
  report.estimator = estimator_name(spec.estimator);
  report.scene_fingerprint = scene.fingerprint();
  report.multipath = spec.scene.multipath.enabled;
  report.mount_height_z = spec.scene.mount_height_z;

  if (spec.grid_resolution) {
    report.truths = heatmap_grid(scene.ue_region(), *spec.grid_resolution);
  } else {
    if (spec.samples == 0) throw ConfigError("scenario needs at least one sample");
    report.truths.resize(spec.samples);
    const Rect& region = scene.ue_region();
    for (std::size_t i = 0; i < spec.samples; ++i) {
      Rng rng = make_rng(derive_seed(spec.seed, 0x5a11), i);
      std::uniform_real_distribution<double> ux(region.x_min, region.x_max);
      std::uniform_real_distribution<double> uy(region.y_min, region.y_max);
      const double x = ux(rng);
      report.truths[i] = {x, uy(rng)};
    }
  }

  const std::size_t n = report.truths.size();
  report.errors_cm.resize(n);
  report.latency_ms.resize(n);
  parallel_for(n, spec.threads, [&](std::size_t i) {
    Rng rng = make_rng(spec.seed, i);
    const SampleOutcome o =
        evaluate_point(scene, schedule, estimator, report.truths[i], rng, derive_seed(spec.seed ^ 0x9e11, i));
    report.errors_cm[i] = o.error_cm;
    report.latency_ms[i] = o.latency_ms;
  });
  report.failures = static_cast<std::size_t>(
      std::count_if(report.errors_cm.begin(), report.errors_cm.end(), [](double e) { return std::isnan(e); }));
  if (report.failures == n) throw NumericError("every estimate in scenario '" + spec.name + "' failed");
  report.percentiles = percentile_curve(report.errors_cm);
  report.latency_p50_ms = percentile(report.latency_ms, 50.0);
  report.latency_p95_ms = percentile(report.latency_ms, 95.0);
  return report;
}

std::vector<std::filesystem::path> write_report(const ErrorReport& report, const std::filesystem::path& dir,
                                                const Json& extra_summary) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;

  const auto pct_path = dir / "percentiles.csv";
  {
    auto out = open_csv(pct_path);
    out << "percentile,error_cm\n";
    for (const PercentileRow& r : report.percentiles) out << r.percentile << ',' << r.value << '\n';
    check_written(out, pct_path);
  }
  written.push_back(pct_path);

  const auto lat_path = dir / "latency.csv";
  {
    auto out = open_csv(lat_path);
    out << "estimator,p50_ms,p95_ms\n" << report.estimator << ',' << report.latency_p50_ms << ',' << report.latency_p95_ms << '\n';
    check_written(out, lat_path);
  }
  written.push_back(lat_path);

  const auto err_path = dir / "errors.csv";
  {
    auto out = open_csv(err_path);
    out << "x_m,y_m,error_cm\n";
    for (std::size_t i = 0; i < report.errors_cm.size(); ++i) {
      out << report.truths[i].x() << ',' << report.truths[i].y() << ',' << report.errors_cm[i] << '\n';
    }
    check_written(out, err_path);
  }
  written.push_back(err_path);

  Json pct = Json::array();
  for (const PercentileRow& r : report.percentiles) pct.push_back({{"percentile", r.percentile}, {"error_cm", r.value}});
  Json summary{{"scenario", report.scenario},
               {"estimator", report.estimator},
               {"samples", report.errors_cm.size()},
               {"failures", report.failures},
               {"multipath", report.multipath},
               {"z", report.mount_height_z},
               {"scene_fingerprint", hex64(report.scene_fingerprint)},
               {"percentiles", pct},
               {"latency_ms", {{"p50", report.latency_p50_ms}, {"p95", report.latency_p95_ms}}}};
  if (extra_summary.is_object()) summary.update(extra_summary);
  const auto json_path = dir / "summary.json";
  write_json_file(json_path, summary);
  written.push_back(json_path);
  return written;
}

void write_heatmap_csv(const std::filesystem::path& path, const std::vector<HeatmapCell>& cells) {
  auto out = open_csv(path);
  out << "x_m,y_m,error_cm\n";
  for (const HeatmapCell& c : cells) out << c.x << ',' << c.y << ',' << c.error_cm << '\n';
  check_written(out, path);
}

std::vector<std::string> builtin_preset_names() {
  return {"z1", "z3", "z1_mp", "z3_mp", "desk_z1", "desk_z3", "desk_z1_mp", "desk_z3_mp"};
}

Preset builtin_preset(const std::string& name) {
  std::string base = name;
  Preset p;
  p.name = name;
  const bool desk = base.starts_with("desk_");
  if (desk) base = base.substr(5);
  if (base != "z1" && base != "z3" && base != "z1_mp" && base != "z3_mp") {
    throw ConfigError("unknown scenario '" + name + "'");
  }
  p.scene.mount_height_z = base.starts_with("z3") ? 3.0 : 1.0;
  p.scene.multipath.enabled = base.ends_with("_mp");
  p.scene.multipath.relative_power = 1.0;  // 0 dB
  if (desk) {
    p.scene.num_tiles = 20;
    p.scene.pilots = 16;
    p.model.hidden = 64;
    p.model.dense_dims = {256, 64};
    p.model.dropout = 0.0;
    p.train.epochs = 50;
    p.dataset_size = 5000;
  }
  p.model.input_dim = feature_dim(p.scene.pilots, p.scene.num_tiles);
  return p;
}

void apply_json(const Json& j, Preset& preset) {
  if (j.contains("scene")) apply_json(j.at("scene"), preset.scene);
  if (j.contains("model")) nn::apply_json(j.at("model"), preset.model);
  if (j.contains("train")) nn::apply_json(j.at("train"), preset.train);
  if (j.contains("dataset_size")) {
    try {
      preset.dataset_size = j.at("dataset_size").get<std::size_t>();
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("invalid dataset_size: ") + e.what());
    }
  }
  if (!j.contains("model") || !j.at("model").contains("input_dim")) {
    preset.model.input_dim = feature_dim(preset.scene.pilots, preset.scene.num_tiles);
  }
}

Json to_json(const Preset& preset) {
  return Json{{"name", preset.name},
              {"scene", to_json(preset.scene)},
              {"model", nn::to_json(preset.model)},
              {"train", nn::to_json(preset.train)},
              {"dataset_size", preset.dataset_size}};
}

}  // namespace risloc
