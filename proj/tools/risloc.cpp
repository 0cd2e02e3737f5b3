// risloc command line: scene inspection, dataset generation, training,
// evaluation, heatmaps and single-shot localisation.

#include "risloc/config.hpp"
#include "risloc/dataset.hpp"
#include "risloc/error.hpp"
#include "risloc/eval.hpp"
#include "risloc/hash.hpp"
#include "risloc/hybrid.hpp"
#include "risloc/random.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace risloc;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitArtifact = 5;

struct CommonOptions {
  std::string config_path;
  std::string scenario = "z1";
  std::optional<std::uint64_t> seed;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON config with defaults and scenario overrides");
  cmd->add_option("--scenario", o.scenario, "scenario preset (z1, z3, z1_mp, z3_mp, desk_*)");
  cmd->add_option("--seed", o.seed, "base seed for sampling, training and evaluation");
  cmd->add_option("--threads", o.threads, "maximum worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out-dir", o.out_dir, "output directory (default $RISLOC_OUT_DIR or ./out)");
}

fs::path out_dir(const CommonOptions& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* env = std::getenv("RISLOC_OUT_DIR"); env && *env) return env;
  return "out";
}

// Built-in preset, then the file's "defaults", then its per-scenario block.
// A file scenario that is not built in names its starting point with "base".
Preset resolve_preset(const CommonOptions& o) {
  if (o.config_path.empty()) return builtin_preset(o.scenario);
  const Json file = read_json_file(o.config_path);
  Json block = Json::object();
  if (file.contains("scenarios") && file.at("scenarios").contains(o.scenario)) block = file.at("scenarios").at(o.scenario);
  const std::string base = block.is_object() && block.contains("base") ? block.at("base").get<std::string>() : o.scenario;
  Preset p = builtin_preset(base);
  p.name = o.scenario;
  if (file.contains("defaults")) apply_json(file.at("defaults"), p);
  apply_json(block, p);
  return p;
}

std::uint64_t hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  Fnv1a h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(std::as_bytes(std::span(buf.data(), static_cast<std::size_t>(in.gcount()))));
  }
  return h.digest();
}

class Manifest {
 public:
  Manifest(std::string subcommand, const CommonOptions& o, const Preset& preset)
      : start_(std::chrono::steady_clock::now()) {
    j_["subcommand"] = std::move(subcommand);
    j_["scenario"] = preset.name;
    j_["config_file"] = o.config_path;
    j_["resolved"] = to_json(preset);
    j_["config_hash"] = hex64(fnv1a(j_["resolved"].dump()));
    j_["threads"] = o.threads;
    j_["inputs"] = Json::object();
    j_["outputs"] = Json::object();
  }
  void seed(const std::string& name, std::uint64_t value) { j_["seeds"][name] = value; }
  void input(const std::string& name, const fs::path& path) {
    j_["inputs"][name] = {{"path", path.string()}, {"fnv1a", hex64(hash_file(path))}};
  }
  void output(const std::string& name, const fs::path& path) {
    j_["outputs"][name] = {{"path", path.string()}, {"fnv1a", hex64(hash_file(path))}};
  }
  Json& extra() { return j_; }

  // Prints the manifest and stores it next to the outputs.
  void finish(const fs::path& dir) {
    j_["elapsed_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    fs::create_directories(dir);
    const fs::path path = dir / ("manifest_" + j_["subcommand"].get<std::string>() + ".json");
    write_json_file(path, j_);
    std::cout << j_.dump(2) << '\n';
  }

 private:
  Json j_;
  std::chrono::steady_clock::time_point start_;
};

int cmd_scene(const CommonOptions& o, bool list_tiles) {
  const Preset p = resolve_preset(o);
  const Scene scene = build_scene(p.scene);
  Json tiles = Json::array();
  if (list_tiles) {
    for (const Tile& t : scene.tiles()) {
      tiles.push_back({{"index", t.index},
                       {"centroid", {t.centroid.x(), t.centroid.y(), t.centroid.z()}},
                       {"normal", {t.normal.x(), t.normal.y(), t.normal.z()}}});
    }
  }
  Manifest m("scene", o, p);
  m.extra()["scene"] = {{"tiles", scene.num_tiles()},
                        {"pilots", scene.pilots()},
                        {"wavelength_m", scene.wavelength()},
                        {"bs", {scene.bs_position().x(), scene.bs_position().y(), scene.bs_position().z()}},
                        {"fingerprint", hex64(scene.fingerprint())},
                        {"feature_dim", feature_dim(scene.pilots(), scene.num_tiles())},
                        {"model_parameters", nn::parameter_count(p.model)}};
  if (list_tiles) m.extra()["scene"]["tile_list"] = tiles;
  m.finish(out_dir(o));
  return 0;
}

int cmd_generate(const CommonOptions& o, std::optional<std::size_t> n, std::string out) {
  const Preset p = resolve_preset(o);
  const Scene scene = build_scene(p.scene);
  const PhaseSchedule schedule = schedule_for(scene);
  const std::uint64_t seed = o.seed.value_or(1);
  const fs::path dir = out_dir(o);
  fs::create_directories(dir);
  const fs::path path = out.empty() ? dir / "dataset.bin" : fs::path(out);
  const Dataset data = generate_dataset(scene, schedule, n.value_or(p.dataset_size), seed, o.threads);
  save_dataset(data, path);

  Manifest m("generate", o, p);
  m.seed("dataset", seed);
  m.seed("schedule", schedule.seed);
  m.output("dataset", path);
  m.output("sidecar", sidecar_path(path));
  m.extra()["samples"] = data.size();
  m.extra()["split"] = {{"train", data.splits.train.size()}, {"val", data.splits.val.size()}, {"test", data.splits.test.size()}};
  m.finish(dir);
  return 0;
}

int cmd_train(const CommonOptions& o, std::string dataset_path, std::optional<int> epochs, std::string out, bool quiet) {
  Preset p = resolve_preset(o);
  const fs::path dir = out_dir(o);
  fs::create_directories(dir);
  const fs::path data_path = dataset_path.empty() ? dir / "dataset.bin" : fs::path(dataset_path);
  const Dataset data = load_dataset(data_path);
  if (epochs) p.train.epochs = *epochs;
  if (o.seed) p.train.seed = *o.seed;
  p.model.input_dim = data.feature_dim();

  const auto result = nn::train(p.model, data, p.train, [quiet](const nn::EpochRecord& r) {
    if (!quiet) {
      std::cerr << "epoch " << r.epoch << "  train_mse " << r.train_mse << "  val_mse " << r.val_mse << "  lr " << r.lr
                << '\n';
    }
  });
  const fs::path ckpt = out.empty() ? dir / "model.ckpt" : fs::path(out);
  const fs::path history = fs::path(ckpt.string() + ".history.csv");
  nn::save_checkpoint(result.bundle, ckpt);
  nn::write_history_csv(history, result.history);

  Manifest m("train", o, p);
  m.seed("train", p.train.seed);
  m.input("dataset", data_path);
  m.output("checkpoint", ckpt);
  m.output("loss_history", history);
  m.extra()["best_epoch"] = result.bundle.meta.best_epoch;
  m.extra()["best_val_mse"] = result.bundle.meta.best_val_loss;
  m.extra()["parameters"] = result.bundle.network.parameter_count();
  m.finish(dir);
  return 0;
}

std::optional<nn::ModelBundle> maybe_load_model(EstimatorKind kind, const std::string& path, const fs::path& dir) {
  if (kind == EstimatorKind::kPso) return std::nullopt;
  const fs::path p = path.empty() ? dir / "model.ckpt" : fs::path(path);
  return nn::load_checkpoint(p);
}

int cmd_eval(const CommonOptions& o, const std::string& estimator, std::size_t n, const std::string& model_path) {
  const Preset p = resolve_preset(o);
  const fs::path dir = out_dir(o);
  ScenarioSpec spec;
  spec.name = p.name;
  spec.scene = p.scene;
  spec.estimator = parse_estimator(estimator);
  spec.samples = n;
  spec.seed = o.seed.value_or(1);
  spec.threads = o.threads;
  const auto bundle = maybe_load_model(spec.estimator, model_path, dir);
  const ErrorReport report = run_scenario(spec, bundle ? &*bundle : nullptr);

  const fs::path run_dir = dir / ("eval_" + p.name + "_" + estimator);
  const auto files = write_report(report, run_dir, Json{{"config_hash", hex64(fnv1a(to_json(p).dump()))}, {"seed", spec.seed}});
  Manifest m("eval", o, p);
  m.seed("eval", spec.seed);
  if (bundle) m.input("checkpoint", model_path.empty() ? dir / "model.ckpt" : fs::path(model_path));
  for (const fs::path& f : files) m.output(f.filename().string(), f);
  m.extra()["multipath"] = report.multipath;
  m.extra()["z"] = report.mount_height_z;
  Json pct = Json::object();
  for (const auto& r : report.percentiles) {
    std::ostringstream key;
    key << r.percentile;
    pct[key.str()] = r.value;
  }
  m.extra()["percentiles_cm"] = pct;
  m.finish(run_dir);
  return 0;
}

int cmd_heatmap(const CommonOptions& o, const std::string& estimator, double resolution, const std::string& model_path) {
  const Preset p = resolve_preset(o);
  const fs::path dir = out_dir(o);
  const Scene scene = build_scene(p.scene);
  const PhaseSchedule schedule = schedule_for(scene);
  const EstimatorKind kind = parse_estimator(estimator);
  const auto bundle = maybe_load_model(kind, model_path, dir);
  const Estimator est = make_estimator(kind, scene, bundle ? &*bundle : nullptr);
  const std::uint64_t seed = o.seed.value_or(1);
  const auto cells = heatmap(scene, schedule, est, resolution, seed, o.threads);

  fs::create_directories(dir);
  const fs::path path = dir / ("heatmap_" + p.name + "_" + estimator + ".csv");
  write_heatmap_csv(path, cells);
  Manifest m("heatmap", o, p);
  m.seed("heatmap", seed);
  m.output("heatmap", path);
  m.extra()["points"] = cells.size();
  m.extra()["resolution_m"] = resolution;
  m.finish(dir);
  return 0;
}

int cmd_locate(const CommonOptions& o, std::vector<double> pos, std::optional<double> sigma2, std::optional<double> phi0,
               const std::string& model_path) {
  Preset p = resolve_preset(o);
  if (sigma2) p.scene.noise_power = *sigma2;
  const Scene scene = build_scene(p.scene);
  const PhaseSchedule schedule = schedule_for(scene);
  const std::uint64_t seed = o.seed.value_or(1);
  Rng rng = make_rng(seed, 0);
  const Eigen::Vector2d truth{pos.at(0), pos.at(1)};
  const double offset = phi0.value_or(std::uniform_real_distribution<double>(0.0, kTwoPi)(rng));
  const auto [meas, beta] = simulate_measurements(scene, schedule, truth, offset, rng, p.name);

  std::cout << std::fixed << std::setprecision(6);
  std::cout << "truth   x=" << truth.x() << " y=" << truth.y() << " phi0=" << offset << '\n';
  auto report = [&](const std::string& name, const EstimationResult& r) {
    std::cout << std::left << std::setw(8) << name << "x=" << r.position.x() << " y=" << r.position.y()
              << " error_mm=" << 1000.0 * (r.position - truth).norm() << " latency_ms=" << r.latency_ms << '\n';
  };
  PsoConfig pso = default_direct_pso();
  pso.seed = seed;
  report("pso", estimate_direct(meas.y, beta, scene, pso));

  const fs::path ckpt = model_path.empty() ? out_dir(o) / "model.ckpt" : fs::path(model_path);
  if (fs::exists(ckpt)) {
    const nn::ModelBundle bundle = nn::load_checkpoint(ckpt);
    report("lstm", estimate_lstm(meas.y, beta, bundle));
    HybridConfig h;
    h.pso.seed = seed;
    report("hybrid", estimate_hybrid(meas.y, beta, scene, bundle, h));
  } else if (!model_path.empty()) {
    throw IoError("checkpoint not found: " + ckpt.string());
  } else {
    std::cout << "(no checkpoint at " << ckpt.string() << "; lstm and hybrid skipped)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RIS-assisted indoor localisation toolkit"};
  app.require_subcommand(1);
  CommonOptions o;

  auto* scene = app.add_subcommand("scene", "print the resolved scene");
  add_common(scene, o);
  bool list_tiles = false;
  scene->add_flag("--tiles", list_tiles, "include every tile");

  auto* generate = app.add_subcommand("generate", "simulate a fingerprint dataset");
  add_common(generate, o);
  std::optional<std::size_t> n_gen;
  std::string out;
  generate->add_option("--n", n_gen, "number of samples");
  generate->add_option("--out", out, "dataset path (default <out-dir>/dataset.bin)");

  auto* train = app.add_subcommand("train", "train the network on a dataset");
  add_common(train, o);
  std::string dataset;
  std::optional<int> epochs;
  bool quiet = false;
  train->add_option("--dataset", dataset, "dataset path (default <out-dir>/dataset.bin)");
  train->add_option("--epochs", epochs, "override the preset's epoch count");
  train->add_option("--out", out, "checkpoint path (default <out-dir>/model.ckpt)");
  train->add_flag("--quiet", quiet, "no per-epoch log");

  std::string estimator = "pso";
  std::string model;
  auto* eval = app.add_subcommand("eval", "error percentiles over random positions");
  add_common(eval, o);
  std::size_t n_eval = 200;
  eval->add_option("--estimator", estimator, "pso | lstm | hybrid");
  eval->add_option("--n", n_eval, "number of random positions");
  eval->add_option("--model", model, "checkpoint (default <out-dir>/model.ckpt)");

  auto* heat = app.add_subcommand("heatmap", "error over a dense grid of the UE region");
  add_common(heat, o);
  double resolution = 0.1;
  heat->add_option("--estimator", estimator, "pso | lstm | hybrid");
  heat->add_option("--resolution", resolution, "grid spacing in metres");
  heat->add_option("--model", model, "checkpoint (default <out-dir>/model.ckpt)");

  auto* locate = app.add_subcommand("locate", "simulate one measurement and run every estimator");
  add_common(locate, o);
  std::vector<double> pos{2.0, 5.0};
  std::optional<double> sigma2;
  std::optional<double> phi0;
  locate->add_option("--pos", pos, "UE position x y in metres")->expected(2);
  locate->add_option("--sigma2", sigma2, "noise power in watts (0 for noiseless)");
  locate->add_option("--phi0", phi0, "phase offset in radians (random when omitted)");
  locate->add_option("--model", model, "checkpoint (default <out-dir>/model.ckpt if present)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (*scene) return cmd_scene(o, list_tiles);
    if (*generate) return cmd_generate(o, n_gen, out);
    if (*train) return cmd_train(o, dataset, epochs, out, quiet);
    if (*eval) return cmd_eval(o, estimator, n_eval, model);
    if (*heat) return cmd_heatmap(o, estimator, resolution, model);
    if (*locate) return cmd_locate(o, pos, sigma2, phi0, model);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const GeometryError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ArtifactMismatch& e) {
    std::cerr << "artifact mismatch: " << e.what() << '\n';
    return kExitArtifact;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
