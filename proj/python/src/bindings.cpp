#include "risloc/config.hpp"
#include "risloc/dataset.hpp"
#include "risloc/direct_position.hpp"
#include "risloc/error.hpp"
#include "risloc/eval.hpp"
#include "risloc/hybrid.hpp"
#include "risloc/nn/train.hpp"
#include "risloc/random.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace risloc;

namespace {

// Configs cross the boundary as JSON text; the python side passes json.dumps(dict).
SceneConfig scene_config(const std::string& json_text) {
  SceneConfig c;
  try {
    apply_json(Json::parse(json_text.empty() ? "{}" : json_text), c);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("scene config is not valid JSON: ") + e.what());
  }
  return c;
}

Json parse_or_empty(const std::string& text) {
  try {
    return Json::parse(text.empty() ? "{}" : text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

py::dict result_dict(const EstimationResult& r) {
  py::dict d;
  d["position"] = r.position;
  d["phi0"] = r.phi0 ? py::cast(*r.phi0) : py::none();
  d["residual_cost"] = r.residual_cost;
  d["latency_ms"] = r.latency_ms;
  d["nn_position"] = r.nn_position ? py::cast(Eigen::Vector2d(*r.nn_position)) : py::none();
  d["fallback"] = r.fallback;
  d["evaluations"] = r.evaluations;
  return d;
}

struct SceneHandle {
  Scene scene;
  PhaseSchedule schedule;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "RIS-assisted indoor localisation: simulation, direct positioning, LSTM and hybrid estimators";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<GeometryError>(m, "GeometryError", base.ptr());
  auto io = py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", io.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<ArtifactMismatch>(m, "ArtifactMismatch", base.ptr());

  py::class_<SceneHandle>(m, "Scene")
      .def(py::init([](const std::string& config) {
             Scene s = build_scene(scene_config(config));
             PhaseSchedule sch = schedule_for(s);
             return SceneHandle{std::move(s), std::move(sch)};
           }),
           py::arg("config_json") = "")
      .def_property_readonly("num_tiles", [](const SceneHandle& h) { return h.scene.num_tiles(); })
      .def_property_readonly("pilots", [](const SceneHandle& h) { return h.scene.pilots(); })
      .def_property_readonly("wavelength", [](const SceneHandle& h) { return h.scene.wavelength(); })
      .def_property_readonly("bs_position", [](const SceneHandle& h) { return Eigen::Vector3d(h.scene.bs_position()); })
      .def_property_readonly("fingerprint", [](const SceneHandle& h) { return hex64(h.scene.fingerprint()); })
      .def_property_readonly("config_json", [](const SceneHandle& h) { return to_json(h.scene.config()).dump(); })
      .def_property_readonly("ue_region",
                             [](const SceneHandle& h) {
                               const Rect& r = h.scene.ue_region();
                               return std::vector<double>{r.x_min, r.x_max, r.y_min, r.y_max};
                             })
      .def_property_readonly("schedule", [](const SceneHandle& h) { return Eigen::MatrixXd(h.schedule.psi); })
      .def("tile_centroids",
           [](const SceneHandle& h) {
             Eigen::MatrixXd out(h.scene.num_tiles(), 3);
             for (const Tile& t : h.scene.tiles()) out.row(t.index) = t.centroid.transpose();
             return out;
           })
      .def("reflection_matrix",
           [](const SceneHandle& h, double x, double y) {
             return Eigen::MatrixXcd(reflection_matrix(h.scene, h.schedule, {x, y}).beta);
           },
           py::arg("x"), py::arg("y"))
      .def("simulate",
           [](const SceneHandle& h, double x, double y, double phi0, std::uint64_t seed) {
             Rng rng = make_rng(seed, 0);
             auto [meas, beta] = simulate_measurements(h.scene, h.schedule, {x, y}, phi0, rng);
             return py::make_tuple(Eigen::VectorXcd(meas.y), Eigen::MatrixXcd(beta.beta));
           },
           py::arg("x"), py::arg("y"), py::arg("phi0"), py::arg("seed") = 0,
           "Returns (y, beta) for a UE at (x, y) with phase offset phi0.")
      .def("direct_cost",
           [](const SceneHandle& h, const Eigen::VectorXcd& y, const Eigen::MatrixXcd& beta, double x, double yy,
              double phi0) {
             const CostContext ctx(y, ReflectionMatrix{beta}, h.scene);
             return direct_cost({x, yy}, phi0, ctx);
           },
           py::arg("y"), py::arg("beta"), py::arg("x"), py::arg("y_pos"), py::arg("phi0"))
      .def("estimate_direct",
           [](const SceneHandle& h, const Eigen::VectorXcd& y, const Eigen::MatrixXcd& beta, std::uint64_t seed,
              std::size_t swarm, std::size_t iterations, std::size_t restarts) {
             PsoConfig pso = default_direct_pso();
             pso.seed = seed;
             pso.swarm_size = swarm;
             pso.iterations = iterations;
             pso.restarts = restarts;
             EstimationResult r;
             {
               py::gil_scoped_release release;
               r = estimate_direct(y, ReflectionMatrix{beta}, h.scene, pso);
             }
             return result_dict(r);
           },
           py::arg("y"), py::arg("beta"), py::arg("seed") = 0, py::arg("swarm") = 60, py::arg("iterations") = 400,
           py::arg("restarts") = 5)
      .def("generate_dataset",
           [](const SceneHandle& h, std::size_t n, std::uint64_t seed, const std::string& path, unsigned threads) {
             Dataset d;
             {
               py::gil_scoped_release release;
               d = generate_dataset(h.scene, h.schedule, n, seed, threads);
               save_dataset(d, path);
             }
             return d.size();
           },
           py::arg("n"), py::arg("seed"), py::arg("path"), py::arg("threads") = 1,
           "Simulates n samples and writes the dataset and its sidecar to `path`.");

  m.def("load_dataset",
        [](const std::string& path) {
          const Dataset d = load_dataset(path);
          py::dict out;
          out["features"] = Eigen::MatrixXd(d.features);
          out["targets"] = Eigen::MatrixXd(d.targets);
          out["phi0"] = Eigen::VectorXd(d.phi0);
          out["pilots"] = d.pilots;
          out["tiles"] = d.tiles;
          out["train"] = d.splits.train;
          out["val"] = d.splits.val;
          out["test"] = d.splits.test;
          return out;
        },
        py::arg("path"));

  m.def("parameter_count",
        [](const std::string& model_json) {
          nn::ModelConfig c;
          nn::apply_json(parse_or_empty(model_json), c);
          return nn::parameter_count(c);
        },
        py::arg("model_json") = "");

  m.def("preset", [](const std::string& name) { return to_json(builtin_preset(name)).dump(); }, py::arg("name"),
        "Built-in scenario preset as JSON text.");

  py::class_<nn::ModelBundle>(m, "Model")
      .def_static("load", [](const std::string& path) { return nn::load_checkpoint(path); }, py::arg("path"))
      .def("save", [](const nn::ModelBundle& b, const std::string& path) { nn::save_checkpoint(b, path); })
      .def_property_readonly("parameter_count", [](const nn::ModelBundle& b) { return b.network.parameter_count(); })
      .def_property_readonly("config_json", [](const nn::ModelBundle& b) { return nn::to_json(b.config()).dump(); })
      .def_property_readonly("best_epoch", [](const nn::ModelBundle& b) { return b.meta.best_epoch; })
      .def("predict",
           [](const nn::ModelBundle& b, const Eigen::VectorXcd& y, const Eigen::MatrixXcd& beta) {
             const nn::Prediction p = nn::predict(b, y, ReflectionMatrix{beta});
             return py::make_tuple(p.position, p.latency_ms);
           },
           py::arg("y"), py::arg("beta"))
      .def("estimate_hybrid",
           [](const nn::ModelBundle& b, const SceneHandle& h, const Eigen::VectorXcd& y, const Eigen::MatrixXcd& beta,
              double halfwidth, std::uint64_t seed) {
             HybridConfig cfg;
             cfg.halfwidth = halfwidth;
             cfg.pso.seed = seed;
             EstimationResult r;
             {
               py::gil_scoped_release release;
               r = estimate_hybrid(y, ReflectionMatrix{beta}, h.scene, b, cfg);
             }
             return result_dict(r);
           },
           py::arg("scene"), py::arg("y"), py::arg("beta"), py::arg("halfwidth") = 0.5, py::arg("seed") = 0);

  m.def("train",
        [](const std::string& dataset_path, const std::string& model_json, const std::string& train_json) {
          const Dataset d = load_dataset(dataset_path);
          nn::ModelConfig mc;
          mc.input_dim = d.feature_dim();
          nn::apply_json(parse_or_empty(model_json), mc);
          nn::TrainConfig tc;
          nn::apply_json(parse_or_empty(train_json), tc);
          nn::TrainResult r;
          {
            py::gil_scoped_release release;
            r = nn::train(mc, d, tc);
          }
          py::list history;
          for (const auto& e : r.history) {
            py::dict row;
            row["epoch"] = e.epoch;
            row["train_mse"] = e.train_mse;
            row["val_mse"] = e.val_mse;
            row["lr"] = e.lr;
            history.append(row);
          }
          return py::make_tuple(std::move(r.bundle), history);
        },
        py::arg("dataset_path"), py::arg("model_json") = "", py::arg("train_json") = "",
        "Trains on a saved dataset; returns (Model, per-epoch history).");

  m.def("percentile_curve",
        [](const std::vector<double>& errors, const std::vector<double>& percentiles) {
          std::vector<std::pair<double, double>> out;
          for (const auto& r : percentile_curve(errors, percentiles)) out.emplace_back(r.percentile, r.value);
          return out;
        },
        py::arg("errors"), py::arg("percentiles") = kReportPercentiles);

  m.def("heatmap_point_count",
        [](double resolution, const std::vector<double>& region) {
          if (region.size() != 4) throw ConfigError("region must be [x_min, x_max, y_min, y_max]");
          return heatmap_point_count(Rect{region[0], region[1], region[2], region[3]}, resolution);
        },
        py::arg("resolution"), py::arg("region") = std::vector<double>{-4.0, 4.0, 1.0, 10.0});
}
