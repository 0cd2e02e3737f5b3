#include "risloc/error.hpp"
#include "risloc/nn/train.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace risloc;
using namespace risloc::nn;

namespace {

namespace fs = std::filesystem;

struct LinearTask {
  Matrix<float> x_train, y_train, x_val, y_val;
};

LinearTask linear_task(std::size_t n) {
  Rng rng(42);
  std::normal_distribution<float> g(0.0f, 1.0f);
  Eigen::Matrix<float, 2, 4> a;
  a << 0.5f, -0.3f, 0.2f, 0.1f, -0.2f, 0.4f, 0.3f, -0.5f;
  auto make = [&](std::size_t m, Matrix<float>& x, Matrix<float>& y) {
    x.resize(4, static_cast<Eigen::Index>(m));
    for (float& v : x.reshaped()) v = g(rng);
    y = a * x;
  };
  LinearTask t;
  make(n, t.x_train, t.y_train);
  make(n / 4, t.x_val, t.y_val);
  return t;
}

ModelConfig small_model(Eigen::Index input_dim) {
  ModelConfig c;
  c.input_dim = input_dim;
  c.hidden = 8;
  c.dense_dims = {16};
  c.dropout = 0.0;
  return c;
}

TrainConfig quick_train(int epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.lr = 1e-2;
  c.batch = 16;
  c.seed = 5;
  return c;
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("risloc_train_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Dataset tiny_dataset() {
  SceneConfig c;
  c.num_tiles = 4;
  c.pilots = 4;
  const Scene scene = build_scene(c);
  return generate_dataset(scene, schedule_for(scene), 200, 3);
}

}  // namespace

TEST(Fit, LearnsALinearMap) {
  const LinearTask t = linear_task(200);
  Network<float> net(small_model(4));
  net.init(1);
  const double before = evaluate_mse(net, t.x_val, t.y_val);
  const auto history = fit(net, t.x_train, t.y_train, t.x_val, t.y_val, quick_train(50));
  ASSERT_EQ(history.size(), 50u);
  const double after = evaluate_mse(net, t.x_val, t.y_val);
  EXPECT_LE(after * 10, before) << before << " -> " << after;
}

TEST(Fit, BitIdenticalForTheSameSeed) {
  const LinearTask t = linear_task(64);
  ModelConfig c = small_model(4);
  c.dropout = 0.3;
  auto run = [&] {
    Network<float> net(c);
    net.init(2);
    fit(net, t.x_train, t.y_train, t.x_val, t.y_val, quick_train(5));
    return net;
  };
  Network<float> a = run(), b = run();
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value) << pa[i]->name;
}

TEST(Fit, KeepsTheBestValidationEpoch) {
  const LinearTask t = linear_task(64);
  Network<float> net(small_model(4));
  net.init(3);
  TrainConfig cfg = quick_train(30);
  cfg.lr = 0.05;  // noisy enough that the last epoch is rarely the best
  std::vector<EpochRecord> seen;
  const auto history = fit(net, t.x_train, t.y_train, t.x_val, t.y_val, cfg, [&](const EpochRecord& r) { seen.push_back(r); });
  ASSERT_EQ(seen.size(), history.size());
  double best = history.front().val_mse;
  for (const auto& r : history) best = std::min(best, r.val_mse);
  EXPECT_DOUBLE_EQ(evaluate_mse(net, t.x_val, t.y_val), best);
  for (std::size_t i = 0; i < history.size(); ++i) EXPECT_EQ(history[i].epoch, static_cast<int>(i) + 1);
}

TEST(Fit, NonFiniteLossNamesTheBatch) {
  LinearTask t = linear_task(32);
  t.y_train(0, 0) = std::numeric_limits<float>::quiet_NaN();
  Network<float> net(small_model(4));
  net.init(4);
  try {
    fit(net, t.x_train, t.y_train, t.x_val, t.y_val, quick_train(2));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch"), std::string::npos) << msg;
  }
}

TEST(Fit, RejectsBadConfigs) {
  const LinearTask t = linear_task(32);
  Network<float> net(small_model(4));
  TrainConfig c = quick_train(1);
  c.lr = 0.0;
  EXPECT_THROW(fit(net, t.x_train, t.y_train, t.x_val, t.y_val, c), ConfigError);
  c = quick_train(1);
  c.scheduler_factor = 1.0;
  EXPECT_THROW(fit(net, t.x_train, t.y_train, t.x_val, t.y_val, c), ConfigError);
  EXPECT_THROW(fit(net, t.x_train, t.y_val, t.x_val, t.y_val, quick_train(1)), ConfigError);
}

TEST(Train, EndToEndWithCheckpointRoundTrip) {
  const Dataset data = tiny_dataset();
  const TrainResult r = train(small_model(data.feature_dim()), data, quick_train(3));
  EXPECT_EQ(r.history.size(), 3u);
  EXPECT_EQ(r.bundle.meta.pilots, 4);
  EXPECT_EQ(r.bundle.meta.tiles, 4);
  EXPECT_GE(r.bundle.meta.best_epoch, 1);

  const fs::path dir = temp_dir("roundtrip");
  save_checkpoint(r.bundle, dir / "m.ckpt");
  const ModelBundle loaded = load_checkpoint(dir / "m.ckpt");
  const RowMatrixXd rows = data.features.topRows(20);
  const auto a = predict_features(r.bundle, rows);
  const auto b = predict_features(loaded, rows);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  EXPECT_EQ(loaded.meta.best_epoch, r.bundle.meta.best_epoch);
  EXPECT_EQ(loaded.stats.feature_mean, r.bundle.stats.feature_mean);

  write_history_csv(dir / "h.csv", r.history);
  std::ifstream in(dir / "h.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "epoch,train_mse,val_mse,lr");
  int rows_read = 0;
  while (std::getline(in, line)) ++rows_read;
  EXPECT_EQ(rows_read, 3);
}

TEST(Train, RejectsMismatchedInputSize) {
  const Dataset data = tiny_dataset();
  EXPECT_THROW(train(small_model(data.feature_dim() + 2), data, quick_train(1)), ArtifactMismatch);
}

TEST(Checkpoint, CorruptionIsDetected) {
  const Dataset data = tiny_dataset();
  const TrainResult r = train(small_model(data.feature_dim()), data, quick_train(1));
  const fs::path dir = temp_dir("corrupt");
  const fs::path good = dir / "m.ckpt";
  save_checkpoint(r.bundle, good);
  const auto size = fs::file_size(good);

  auto mutate = [&](const std::string& name, auto&& edit) {
    const fs::path p = dir / name;
    fs::copy_file(good, p, fs::copy_options::overwrite_existing);
    edit(p);
    return p;
  };
  const fs::path flipped = mutate("flip.ckpt", [&](const fs::path& p) {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(static_cast<std::streamoff>(size - 40));
    f.put('\x5a');
  });
  EXPECT_THROW(load_checkpoint(flipped), FormatError);
  const fs::path truncated = mutate("trunc.ckpt", [&](const fs::path& p) { fs::resize_file(p, size - 100); });
  EXPECT_THROW(load_checkpoint(truncated), FormatError);
  const fs::path magic = mutate("magic.ckpt", [&](const fs::path& p) {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.put('X');
  });
  EXPECT_THROW(load_checkpoint(magic), FormatError);
  const fs::path trailing = mutate("trail.ckpt", [&](const fs::path& p) {
    std::ofstream(p, std::ios::app | std::ios::binary) << "junk";
  });
  EXPECT_THROW(load_checkpoint(trailing), FormatError);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), IoError);
}

TEST(Predict, PureAndShapeChecked) {
  const Dataset data = tiny_dataset();
  const TrainResult r = train(small_model(data.feature_dim()), data, quick_train(1));
  SceneConfig c;
  c.num_tiles = 4;
  c.pilots = 4;
  const Scene scene = build_scene(c);
  Rng rng(1);
  const auto [m, beta] = simulate_measurements(scene, schedule_for(scene), {0.5, 5.0}, 0.3, rng);
  const Prediction a = predict(r.bundle, m.y, beta);
  const Prediction b = predict(r.bundle, m.y, beta);
  EXPECT_EQ(a.position, b.position);
  EXPECT_GE(a.latency_ms, 0.0);

  c.num_tiles = 6;
  const Scene wider = build_scene(c);
  const auto [m6, beta6] = simulate_measurements(wider, schedule_for(wider), {0.5, 5.0}, 0.3, rng);
  EXPECT_THROW(predict(r.bundle, m6.y, beta6), ArtifactMismatch);
}

TEST(ConfigJson, RoundTrip) {
  ModelConfig m;
  m.hidden = 17;
  m.dense_dims = {3, 9};
  m.bidirectional = false;
  ModelConfig m2;
  apply_json(to_json(m), m2);
  EXPECT_EQ(to_json(m2), to_json(m));
  TrainConfig t;
  t.lr = 0.123;
  t.seed = 99;
  TrainConfig t2;
  apply_json(to_json(t), t2);
  EXPECT_EQ(to_json(t2), to_json(t));
  EXPECT_THROW(apply_json(Json::parse(R"({"hidden": "many"})"), m2), ConfigError);
}
