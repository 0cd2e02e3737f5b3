#include "risloc/nn/train.hpp"

#include "risloc/error.hpp"
#include "risloc/random.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace risloc::nn {
namespace {

Matrix<float> gather(const Matrix<float>& m, std::span<const std::size_t> cols) {
  Matrix<float> out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(static_cast<Eigen::Index>(cols[j]));
  return out;
}

double gradient_norm(Network<float>& net) {
  double sum = 0.0;
  for (Parameter<float>* p : net.parameters()) sum += p->gradient().cast<double>().squaredNorm();
  return std::sqrt(sum);
}

std::vector<Matrix<float>> snapshot(Network<float>& net) {
  std::vector<Matrix<float>> out;
  for (Parameter<float>* p : net.parameters()) out.push_back(p->value);
  return out;
}

void restore(Network<float>& net, const std::vector<Matrix<float>>& values) {
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace

void validate(const TrainConfig& c) {
  if (!(c.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (c.batch < 1) throw ConfigError("batch size must be >= 1");
  if (c.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(c.scheduler_factor > 0.0 && c.scheduler_factor < 1.0)) throw ConfigError("scheduler factor must lie in (0, 1)");
  if (c.scheduler_patience < 1) throw ConfigError("scheduler patience must be >= 1");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0)) throw ConfigError("adam betas must lie in [0, 1)");
  if (!(c.epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
}

double evaluate_mse(const Network<float>& net, const Matrix<float>& x, const Matrix<float>& y, std::size_t batch) {
  if (x.cols() == 0) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  const auto step = static_cast<Eigen::Index>(batch);
  for (Eigen::Index start = 0; start < x.cols(); start += step) {
    const Eigen::Index count = std::min(step, x.cols() - start);
    const Matrix<float> out = net.infer(x.middleCols(start, count));
    sum += (out - y.middleCols(start, count)).cast<double>().squaredNorm();
  }
  return sum / static_cast<double>(y.size());
}

std::vector<EpochRecord> fit(Network<float>& net, const Matrix<float>& x_train, const Matrix<float>& y_train,
                             const Matrix<float>& x_val, const Matrix<float>& y_val, const TrainConfig& config,
                             const EpochCallback& on_epoch) {
  validate(config);
  if (x_train.cols() == 0 || x_train.cols() != y_train.cols() || x_val.cols() != y_val.cols()) {
    throw ConfigError("training data is empty or features and targets disagree in sample count");
  }
  Rng shuffle_rng = make_rng(config.seed, 1);
  Rng dropout_rng = make_rng(config.seed, 2);
  Adam<float> adam(net.parameters(), AdamConfig{config.lr, config.beta1, config.beta2, config.epsilon});
  PlateauScheduler scheduler(config.scheduler_factor, config.scheduler_patience);

  std::vector<std::size_t> order(static_cast<std::size_t>(x_train.cols()));
  std::iota(order.begin(), order.end(), 0);
  const bool has_val = x_val.cols() > 0;

  std::vector<EpochRecord> history;
  std::vector<Matrix<float>> best = snapshot(net);
  double best_loss = std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto batches = make_batches(order, config.batch, &shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Matrix<float> xb = gather(x_train, batches[b]);
      const Matrix<float> yb = gather(y_train, batches[b]);
      net.zero_grad();
      const Matrix<float> out = net.forward(xb, true, dropout_rng);
      auto [loss, d_out] = mse_loss(out, yb);
      net.backward(d_out);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << ", batch " << b + 1 << " (gradient norm "
            << gradient_norm(net) << ", lr " << adam.lr() << ")";
        throw NumericError(msg.str());
      }
      adam.step();
      loss_sum += loss * static_cast<double>(batches[b].size());
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = adam.lr();
    rec.train_mse = loss_sum / static_cast<double>(order.size());
    rec.val_mse = has_val ? evaluate_mse(net, x_val, y_val) : rec.train_mse;
    if (!std::isfinite(rec.val_mse)) {
      throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    if (rec.val_mse < best_loss) {
      best_loss = rec.val_mse;
      best = snapshot(net);
    }
    adam.set_lr(scheduler.step(rec.val_mse, adam.lr()));
    history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  restore(net, best);
  return history;
}

Matrix<float> normalized_features(const Dataset& data, std::span<const std::size_t> rows, const NormStats& stats) {
  if (stats.feature_dim() != data.feature_dim()) throw ArtifactMismatch("normalisation stats do not match feature size");
  Matrix<float> out(data.feature_dim(), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const auto r = static_cast<Eigen::Index>(rows[j]);
    out.col(static_cast<Eigen::Index>(j)) =
        ((data.features.row(r).transpose() - stats.feature_mean).cwiseQuotient(stats.feature_std)).cast<float>();
  }
  return out;
}

Matrix<float> normalized_targets(const Dataset& data, std::span<const std::size_t> rows, const NormStats& stats) {
  Matrix<float> out(2, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const Eigen::Vector2d t = data.targets.row(static_cast<Eigen::Index>(rows[j])).transpose();
    out.col(static_cast<Eigen::Index>(j)) = normalize_target(t, stats).cast<float>();
  }
  return out;
}

TrainResult train(const ModelConfig& model, const Dataset& data, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  if (model.input_dim != data.feature_dim()) {
    throw ArtifactMismatch("model input_dim " + std::to_string(model.input_dim) + " does not match dataset feature size " +
                           std::to_string(data.feature_dim()));
  }
  TrainResult result;
  ModelBundle& bundle = result.bundle;
  bundle.stats = fit_norm_stats(data);
  bundle.network = Network<float>(model);
  bundle.network.init(derive_seed(config.seed, 0));

  const Matrix<float> x_train = normalized_features(data, data.splits.train, bundle.stats);
  const Matrix<float> y_train = normalized_targets(data, data.splits.train, bundle.stats);
  const Matrix<float> x_val = normalized_features(data, data.splits.val, bundle.stats);
  const Matrix<float> y_val = normalized_targets(data, data.splits.val, bundle.stats);
  result.history = fit(bundle.network, x_train, y_train, x_val, y_val, config, on_epoch);

  auto best = std::min_element(result.history.begin(), result.history.end(),
                               [](const EpochRecord& a, const EpochRecord& b) { return a.val_mse < b.val_mse; });
  bundle.meta.epochs_run = static_cast<int>(result.history.size());
  bundle.meta.best_epoch = best->epoch;
  bundle.meta.best_val_loss = best->val_mse;
  bundle.meta.pilots = data.pilots;
  bundle.meta.tiles = data.tiles;
  bundle.meta.scene_fingerprint = data.scene_fingerprint;
  bundle.meta.dataset_seed = data.seed;
  bundle.meta.train_seed = config.seed;
  return result;
}

Prediction predict(const ModelBundle& bundle, const Eigen::VectorXcd& y, const ReflectionMatrix& beta) {
  const auto start = std::chrono::steady_clock::now();
  if (y.size() != bundle.meta.pilots || beta.beta.cols() != bundle.meta.tiles) {
    throw ArtifactMismatch("model was trained for T=" + std::to_string(bundle.meta.pilots) + ", K=" +
                           std::to_string(bundle.meta.tiles) + " but got T=" + std::to_string(y.size()) +
                           ", K=" + std::to_string(beta.beta.cols()));
  }
  const Eigen::VectorXd x = normalize_features(featurize_flat(y, beta), bundle.stats);
  const Matrix<float> out = bundle.network.infer(x.cast<float>());
  Prediction p;
  p.position = denormalize_target(out.col(0).cast<double>(), bundle.stats);
  p.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return p;
}

std::vector<Eigen::Vector2d> predict_features(const ModelBundle& bundle, const RowMatrixXd& features) {
  if (features.cols() != bundle.stats.feature_dim()) throw ArtifactMismatch("feature size does not match the model");
  std::vector<Eigen::Vector2d> out;
  out.reserve(static_cast<std::size_t>(features.rows()));
  constexpr Eigen::Index kChunk = 256;
  for (Eigen::Index start = 0; start < features.rows(); start += kChunk) {
    const Eigen::Index count = std::min(kChunk, features.rows() - start);
    Matrix<float> x(features.cols(), count);
    for (Eigen::Index j = 0; j < count; ++j) {
      x.col(j) = ((features.row(start + j).transpose() - bundle.stats.feature_mean)
                      .cwiseQuotient(bundle.stats.feature_std))
                     .cast<float>();
    }
    const Matrix<float> y = bundle.network.infer(x);
    for (Eigen::Index j = 0; j < count; ++j) out.push_back(denormalize_target(y.col(j).cast<double>(), bundle.stats));
  }
  return out;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,train_mse,val_mse,lr\n" << std::setprecision(10);
  for (const EpochRecord& r : history) out << r.epoch << ',' << r.train_mse << ',' << r.val_mse << ',' << r.lr << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace risloc::nn
