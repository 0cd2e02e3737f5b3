#pragma once

#include "risloc/channel.hpp"
#include "risloc/config.hpp"
#include "risloc/dataset.hpp"
#include "risloc/nn/model.hpp"
#include "risloc/nn/optim.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

namespace risloc::nn {

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch = 32;
  int epochs = 25;
  double scheduler_factor = 0.8;
  int scheduler_patience = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_mse = 0.0;
  double val_mse = 0.0;
  double lr = 0.0;  // learning rate used during this epoch
};

struct TrainingMeta {
  int epochs_run = 0;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  int pilots = 0;
  int tiles = 0;
  std::uint64_t scene_fingerprint = 0;
  std::uint64_t dataset_seed = 0;
  std::uint64_t train_seed = 0;
};

/// Everything inference needs: the network (float32), its input/target
/// normalisation and how it was trained.
struct ModelBundle {
  Network<float> network;
  NormStats stats;
  TrainingMeta meta;

  const ModelConfig& config() const { return network.config(); }
};

struct TrainResult {
  ModelBundle bundle;
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Core loop on already-normalised, feature-major data (one column per sample).
/// On return `net` holds the parameters of the epoch with the lowest validation MSE.
/// Throws NumericError (naming epoch, batch and gradient norm) on a non-finite loss.
std::vector<EpochRecord> fit(Network<float>& net, const Matrix<float>& x_train, const Matrix<float>& y_train,
                             const Matrix<float>& x_val, const Matrix<float>& y_val, const TrainConfig& config,
                             const EpochCallback& on_epoch = {});

/// Fits normalisation on the training split, builds and initialises the model, trains it.
TrainResult train(const ModelConfig& model, const Dataset& data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Normalised, feature-major float copies of the given dataset rows.
Matrix<float> normalized_features(const Dataset& data, std::span<const std::size_t> rows, const NormStats& stats);
Matrix<float> normalized_targets(const Dataset& data, std::span<const std::size_t> rows, const NormStats& stats);

/// Mean squared error of `net` in eval mode, in normalised target units.
double evaluate_mse(const Network<float>& net, const Matrix<float>& x, const Matrix<float>& y,
                    std::size_t batch = 256);

struct Prediction {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double latency_ms = 0.0;
};

/// Featurize, normalise, eval-mode forward, denormalise.
/// Throws ArtifactMismatch when (T, K) differ from what the bundle was trained on.
Prediction predict(const ModelBundle& bundle, const Eigen::VectorXcd& y, const ReflectionMatrix& beta);

/// Batched prediction from raw (un-normalised) feature rows.
std::vector<Eigen::Vector2d> predict_features(const ModelBundle& bundle, const RowMatrixXd& features);

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

/// Binary checkpoint (little-endian): 16-byte magic "RISLOC-CHECKPT-1", u32 version,
/// u64 length + JSON block (model config, training metadata), NormStats block
/// (u64 D, D mean, D std, target mean and std as float64), u64 parameter count,
/// float32 parameter blob in layer order, trailing u64 FNV-1a hash of everything before it.
inline constexpr char kCheckpointMagic[] = "RISLOC-CHECKPT-1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_checkpoint(const std::filesystem::path& path);

Json to_json(const ModelConfig& config);
void apply_json(const Json& j, ModelConfig& config);
Json to_json(const TrainConfig& config);
void apply_json(const Json& j, TrainConfig& config);

}  // namespace risloc::nn
