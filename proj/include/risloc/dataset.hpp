#pragma once

#include "risloc/channel.hpp"
#include "risloc/random.hpp"
#include "risloc/scene.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace risloc {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-feature and per-target standardisation fitted on the training split.
struct NormStats {
  static constexpr double kStdFloor = 1e-12;

  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_std;
  Eigen::Vector2d target_mean = Eigen::Vector2d::Zero();
  Eigen::Vector2d target_std = Eigen::Vector2d::Ones();
  std::size_t floored_features = 0;  // columns whose std hit the floor

  Eigen::Index feature_dim() const { return feature_mean.size(); }
};

struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Fingerprint samples in flattened form: row i holds the 2T x (K+1) feature
/// tensor of sample i in row-major order.
struct Dataset {
  int pilots = 0;
  int tiles = 0;
  RowMatrixXd features;                                      // n x 2T(K+1)
  Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> targets;  // (x, y)
  Eigen::VectorXd phi0;
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> positions;  // (x, y, z_ue)
  Splits splits;
  std::uint64_t seed = 0;
  std::uint64_t scene_fingerprint = 0;
  SceneConfig scene_config;
  std::uint64_t schedule_seed = 0;
  int schedule_levels = 0;

  std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
  Eigen::Index feature_dim() const { return features.cols(); }
};

inline Eigen::Index feature_dim(int pilots, int tiles) { return 2LL * pilots * (tiles + 1); }

/// [|y| |beta|] stacked over [arg y | arg beta]; phases in (-pi, pi], arg(0) = 0.
/// Throws ConfigError on shape mismatch.
Eigen::MatrixXd featurize(const Eigen::VectorXcd& y, const ReflectionMatrix& beta);

/// Flattened (row-major) featurize.
Eigen::VectorXd featurize_flat(const Eigen::VectorXcd& y, const ReflectionMatrix& beta);

/// 80/10/10 split after a seeded shuffle.
Splits split_indices(std::size_t n, std::uint64_t seed);

/// Uniform positions over the UE region and uniform phi0, one generator per sample.
Dataset generate_dataset(const Scene& scene, const PhaseSchedule& schedule, std::size_t n,
                         std::uint64_t seed, unsigned threads = 1);

NormStats fit_norm_stats(const Dataset& data, std::span<const std::size_t> rows);
inline NormStats fit_norm_stats(const Dataset& data) { return fit_norm_stats(data, data.splits.train); }

Eigen::VectorXd normalize_features(const Eigen::VectorXd& features, const NormStats& stats);
Eigen::Vector2d normalize_target(const Eigen::Vector2d& target, const NormStats& stats);
Eigen::Vector2d denormalize_target(const Eigen::Vector2d& target, const NormStats& stats);

/// Splits `indices` into consecutive batches of `batch_size` (last may be short),
/// after shuffling with `rng` when given.
std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> indices,
                                                   std::size_t batch_size, Rng* rng = nullptr);

/// Binary layout (little-endian): 16-byte magic "RISLOC-DATASET-1", u32 version,
/// u64 n, u32 T, u32 K, then n records of float64: features, target (2), phi0,
/// truth position (3). Sidecar `<path>.meta.json` carries the scene config,
/// schedule seed, splits, norm stats and a content hash.
inline constexpr char kDatasetMagic[] = "RISLOC-DATASET-1";
inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 16 + 4 + 8 + 4 + 4;

std::size_t dataset_record_bytes(int pilots, int tiles);
std::filesystem::path sidecar_path(const std::filesystem::path& path);

void save_dataset(const Dataset& data, const std::filesystem::path& path);

/// Throws FormatError on bad magic, version, truncation or hash mismatch; IoError when unreadable.
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace risloc
