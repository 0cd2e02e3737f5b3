#include "risloc/dataset.hpp"

#include "risloc/binary_io.hpp"
#include "risloc/config.hpp"
#include "risloc/error.hpp"
#include "risloc/hash.hpp"
#include "risloc/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>

namespace risloc {
namespace {

double phase_of(const Complex& z) {
  if (z == Complex{}) return 0.0;
  const double a = std::arg(z);
  return a <= -std::numbers::pi ? std::numbers::pi : a;
}

Json stats_to_json(const NormStats& s) {
  return Json{{"feature_mean", std::vector<double>(s.feature_mean.data(), s.feature_mean.data() + s.feature_mean.size())},
              {"feature_std", std::vector<double>(s.feature_std.data(), s.feature_std.data() + s.feature_std.size())},
              {"target_mean", {s.target_mean.x(), s.target_mean.y()}},
              {"target_std", {s.target_std.x(), s.target_std.y()}},
              {"floored_features", s.floored_features}};
}

}  // namespace

Eigen::MatrixXd featurize(const Eigen::VectorXcd& y, const ReflectionMatrix& beta) {
  const Eigen::Index pilots = y.size();
  if (pilots == 0 || beta.beta.rows() != pilots) {
    throw ConfigError("featurize: y has " + std::to_string(pilots) + " pilots but beta has " +
                      std::to_string(beta.beta.rows()) + " rows");
  }
  const Eigen::Index tiles = beta.beta.cols();
  Eigen::MatrixXd f(2 * pilots, tiles + 1);
  for (Eigen::Index t = 0; t < pilots; ++t) {
    f(t, 0) = std::abs(y(t));
    f(pilots + t, 0) = phase_of(y(t));
    for (Eigen::Index k = 0; k < tiles; ++k) {
      const Complex b = beta.beta(t, k);
      f(t, k + 1) = std::abs(b);
      f(pilots + t, k + 1) = phase_of(b);
    }
  }
  return f;
}

Eigen::VectorXd featurize_flat(const Eigen::VectorXcd& y, const ReflectionMatrix& beta) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f = featurize(y, beta);
  return Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
}

Splits split_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x5917'17ULL));
  std::shuffle(order.begin(), order.end(), rng);
  // Nearest-integer shares; the test split takes the remainder.
  const std::size_t n_train = (n * 8 + 5) / 10;
  const std::size_t n_val = (n + 5) / 10;
  Splits s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

Dataset generate_dataset(const Scene& scene, const PhaseSchedule& schedule, std::size_t n,
                         std::uint64_t seed, unsigned threads) {
  if (n < 10) throw ConfigError("dataset needs at least 10 samples");
  Dataset d;
  d.pilots = scene.pilots();
  d.tiles = scene.num_tiles();
  d.seed = seed;
  d.scene_fingerprint = scene.fingerprint();
  d.scene_config = scene.config();
  d.schedule_seed = schedule.seed;
  d.schedule_levels = schedule.num_levels;
  const auto rows = static_cast<Eigen::Index>(n);
  d.features.resize(rows, feature_dim(d.pilots, d.tiles));
  d.targets.resize(rows, 2);
  d.phi0.resize(rows);
  d.positions.resize(rows, 3);

  const Rect& region = scene.ue_region();
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng = make_rng(seed, i);
    std::uniform_real_distribution<double> ux(region.x_min, region.x_max);
    std::uniform_real_distribution<double> uy(region.y_min, region.y_max);
    std::uniform_real_distribution<double> uphi(0.0, kTwoPi);
    const Eigen::Vector2d p{ux(rng), uy(rng)};
    const double phi0 = uphi(rng);
    const auto [m, beta] = simulate_measurements(scene, schedule, p, phi0, rng);
    const auto r = static_cast<Eigen::Index>(i);
    d.features.row(r) = featurize_flat(m.y, beta).transpose();
    d.targets.row(r) = p.transpose();
    d.phi0(r) = phi0;
    d.positions.row(r) = scene.ue_point(p).transpose();
  });
  d.splits = split_indices(n, seed);
  return d;
}

NormStats fit_norm_stats(const Dataset& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw ConfigError("cannot fit normalisation on an empty split");
  const Eigen::Index dim = data.feature_dim();
  NormStats s;
  s.feature_mean = Eigen::VectorXd::Zero(dim);
  s.feature_std = Eigen::VectorXd::Zero(dim);
  Eigen::Vector2d tmean = Eigen::Vector2d::Zero();
  const double n = static_cast<double>(rows.size());
  for (std::size_t r : rows) {
    s.feature_mean += data.features.row(static_cast<Eigen::Index>(r)).transpose();
    tmean += data.targets.row(static_cast<Eigen::Index>(r)).transpose();
  }
  s.feature_mean /= n;
  tmean /= n;
  Eigen::Vector2d tvar = Eigen::Vector2d::Zero();
  for (std::size_t r : rows) {
    const auto i = static_cast<Eigen::Index>(r);
    s.feature_std += (data.features.row(i).transpose() - s.feature_mean).cwiseAbs2();
    tvar += (data.targets.row(i).transpose() - tmean).cwiseAbs2();
  }
  s.feature_std = (s.feature_std / n).cwiseSqrt();
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (s.feature_std(j) < NormStats::kStdFloor) {
      // Take the mean from the data itself so a constant column maps to exactly 0.
      s.feature_mean(j) = data.features(static_cast<Eigen::Index>(rows.front()), j);
      s.feature_std(j) = NormStats::kStdFloor;
      ++s.floored_features;
    }
  }
  s.target_mean = tmean;
  s.target_std = (tvar / n).cwiseSqrt().cwiseMax(NormStats::kStdFloor);
  return s;
}

Eigen::VectorXd normalize_features(const Eigen::VectorXd& features, const NormStats& stats) {
  if (features.size() != stats.feature_dim()) throw ConfigError("normalize: feature dimension mismatch");
  return (features - stats.feature_mean).cwiseQuotient(stats.feature_std);
}

Eigen::Vector2d normalize_target(const Eigen::Vector2d& target, const NormStats& stats) {
  return (target - stats.target_mean).cwiseQuotient(stats.target_std);
}

Eigen::Vector2d denormalize_target(const Eigen::Vector2d& target, const NormStats& stats) {
  return target.cwiseProduct(stats.target_std) + stats.target_mean;
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> indices,
                                                   std::size_t batch_size, Rng* rng) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<std::size_t> order(indices.begin(), indices.end());
  if (rng) std::shuffle(order.begin(), order.end(), *rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

std::size_t dataset_record_bytes(int pilots, int tiles) {
  return sizeof(double) * (static_cast<std::size_t>(feature_dim(pilots, tiles)) + 2 + 1 + 3);
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".meta.json");
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open dataset for writing: " + path.string());
  Fnv1a hash;
  const std::string_view magic(kDatasetMagic, 16);
  hash.update(magic);
  out.write(magic.data(), 16);
  io::put(out, hash, kDatasetVersion);
  io::put(out, hash, static_cast<std::uint64_t>(data.size()));
  io::put(out, hash, static_cast<std::uint32_t>(data.pilots));
  io::put(out, hash, static_cast<std::uint32_t>(data.tiles));
  const auto dim = static_cast<std::size_t>(data.feature_dim());
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(data.size()); ++i) {
    io::put_array(out, hash, data.features.row(i).data(), dim);
    io::put_array(out, hash, data.targets.row(i).data(), 2);
    io::put(out, hash, data.phi0(i));
    io::put_array(out, hash, data.positions.row(i).data(), 3);
  }
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());

  const NormStats stats = fit_norm_stats(data);
  Json meta{{"format", std::string(magic)},
            {"version", kDatasetVersion},
            {"n", data.size()},
            {"pilots", data.pilots},
            {"tiles", data.tiles},
            {"seed", data.seed},
            {"scene", to_json(data.scene_config)},
            {"scene_fingerprint", hex64(data.scene_fingerprint)},
            {"schedule", {{"seed", data.schedule_seed}, {"levels", data.schedule_levels}}},
            {"split", {{"method", "shuffle-then-split"},
                       {"train", data.splits.train.size()},
                       {"val", data.splits.val.size()},
                       {"test", data.splits.test.size()}}},
            {"norm_stats", stats_to_json(stats)},
            {"content_hash", hex64(hash.digest())}};
  write_json_file(sidecar_path(path), meta);
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset: " + path.string());
  Fnv1a hash;
  char magic[16];
  in.read(magic, 16);
  if (!in || std::memcmp(magic, kDatasetMagic, 16) != 0) {
    throw FormatError("not a dataset file (bad magic): " + path.string());
  }
  hash.update(std::string_view(magic, 16));
  const auto version = io::get<std::uint32_t>(in, hash, "dataset header: " + path.string());
  if (version != kDatasetVersion) {
    throw FormatError("unsupported dataset version " + std::to_string(version) + ": " + path.string());
  }
  const auto n = io::get<std::uint64_t>(in, hash, "dataset header: " + path.string());
  const auto pilots = io::get<std::uint32_t>(in, hash, "dataset header: " + path.string());
  const auto tiles = io::get<std::uint32_t>(in, hash, "dataset header: " + path.string());

  const std::size_t expected = kDatasetHeaderBytes + n * dataset_record_bytes(static_cast<int>(pilots), static_cast<int>(tiles));
  const auto actual = std::filesystem::file_size(path);
  if (actual < expected) throw FormatError("truncated dataset: " + path.string());
  if (actual > expected) throw FormatError("trailing bytes after dataset records: " + path.string());

  Dataset d;
  d.pilots = static_cast<int>(pilots);
  d.tiles = static_cast<int>(tiles);
  const auto rows = static_cast<Eigen::Index>(n);
  const Eigen::Index dim = feature_dim(d.pilots, d.tiles);
  d.features.resize(rows, dim);
  d.targets.resize(rows, 2);
  d.phi0.resize(rows);
  d.positions.resize(rows, 3);
  std::vector<double> record(dataset_record_bytes(d.pilots, d.tiles) / sizeof(double));
  for (Eigen::Index i = 0; i < rows; ++i) {
    in.read(reinterpret_cast<char*>(record.data()), static_cast<std::streamsize>(record.size() * sizeof(double)));
    if (!in) throw FormatError("truncated dataset record: " + path.string());
    hash.update(std::as_bytes(std::span(record)));
    d.features.row(i) = Eigen::Map<const Eigen::RowVectorXd>(record.data(), dim);
    d.targets(i, 0) = record[static_cast<std::size_t>(dim)];
    d.targets(i, 1) = record[static_cast<std::size_t>(dim) + 1];
    d.phi0(i) = record[static_cast<std::size_t>(dim) + 2];
    for (int c = 0; c < 3; ++c) d.positions(i, c) = record[static_cast<std::size_t>(dim) + 3 + c];
  }

  const Json meta = read_json_file(sidecar_path(path));
  try {
    if (meta.at("content_hash").get<std::string>() != hex64(hash.digest())) {
      throw FormatError("dataset content hash mismatch: " + path.string());
    }
    d.seed = meta.at("seed").get<std::uint64_t>();
    apply_json(meta.at("scene"), d.scene_config);
    d.scene_fingerprint = std::stoull(meta.at("scene_fingerprint").get<std::string>(), nullptr, 16);
    d.schedule_seed = meta.at("schedule").at("seed").get<std::uint64_t>();
    d.schedule_levels = meta.at("schedule").at("levels").get<int>();
  } catch (const Json::exception& e) {
    throw FormatError("dataset sidecar incomplete: " + std::string(e.what()));
  }
  d.splits = split_indices(d.size(), d.seed);
  return d;
}

}  // namespace risloc
