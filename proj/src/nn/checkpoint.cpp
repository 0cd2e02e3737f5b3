#include "risloc/binary_io.hpp"
#include "risloc/config.hpp"
#include "risloc/error.hpp"
#include "risloc/nn/train.hpp"

#include <cstring>
#include <fstream>

namespace risloc::nn {

Json to_json(const ModelConfig& c) {
  return Json{{"input_dim", c.input_dim},   {"hidden", c.hidden},         {"dropout", c.dropout},
              {"dense_dims", c.dense_dims}, {"output_dim", c.output_dim}, {"bidirectional", c.bidirectional},
              {"sequence_steps", c.sequence_steps}};
}

void apply_json(const Json& j, ModelConfig& c) {
  try {
    c.input_dim = j.value("input_dim", c.input_dim);
    c.hidden = j.value("hidden", c.hidden);
    c.dropout = j.value("dropout", c.dropout);
    c.dense_dims = j.value("dense_dims", c.dense_dims);
    c.output_dim = j.value("output_dim", c.output_dim);
    c.bidirectional = j.value("bidirectional", c.bidirectional);
    c.sequence_steps = j.value("sequence_steps", c.sequence_steps);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("invalid model config: ") + e.what());
  }
}

Json to_json(const TrainConfig& c) {
  return Json{{"lr", c.lr},
              {"batch", c.batch},
              {"epochs", c.epochs},
              {"scheduler_factor", c.scheduler_factor},
              {"scheduler_patience", c.scheduler_patience},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"epsilon", c.epsilon},
              {"seed", c.seed}};
}

void apply_json(const Json& j, TrainConfig& c) {
  try {
    c.lr = j.value("lr", c.lr);
    c.batch = j.value("batch", c.batch);
    c.epochs = j.value("epochs", c.epochs);
    c.scheduler_factor = j.value("scheduler_factor", c.scheduler_factor);
    c.scheduler_patience = j.value("scheduler_patience", c.scheduler_patience);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.seed = j.value("seed", c.seed);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("invalid training config: ") + e.what());
  }
}

namespace {

Json meta_to_json(const TrainingMeta& m) {
  return Json{{"epochs_run", m.epochs_run},
              {"best_epoch", m.best_epoch},
              {"best_val_loss", m.best_val_loss},
              {"pilots", m.pilots},
              {"tiles", m.tiles},
              {"scene_fingerprint", hex64(m.scene_fingerprint)},
              {"dataset_seed", m.dataset_seed},
              {"train_seed", m.train_seed}};
}

TrainingMeta meta_from_json(const Json& j) {
  TrainingMeta m;
  m.epochs_run = j.at("epochs_run").get<int>();
  m.best_epoch = j.at("best_epoch").get<int>();
  m.best_val_loss = j.at("best_val_loss").get<double>();
  m.pilots = j.at("pilots").get<int>();
  m.tiles = j.at("tiles").get<int>();
  m.scene_fingerprint = std::stoull(j.at("scene_fingerprint").get<std::string>(), nullptr, 16);
  m.dataset_seed = j.at("dataset_seed").get<std::uint64_t>();
  m.train_seed = j.at("train_seed").get<std::uint64_t>();
  return m;
}

}  // namespace

void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  Fnv1a hash;
  io::put_array(out, hash, kCheckpointMagic, 16);
  io::put(out, hash, kCheckpointVersion);

  const std::string header = Json{{"model", to_json(bundle.config())}, {"meta", meta_to_json(bundle.meta)}}.dump();
  io::put(out, hash, static_cast<std::uint64_t>(header.size()));
  io::put_array(out, hash, header.data(), header.size());

  const NormStats& s = bundle.stats;
  io::put(out, hash, static_cast<std::uint64_t>(s.feature_dim()));
  io::put_array(out, hash, s.feature_mean.data(), static_cast<std::size_t>(s.feature_dim()));
  io::put_array(out, hash, s.feature_std.data(), static_cast<std::size_t>(s.feature_dim()));
  io::put_array(out, hash, s.target_mean.data(), 2);
  io::put_array(out, hash, s.target_std.data(), 2);
  io::put(out, hash, static_cast<std::uint64_t>(s.floored_features));

  auto& net = const_cast<Network<float>&>(bundle.network);
  io::put(out, hash, static_cast<std::uint64_t>(net.parameter_count()));
  for (const Parameter<float>* p : net.parameters()) {
    io::put_array(out, hash, p->value.data(), static_cast<std::size_t>(p->value.size()));
  }
  const std::uint64_t digest = hash.digest();
  out.write(reinterpret_cast<const char*>(&digest), sizeof digest);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  const std::string what = "checkpoint: " + path.string();
  Fnv1a hash;
  char magic[16];
  io::get_array(in, hash, magic, 16, what);
  if (std::memcmp(magic, kCheckpointMagic, 16) != 0) throw FormatError("not a checkpoint (bad magic): " + path.string());
  const auto version = io::get<std::uint32_t>(in, hash, what);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + ": " + path.string());
  }

  const auto header_len = io::get<std::uint64_t>(in, hash, what);
  if (header_len > std::filesystem::file_size(path)) throw FormatError("corrupt " + what);
  std::string header(header_len, '\0');
  io::get_array(in, hash, header.data(), header.size(), what);

  ModelBundle bundle;
  ModelConfig config;
  try {
    const Json j = Json::parse(header);
    apply_json(j.at("model"), config);
    bundle.meta = meta_from_json(j.at("meta"));
  } catch (const Json::exception& e) {
    throw FormatError("corrupt checkpoint header (" + std::string(e.what()) + "): " + path.string());
  }

  NormStats& s = bundle.stats;
  const auto dim = io::get<std::uint64_t>(in, hash, what);
  if (dim != static_cast<std::uint64_t>(config.input_dim)) throw FormatError("normalisation block size mismatch: " + path.string());
  s.feature_mean.resize(static_cast<Eigen::Index>(dim));
  s.feature_std.resize(static_cast<Eigen::Index>(dim));
  io::get_array(in, hash, s.feature_mean.data(), dim, what);
  io::get_array(in, hash, s.feature_std.data(), dim, what);
  io::get_array(in, hash, s.target_mean.data(), 2, what);
  io::get_array(in, hash, s.target_std.data(), 2, what);
  s.floored_features = static_cast<std::size_t>(io::get<std::uint64_t>(in, hash, what));

  bundle.network = Network<float>(config);
  const auto count = io::get<std::uint64_t>(in, hash, what);
  if (count != bundle.network.parameter_count()) {
    throw FormatError("parameter count " + std::to_string(count) + " does not match the stored config: " + path.string());
  }
  for (Parameter<float>* p : bundle.network.parameters()) {
    io::get_array(in, hash, p->value.data(), static_cast<std::size_t>(p->value.size()), what);
  }
  std::uint64_t digest = 0;
  in.read(reinterpret_cast<char*>(&digest), sizeof digest);
  if (!in) throw FormatError("truncated " + what);
  if (digest != hash.digest()) throw FormatError("checkpoint content hash mismatch: " + path.string());
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after checkpoint: " + path.string());
  for (Parameter<float>* p : bundle.network.parameters()) {
    if (!p->value.allFinite()) throw NumericError("non-finite parameter " + p->name + " in " + path.string());
  }
  return bundle;
}

}  // namespace risloc::nn
