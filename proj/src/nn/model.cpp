#include "risloc/nn/model.hpp"

#include "risloc/error.hpp"

namespace risloc::nn {

void validate(const ModelConfig& c) {
  if (c.input_dim < 1 || c.hidden < 1 || c.output_dim < 1) throw ConfigError("model dims must be >= 1");
  for (Eigen::Index d : c.dense_dims) {
    if (d < 1) throw ConfigError("dense layer widths must be >= 1");
  }
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (c.sequence_steps < 1 || c.input_dim % c.sequence_steps != 0) {
    throw ConfigError("input_dim must be divisible by sequence_steps");
  }
}

std::size_t parameter_count(const ModelConfig& c) {
  validate(c);
  const auto step_dim = static_cast<std::size_t>(c.input_dim / c.sequence_steps);
  const auto h = static_cast<std::size_t>(c.hidden);
  const std::size_t directions = c.bidirectional ? 2 : 1;
  std::size_t n = directions * 4 * ((step_dim + h) * h + h);
  std::size_t width = directions * h;
  for (Eigen::Index d : c.dense_dims) {
    n += width * static_cast<std::size_t>(d) + static_cast<std::size_t>(d);
    width = static_cast<std::size_t>(d);
  }
  n += width * static_cast<std::size_t>(c.output_dim) + static_cast<std::size_t>(c.output_dim);
  return n;
}

}  // namespace risloc::nn
