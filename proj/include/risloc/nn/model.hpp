#pragma once

#include "risloc/nn/layers.hpp"
#include "risloc/nn/lstm.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace risloc::nn {

/// Flatten -> (Bi)LSTM -> dropout -> [Dense -> ReLU]* -> Dense (linear).
struct ModelConfig {
  Eigen::Index input_dim = 6464;  // 2 T (K + 1)
  Eigen::Index hidden = 500;
  double dropout = 0.4;
  std::vector<Eigen::Index> dense_dims{2048, 512, 64};
  Eigen::Index output_dim = 2;
  bool bidirectional = true;
  // The flattened input is fed as this many equal time steps (1: a single step).
  Eigen::Index sequence_steps = 1;
};

void validate(const ModelConfig& config);

/// Closed-form trainable parameter count (one bias vector per LSTM gate block).
std::size_t parameter_count(const ModelConfig& config);

template <typename S>
class Network {
 public:
  Network() = default;
  explicit Network(const ModelConfig& config) : config_(config), dropout_(config.dropout) {
    validate(config);
    lstm_ = BiLstm<S>(config.input_dim, config.hidden, config.sequence_steps, config.bidirectional);
    Eigen::Index width = lstm_.outputs();
    for (std::size_t l = 0; l < config.dense_dims.size(); ++l) {
      dense_.emplace_back(width, config.dense_dims[l], "fc" + std::to_string(l + 1));
      width = config.dense_dims[l];
    }
    dense_.emplace_back(width, config.output_dim, "fc" + std::to_string(config.dense_dims.size() + 1));
    relu_.resize(config.dense_dims.size());
  }

  const ModelConfig& config() const { return config_; }

  void init(std::uint64_t seed) {
    Rng rng(seed);
    lstm_.init(rng);
    for (auto& d : dense_) d.init(rng);
  }

  /// Eval-mode forward pass; keeps no activations.
  Matrix<S> infer(const Matrix<S>& x) const {
    check_rows(x.rows(), config_.input_dim, "network");
    Matrix<S> a = lstm_.infer(x);
    for (std::size_t l = 0; l + 1 < dense_.size(); ++l) a = Relu<S>::infer(dense_[l].infer(a));
    return dense_.back().infer(a);
  }

  /// Training-capable forward pass; dropout is active only when `training`.
  Matrix<S> forward(const Matrix<S>& x, bool training, Rng& rng) {
    check_rows(x.rows(), config_.input_dim, "network");
    Matrix<S> a = dropout_.forward(lstm_.forward(x), training, rng);
    for (std::size_t l = 0; l + 1 < dense_.size(); ++l) a = relu_[l].forward(dense_[l].forward(a));
    return dense_.back().forward(a);
  }

  /// Propagates d(loss)/d(output) and accumulates parameter gradients.
  Matrix<S> backward(const Matrix<S>& d_out) {
    Matrix<S> g = dense_.back().backward(d_out);
    for (std::size_t l = dense_.size() - 1; l-- > 0;) g = dense_[l].backward(relu_[l].backward(g));
    return lstm_.backward(dropout_.backward(g));
  }

  ParameterList<S> parameters() {
    ParameterList<S> out = lstm_.parameters();
    for (auto& d : dense_) {
      for (Parameter<S>* p : d.parameters()) out.push_back(p);
    }
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Parameter<S>* p : const_cast<Network*>(this)->parameters()) n += static_cast<std::size_t>(p->size());
    return n;
  }

  void zero_grad() {
    for (Parameter<S>* p : parameters()) p->zero_grad();
  }

  /// Copy of the parameter values in another scalar type.
  template <typename T>
  Network<T> cast() const {
    Network<T> out(config_);
    auto src = const_cast<Network*>(this)->parameters();
    auto dst = out.parameters();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value.template cast<T>();
    return out;
  }

  BiLstm<S>& lstm() { return lstm_; }
  std::vector<Dense<S>>& dense() { return dense_; }

 private:
  ModelConfig config_;
  BiLstm<S> lstm_;
  Dropout<S> dropout_;
  std::vector<Dense<S>> dense_;
  std::vector<Relu<S>> relu_;
};

}  // namespace risloc::nn
