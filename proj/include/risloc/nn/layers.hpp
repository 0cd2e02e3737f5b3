#pragma once

#include "risloc/error.hpp"
#include "risloc/random.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace risloc::nn {

// Activations are laid out feature-major: one column per sample.
template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// Trainable tensor with its accumulated gradient. The gradient is allocated on
/// first use so inference-only models carry no gradient storage.
template <typename S>
struct Parameter {
  std::string name;
  Matrix<S> value;
  Matrix<S> grad;

  Parameter() = default;
  Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Matrix<S>::Zero(rows, cols)) {}

  Eigen::Index size() const { return value.size(); }

  Matrix<S>& gradient() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
      grad = Matrix<S>::Zero(value.rows(), value.cols());
    }
    return grad;
  }
  void zero_grad() {
    if (grad.size() != 0) grad.setZero();
  }
  void init_uniform(double limit, Rng& rng) {
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index j = 0; j < value.cols(); ++j) {
      for (Eigen::Index i = 0; i < value.rows(); ++i) value(i, j) = static_cast<S>(u(rng));
    }
  }
};

template <typename S>
using ParameterList = std::vector<Parameter<S>*>;

inline void check_rows(Eigen::Index got, Eigen::Index want, const char* where) {
  if (got != want) {
    throw ConfigError(std::string(where) + ": expected " + std::to_string(want) + " input rows, got " +
                      std::to_string(got));
  }
}

/// Fully connected layer y = W x + b.
template <typename S>
class Dense {
 public:
  Dense() = default;
  Dense(Eigen::Index inputs, Eigen::Index outputs, const std::string& name)
      : weight(name + ".weight", outputs, inputs), bias(name + ".bias", outputs, 1) {}

  Eigen::Index inputs() const { return weight.value.cols(); }
  Eigen::Index outputs() const { return weight.value.rows(); }

  void init(Rng& rng) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(inputs()));
    weight.init_uniform(limit, rng);
    bias.init_uniform(limit, rng);
  }

  Matrix<S> infer(const Matrix<S>& x) const {
    check_rows(x.rows(), inputs(), "dense");
    Matrix<S> y = weight.value * x;
    y.colwise() += bias.value.col(0);
    return y;
  }

  Matrix<S> forward(const Matrix<S>& x) {
    input_ = x;
    return infer(x);
  }

  Matrix<S> backward(const Matrix<S>& dy) {
    weight.gradient().noalias() += dy * input_.transpose();
    bias.gradient() += dy.rowwise().sum();
    return weight.value.transpose() * dy;
  }

  ParameterList<S> parameters() { return {&weight, &bias}; }

  Parameter<S> weight;
  Parameter<S> bias;

 private:
  Matrix<S> input_;
};

template <typename S>
class Relu {
 public:
  static Matrix<S> infer(const Matrix<S>& x) { return x.cwiseMax(S(0)); }

  Matrix<S> forward(const Matrix<S>& x) {
    mask_ = (x.array() > S(0)).template cast<S>();
    return x.cwiseMax(S(0));
  }
  Matrix<S> backward(const Matrix<S>& dy) const { return dy.cwiseProduct(mask_); }

 private:
  Matrix<S> mask_;
};

/// Inverted dropout: kept units are scaled by 1 / (1 - p) so eval mode is the identity.
template <typename S>
class Dropout {
 public:
  explicit Dropout(double p = 0.0) : p_(p) {
    if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  }

  double rate() const { return p_; }

  Matrix<S> forward(const Matrix<S>& x, bool training, Rng& rng) {
    if (!training || p_ == 0.0) {
      mask_ = Matrix<S>::Ones(x.rows(), x.cols());
      return x;
    }
    std::bernoulli_distribution keep(1.0 - p_);
    const S scale = static_cast<S>(1.0 / (1.0 - p_));
    mask_.resize(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      for (Eigen::Index i = 0; i < x.rows(); ++i) mask_(i, j) = keep(rng) ? scale : S(0);
    }
    return x.cwiseProduct(mask_);
  }
  Matrix<S> backward(const Matrix<S>& dy) const { return dy.cwiseProduct(mask_); }

 private:
  double p_;
  Matrix<S> mask_;
};

/// Mean squared error over every element, with its gradient w.r.t. the prediction.
template <typename S>
std::pair<double, Matrix<S>> mse_loss(const Matrix<S>& prediction, const Matrix<S>& target) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols()) {
    throw ConfigError("mse: prediction and target shapes differ");
  }
  const Matrix<S> diff = prediction - target;
  const double n = static_cast<double>(diff.size());
  const double loss = static_cast<double>(diff.squaredNorm()) / n;
  return {loss, diff * static_cast<S>(2.0 / n)};
}

}  // namespace risloc::nn
