#pragma once

#include "risloc/nn/layers.hpp"

#include <cmath>
#include <limits>

namespace risloc::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments. Holds pointers into the model it was built for.
template <typename S>
class Adam {
 public:
  Adam(ParameterList<S> params, const AdamConfig& config) : params_(std::move(params)), config_(config) {
    for (Parameter<S>* p : params_) {
      m_.push_back(Matrix<S>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix<S>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  double lr() const { return config_.lr; }
  void set_lr(double lr) { config_.lr = lr; }
  long steps() const { return t_; }

  void step() {
    ++t_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    const auto step_size = static_cast<S>(config_.lr / c1);
    const auto root_c2 = static_cast<S>(std::sqrt(c2));
    const auto eps = static_cast<S>(config_.epsilon);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Parameter<S>& p = *params_[i];
      const Matrix<S>& g = p.gradient();
      m_[i] = static_cast<S>(b1) * m_[i] + static_cast<S>(1.0 - b1) * g;
      v_[i] = static_cast<S>(b2) * v_[i] + static_cast<S>(1.0 - b2) * g.cwiseAbs2();
      p.value.array() -= step_size * m_[i].array() / (v_[i].array().sqrt() / root_c2 + eps);
    }
  }

 private:
  ParameterList<S> params_;
  AdamConfig config_;
  std::vector<Matrix<S>> m_;
  std::vector<Matrix<S>> v_;
  long t_ = 0;
};

/// Multiplies the learning rate by `factor` once the monitored loss has failed
/// to improve for `patience` consecutive epochs, then restarts the count.
class PlateauScheduler {
 public:
  PlateauScheduler(double factor, int patience) : factor_(factor), patience_(patience) {}

  /// Returns the learning rate to use for the next epoch.
  double step(double loss, double lr) {
    if (loss < best_) {
      best_ = loss;
      bad_epochs_ = 0;
      return lr;
    }
    if (++bad_epochs_ >= patience_) {
      bad_epochs_ = 0;
      return lr * factor_;
    }
    return lr;
  }

  double best() const { return best_; }
  int bad_epochs() const { return bad_epochs_; }

 private:
  double factor_;
  int patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_epochs_ = 0;
};

}  // namespace risloc::nn
