#pragma once

#include "risloc/nn/layers.hpp"

#include <vector>

namespace risloc::nn {

/// Gate weights stacked as [input; forget; cell; output] blocks of `hidden` rows.
template <typename S>
struct LstmParams {
  Parameter<S> input_weight;      // 4H x D
  Parameter<S> recurrent_weight;  // 4H x H
  Parameter<S> bias;              // 4H x 1

  LstmParams() = default;
  LstmParams(Eigen::Index inputs, Eigen::Index hidden, const std::string& name)
      : input_weight(name + ".input_weight", 4 * hidden, inputs),
        recurrent_weight(name + ".recurrent_weight", 4 * hidden, hidden),
        bias(name + ".bias", 4 * hidden, 1) {}

  Eigen::Index inputs() const { return input_weight.value.cols(); }
  Eigen::Index hidden() const { return recurrent_weight.value.cols(); }
  ParameterList<S> parameters() { return {&input_weight, &recurrent_weight, &bias}; }
};

/// Values saved by the forward pass of one step.
template <typename S>
struct LstmStepCache {
  Matrix<S> x, h_prev, c_prev;
  Matrix<S> i, f, g, o;
  Matrix<S> c, tanh_c;
};

template <typename S>
struct LstmState {
  Matrix<S> h;
  Matrix<S> c;
};

template <typename S>
struct LstmStepGrads {
  Matrix<S> dx, dh_prev, dc_prev;
};

template <typename S>
Matrix<S> logistic(const Matrix<S>& z) {
  return (S(1) + (-z.array()).exp()).inverse().matrix();
}

/// One LSTM step. A zero-row `h_prev` (or all zeros) skips the recurrent product.
template <typename S>
LstmState<S> lstm_cell(const Matrix<S>& x, const Matrix<S>& h_prev, const Matrix<S>& c_prev,
                       const LstmParams<S>& p, LstmStepCache<S>* cache = nullptr) {
  const Eigen::Index hidden = p.hidden();
  check_rows(x.rows(), p.inputs(), "lstm cell input");
  if (h_prev.rows() != hidden || c_prev.rows() != hidden || h_prev.cols() != x.cols() ||
      c_prev.cols() != x.cols()) {
    throw ConfigError("lstm cell: state shape does not match hidden size / batch");
  }
  Matrix<S> z = p.input_weight.value * x;
  z.colwise() += p.bias.value.col(0);
  if (!h_prev.isZero(0)) z.noalias() += p.recurrent_weight.value * h_prev;

  Matrix<S> i = logistic<S>(z.topRows(hidden));
  Matrix<S> f = logistic<S>(z.middleRows(hidden, hidden));
  Matrix<S> g = z.middleRows(2 * hidden, hidden).array().tanh().matrix();
  Matrix<S> o = logistic<S>(z.bottomRows(hidden));

  LstmState<S> out;
  out.c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
  Matrix<S> tanh_c = out.c.array().tanh().matrix();
  out.h = o.cwiseProduct(tanh_c);
  if (cache) {
    cache->x = x;
    cache->h_prev = h_prev;
    cache->c_prev = c_prev;
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->g = std::move(g);
    cache->o = std::move(o);
    cache->c = out.c;
    cache->tanh_c = std::move(tanh_c);
  }
  return out;
}

/// Reverse-mode step: accumulates parameter gradients and returns input/state gradients.
template <typename S>
LstmStepGrads<S> lstm_cell_backward(const LstmStepCache<S>& k, const Matrix<S>& dh,
                                    const Matrix<S>& dc_next, LstmParams<S>& p) {
  const Eigen::Index hidden = p.hidden();
  const auto one = S(1);
  const Matrix<S> d_o = dh.cwiseProduct(k.tanh_c);
  const Matrix<S> dc =
      dc_next + dh.cwiseProduct(k.o).cwiseProduct((one - k.tanh_c.array().square()).matrix());
  const Matrix<S> d_i = dc.cwiseProduct(k.g);
  const Matrix<S> d_f = dc.cwiseProduct(k.c_prev);
  const Matrix<S> d_g = dc.cwiseProduct(k.i);

  Matrix<S> dz(4 * hidden, dh.cols());
  dz.topRows(hidden) = d_i.cwiseProduct((k.i.array() * (one - k.i.array())).matrix());
  dz.middleRows(hidden, hidden) = d_f.cwiseProduct((k.f.array() * (one - k.f.array())).matrix());
  dz.middleRows(2 * hidden, hidden) = d_g.cwiseProduct((one - k.g.array().square()).matrix());
  dz.bottomRows(hidden) = d_o.cwiseProduct((k.o.array() * (one - k.o.array())).matrix());

  p.input_weight.gradient().noalias() += dz * k.x.transpose();
  p.recurrent_weight.gradient().noalias() += dz * k.h_prev.transpose();
  p.bias.gradient() += dz.rowwise().sum();

  LstmStepGrads<S> g;
  g.dx = p.input_weight.value.transpose() * dz;
  g.dh_prev = p.recurrent_weight.value.transpose() * dz;
  g.dc_prev = dc.cwiseProduct(k.f);
  return g;
}

/// Unrolled single-direction LSTM over a sequence; returns the final hidden state.
template <typename S>
class Lstm {
 public:
  Lstm() = default;
  Lstm(Eigen::Index inputs, Eigen::Index hidden, bool reverse, const std::string& name)
      : params(inputs, hidden, name), reverse_(reverse) {}

  Eigen::Index hidden() const { return params.hidden(); }
  bool reverse() const { return reverse_; }

  void init(Rng& rng) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(params.inputs() + params.hidden()));
    for (Parameter<S>* p : params.parameters()) p->init_uniform(limit, rng);
  }

  Matrix<S> infer(const std::vector<Matrix<S>>& steps) const { return run(steps, nullptr); }

  Matrix<S> forward(const std::vector<Matrix<S>>& steps) { return run(steps, &caches_); }

  /// Gradient of the final hidden state; returns per-step input gradients in input order.
  std::vector<Matrix<S>> backward(const Matrix<S>& d_final) {
    const std::size_t n = caches_.size();
    std::vector<Matrix<S>> dx(n);
    Matrix<S> dh = d_final;
    Matrix<S> dc = Matrix<S>::Zero(d_final.rows(), d_final.cols());
    for (std::size_t s = n; s-- > 0;) {
      LstmStepGrads<S> g = lstm_cell_backward(caches_[s], dh, dc, params);
      dx[reverse_ ? n - 1 - s : s] = std::move(g.dx);
      dh = std::move(g.dh_prev);
      dc = std::move(g.dc_prev);
    }
    return dx;
  }

  ParameterList<S> parameters() { return params.parameters(); }

  LstmParams<S> params;

 private:
  Matrix<S> run(const std::vector<Matrix<S>>& steps, std::vector<LstmStepCache<S>>* caches) const {
    if (steps.empty()) throw ConfigError("lstm: empty sequence");
    const Eigen::Index batch = steps.front().cols();
    LstmState<S> state{Matrix<S>::Zero(hidden(), batch), Matrix<S>::Zero(hidden(), batch)};
    if (caches) caches->assign(steps.size(), {});
    for (std::size_t s = 0; s < steps.size(); ++s) {
      const Matrix<S>& x = steps[reverse_ ? steps.size() - 1 - s : s];
      state = lstm_cell(x, state.h, state.c, params, caches ? &(*caches)[s] : nullptr);
    }
    return state.h;
  }

  bool reverse_ = false;
  std::vector<LstmStepCache<S>> caches_;
};

/// Splits a flattened feature column into `steps` equal chunks, one per time step.
template <typename S>
std::vector<Matrix<S>> split_steps(const Matrix<S>& x, Eigen::Index steps) {
  if (steps < 1 || x.rows() % steps != 0) throw ConfigError("input length not divisible by sequence steps");
  const Eigen::Index chunk = x.rows() / steps;
  std::vector<Matrix<S>> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (Eigen::Index s = 0; s < steps; ++s) out.emplace_back(x.middleRows(s * chunk, chunk));
  return out;
}

/// Forward and (optionally) backward LSTMs; output is their final hidden states stacked.
template <typename S>
class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(Eigen::Index inputs, Eigen::Index hidden, Eigen::Index steps, bool bidirectional)
      : forward_dir(inputs / steps, hidden, false, "lstm.forward"),
        backward_dir(bidirectional ? Lstm<S>(inputs / steps, hidden, true, "lstm.backward") : Lstm<S>()),
        steps_(steps),
        bidirectional_(bidirectional) {
    if (steps < 1 || inputs % steps != 0) throw ConfigError("lstm input not divisible by sequence steps");
  }

  Eigen::Index outputs() const { return forward_dir.hidden() * (bidirectional_ ? 2 : 1); }
  Eigen::Index steps() const { return steps_; }
  bool bidirectional() const { return bidirectional_; }

  void init(Rng& rng) {
    forward_dir.init(rng);
    if (bidirectional_) backward_dir.init(rng);
  }

  Matrix<S> infer(const Matrix<S>& x) const {
    const auto seq = split_steps(x, steps_);
    if (!bidirectional_) return forward_dir.infer(seq);
    Matrix<S> out(outputs(), x.cols());
    out.topRows(forward_dir.hidden()) = forward_dir.infer(seq);
    out.bottomRows(backward_dir.hidden()) = backward_dir.infer(seq);
    return out;
  }

  Matrix<S> forward(const Matrix<S>& x) {
    const auto seq = split_steps(x, steps_);
    if (!bidirectional_) return forward_dir.forward(seq);
    Matrix<S> out(outputs(), x.cols());
    out.topRows(forward_dir.hidden()) = forward_dir.forward(seq);
    out.bottomRows(backward_dir.hidden()) = backward_dir.forward(seq);
    return out;
  }

  Matrix<S> backward(const Matrix<S>& dy) {
    const Eigen::Index h = forward_dir.hidden();
    const auto dxf = forward_dir.backward(dy.topRows(h));
    const Eigen::Index chunk = dxf.front().rows();
    Matrix<S> dx(chunk * steps_, dy.cols());
    for (Eigen::Index s = 0; s < steps_; ++s) dx.middleRows(s * chunk, chunk) = dxf[static_cast<std::size_t>(s)];
    if (bidirectional_) {
      const auto dxb = backward_dir.backward(dy.bottomRows(h));
      for (Eigen::Index s = 0; s < steps_; ++s) dx.middleRows(s * chunk, chunk) += dxb[static_cast<std::size_t>(s)];
    }
    return dx;
  }

  ParameterList<S> parameters() {
    ParameterList<S> out = forward_dir.parameters();
    if (bidirectional_) {
      for (Parameter<S>* p : backward_dir.parameters()) out.push_back(p);
    }
    return out;
  }

  Lstm<S> forward_dir;
  Lstm<S> backward_dir;

 private:
  Eigen::Index steps_ = 1;
  bool bidirectional_ = true;
};

}  // namespace risloc::nn
