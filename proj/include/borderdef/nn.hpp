// Small fully connected networks with manual backpropagation, and Adam.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "borderdef/engine.hpp"

namespace borderdef {

/// Shape of a tanh MLP with a linear output layer. Parameters live outside
/// the shape in a flat vector laid out layer by layer as W (out x in,
/// row-major) followed by b (out).
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<std::size_t> sizes);

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t param_count() const { return param_count_; }

  /// Gaussian init scaled by 1/sqrt(fan_in); the last layer is further
  /// scaled by `output_gain`. Biases start at zero.
  std::vector<double> init(Rng& rng, double output_gain = 1.0) const;

  struct Workspace {
    /// acts[0] is the input, acts[l] the output of layer l.
    std::vector<std::vector<double>> acts;
  };

  void forward(std::span<const double> params, std::span<const double> x, Workspace& ws) const;
  std::span<const double> output(const Workspace& ws) const { return ws.acts.back(); }

  /// Accumulates dLoss/dparams into `grad` given dLoss/doutput.
  void backward(std::span<const double> params, const Workspace& ws, std::span<const double> dout,
                std::span<double> grad) const;

 private:
  std::vector<std::size_t> sizes_;
  std::size_t param_count_ = 0;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(std::span<double> params, std::span<const double> grad);

  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<double> m;
  std::vector<double> v;
  long long t = 0;
};

/// Rescales `grad` so its L2 norm is at most `max_norm`; returns the
/// original norm.
double clip_grad_norm(std::span<double> grad, double max_norm);

}  // namespace borderdef
