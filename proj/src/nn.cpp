#include "borderdef/nn.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace borderdef {

Mlp::Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output sizes");
  for (std::size_t l = 1; l < sizes_.size(); ++l) param_count_ += sizes_[l] * sizes_[l - 1] + sizes_[l];
}

std::vector<double> Mlp::init(Rng& rng, double output_gain) const {
  std::vector<double> p(param_count_, 0.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t off = 0;
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    const std::size_t in = sizes_[l - 1];
    const std::size_t out = sizes_[l];
    double scale = 1.0 / std::sqrt(static_cast<double>(in));
    if (l + 1 == sizes_.size()) scale *= output_gain;
    for (std::size_t k = 0; k < in * out; ++k) p[off + k] = scale * normal(rng);
    off += in * out + out;
  }
  return p;
}

void Mlp::forward(std::span<const double> params, std::span<const double> x, Workspace& ws) const {
  const std::size_t layers = sizes_.size();
  ws.acts.resize(layers);
  ws.acts[0].assign(x.begin(), x.end());
  std::size_t off = 0;
  for (std::size_t l = 1; l < layers; ++l) {
    const std::size_t in = sizes_[l - 1];
    const std::size_t out = sizes_[l];
    const double* w = params.data() + off;
    const double* b = w + in * out;
    const std::vector<double>& a = ws.acts[l - 1];
    std::vector<double>& z = ws.acts[l];
    z.resize(out);
    const bool hidden = l + 1 < layers;
    for (std::size_t o = 0; o < out; ++o) {
      double s = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) s += row[i] * a[i];
      z[o] = hidden ? std::tanh(s) : s;
    }
    off += in * out + out;
  }
}

void Mlp::backward(std::span<const double> params, const Workspace& ws, std::span<const double> dout,
                   std::span<double> grad) const {
  const std::size_t layers = sizes_.size();
  std::vector<double> delta(dout.begin(), dout.end());
  std::vector<double> prev;
  std::size_t off = param_count_;
  for (std::size_t l = layers - 1; l >= 1; --l) {
    const std::size_t in = sizes_[l - 1];
    const std::size_t out = sizes_[l];
    off -= in * out + out;
    const double* w = params.data() + off;
    double* gw = grad.data() + off;
    double* gb = gw + in * out;
    const std::vector<double>& a = ws.acts[l - 1];
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      double* grow = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += d * a[i];
    }
    if (l == 1) break;
    prev.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) prev[i] += row[i] * d;
    }
    // Layer l-1 is a tanh layer: d tanh = 1 - a^2.
    for (std::size_t i = 0; i < in; ++i) prev[i] *= 1.0 - a[i] * a[i];
    delta.swap(prev);
  }
}

Adam::Adam(std::size_t n, double lr_, double beta1_, double beta2_, double eps_)
    : lr(lr_), beta1(beta1_), beta2(beta2_), eps(eps_), m(n, 0.0), v(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m.size() || grad.size() != m.size()) throw std::invalid_argument("Adam: size mismatch");
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
  }
}

double clip_grad_norm(std::span<double> grad, double max_norm) {
  const double norm = std::sqrt(std::inner_product(grad.begin(), grad.end(), grad.begin(), 0.0));
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (double& g : grad) g *= s;
  }
  return norm;
}

}  // namespace borderdef
