#include "cagan/layers.hpp"

#include <cmath>
#include <random>

#include "cagan/errors.hpp"
#include "cagan/random.hpp"

namespace cagan {

void init_gaussian(ParamBlock& block, std::uint64_t seed, double stddev) {
  std::mt19937_64 rng(seed);
  for (float& v : block.value) v = static_cast<float>(stddev * standard_normal(rng));
}

namespace {

ParamBlock make_block(std::string name, std::size_t size) {
  return ParamBlock{std::move(name), std::vector<float>(size, 0.0f), std::vector<float>(size, 0.0f)};
}

void check_channels(const Tensor& t, int expected, const char* what) {
  if (t.channels() != expected) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(expected) + " input channels, got " +
                     std::to_string(t.channels()));
  }
}

}  // namespace

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int pad)
    : in_channels_(in_channels), out_channels_(out_channels), kernel_(kernel), stride_(stride), pad_(pad) {
  weight_ = make_block(name + ".weight", static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel);
  bias_ = make_block(name + ".bias", out_channels);
}

kernels::ConvGeometry Conv2d::geometry(const Tensor& input) const {
  return {in_channels_, input.height(), input.width(), out_channels_, kernel_, stride_, pad_};
}

Tensor Conv2d::forward(const Tensor& input) {
  check_channels(input, in_channels_, "conv2d");
  input_ = input;
  const auto g = geometry(input);
  if (g.out_height() <= 0 || g.out_width() <= 0) throw ShapeError("conv2d: input too small");
  Tensor out(out_channels_, g.out_height(), g.out_width());
  kernels::conv2d_forward(g, input.values(), weight_.value, bias_.value, out.values());
  return out;
}

Tensor Conv2d::backward(const Tensor& grad_output, bool want_input_grad) {
  const auto g = geometry(input_);
  Tensor grad_input;
  if (want_input_grad) grad_input = Tensor(in_channels_, input_.height(), input_.width());
  kernels::conv2d_backward(g, input_.values(), weight_.value, grad_output.values(), grad_input.values(),
                           weight_.grad, bias_.grad);
  return grad_input;
}

Deconv2d::Deconv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int pad)
    : in_channels_(in_channels), out_channels_(out_channels), kernel_(kernel), stride_(stride), pad_(pad) {
  weight_ = make_block(name + ".weight", static_cast<std::size_t>(in_channels) * out_channels * kernel * kernel);
  bias_ = make_block(name + ".bias", out_channels);
}

kernels::DeconvGeometry Deconv2d::geometry(const Tensor& input) const {
  return {in_channels_, input.height(), input.width(), out_channels_, kernel_, stride_, pad_};
}

Tensor Deconv2d::forward(const Tensor& input) {
  check_channels(input, in_channels_, "deconv2d");
  input_ = input;
  const auto g = geometry(input);
  Tensor out(out_channels_, g.out_height(), g.out_width());
  kernels::deconv2d_forward(g, input.values(), weight_.value, bias_.value, out.values());
  return out;
}

Tensor Deconv2d::backward(const Tensor& grad_output, bool want_input_grad) {
  const auto g = geometry(input_);
  Tensor grad_input;
  if (want_input_grad) grad_input = Tensor(in_channels_, input_.height(), input_.width());
  kernels::deconv2d_backward(g, input_.values(), weight_.value, grad_output.values(), grad_input.values(),
                             weight_.grad, bias_.grad);
  return grad_input;
}

Tensor InstanceNorm::forward(const Tensor& input) {
  const int channels = input.channels();
  const std::size_t plane = input.plane();
  normalized_ = Tensor(channels, input.height(), input.width());
  inv_std_.assign(channels, 0.0f);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    const float* x = input.data() + c * plane;
    double mean = 0.0;
    for (std::size_t i = 0; i < plane; ++i) mean += x[i];
    mean /= static_cast<double>(plane);
    double var = 0.0;
    for (std::size_t i = 0; i < plane; ++i) var += (x[i] - mean) * (x[i] - mean);
    var /= static_cast<double>(plane);
    const double inv = 1.0 / std::sqrt(var + kEpsilon);
    inv_std_[c] = static_cast<float>(inv);
    float* y = normalized_.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) y[i] = static_cast<float>((x[i] - mean) * inv);
  }
  return normalized_;
}

Tensor InstanceNorm::backward(const Tensor& grad_output) {
  const int channels = normalized_.channels();
  const std::size_t plane = normalized_.plane();
  Tensor grad_input(channels, normalized_.height(), normalized_.width());
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    const float* dy = grad_output.data() + c * plane;
    const float* xhat = normalized_.data() + c * plane;
    double mean_dy = 0.0, mean_dy_xhat = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      mean_dy += dy[i];
      mean_dy_xhat += static_cast<double>(dy[i]) * xhat[i];
    }
    mean_dy /= static_cast<double>(plane);
    mean_dy_xhat /= static_cast<double>(plane);
    float* dx = grad_input.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      dx[i] = static_cast<float>(inv_std_[c] * (dy[i] - mean_dy - xhat[i] * mean_dy_xhat));
    }
  }
  return grad_input;
}

Tensor LeakyRelu::forward(const Tensor& input) {
  input_ = input;
  Tensor out = input;
  float* y = out.data();
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (y[i] < 0.0f) y[i] *= slope_;
  }
  return out;
}

Tensor LeakyRelu::backward(const Tensor& grad_output) {
  Tensor grad = grad_output;
  float* g = grad.data();
  const float* x = input_.data();
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(grad.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (x[i] < 0.0f) g[i] *= slope_;
  }
  return grad;
}

Tensor Tanh::forward(const Tensor& input) {
  output_ = input;
  for (float& v : output_.values()) v = std::tanh(v);
  return output_;
}

Tensor Tanh::backward(const Tensor& grad_output) {
  Tensor grad = grad_output;
  const float* y = output_.data();
  float* g = grad.data();
  for (std::size_t i = 0; i < grad.size(); ++i) g[i] *= 1.0f - y[i] * y[i];
  return grad;
}

}  // namespace cagan
