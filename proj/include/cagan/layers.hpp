#pragma once

// Trainable building blocks with explicit forward/backward passes. Each layer
// caches what its backward pass needs from the most recent forward call, so
// forward/backward must be called in matched pairs.

#include <cstdint>
#include <string>
#include <vector>

#include "cagan/kernels.hpp"
#include "cagan/tensor.hpp"

namespace cagan {

// A named weight array and its gradient accumulator.
struct ParamBlock {
  std::string name;
  std::vector<float> value;
  std::vector<float> grad;

  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0f); }
};

// Fills `block` with N(0, stddev^2) draws from a stream keyed by `seed`.
void init_gaussian(ParamBlock& block, std::uint64_t seed, double stddev);

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int pad);

  Tensor forward(const Tensor& input);
  // Accumulates parameter gradients; returns dInput when requested.
  Tensor backward(const Tensor& grad_output, bool want_input_grad);

  int in_channels() const { return in_channels_; }
  int out_channels() const { return out_channels_; }
  ParamBlock& weight() { return weight_; }
  ParamBlock& bias() { return bias_; }
  const ParamBlock& weight() const { return weight_; }
  const ParamBlock& bias() const { return bias_; }

 private:
  kernels::ConvGeometry geometry(const Tensor& input) const;

  int in_channels_ = 0, out_channels_ = 0, kernel_ = 4, stride_ = 2, pad_ = 1;
  ParamBlock weight_, bias_;
  Tensor input_;
};

// 4x4 stride-2 transposed convolution (doubles spatial size).
class Deconv2d {
 public:
  Deconv2d() = default;
  Deconv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int pad);

  Tensor forward(const Tensor& input);
  Tensor backward(const Tensor& grad_output, bool want_input_grad);

  int in_channels() const { return in_channels_; }
  int out_channels() const { return out_channels_; }
  ParamBlock& weight() { return weight_; }
  ParamBlock& bias() { return bias_; }
  const ParamBlock& weight() const { return weight_; }
  const ParamBlock& bias() const { return bias_; }

 private:
  kernels::DeconvGeometry geometry(const Tensor& input) const;

  int in_channels_ = 0, out_channels_ = 0, kernel_ = 4, stride_ = 2, pad_ = 1;
  ParamBlock weight_, bias_;
  Tensor input_;
};

// Per-channel normalization over H x W, no affine parameters.
class InstanceNorm {
 public:
  static constexpr float kEpsilon = 1e-5f;
  Tensor forward(const Tensor& input);
  Tensor backward(const Tensor& grad_output);

 private:
  Tensor normalized_;
  std::vector<float> inv_std_;
};

// max(x, slope * x); slope 0 gives ReLU.
class LeakyRelu {
 public:
  explicit LeakyRelu(float slope = 0.2f) : slope_(slope) {}
  Tensor forward(const Tensor& input);
  Tensor backward(const Tensor& grad_output);

 private:
  float slope_;
  Tensor input_;
};

class Tanh {
 public:
  Tensor forward(const Tensor& input);
  Tensor backward(const Tensor& grad_output);

 private:
  Tensor output_;
};

}  // namespace cagan
