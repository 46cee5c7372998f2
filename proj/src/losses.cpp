#include "cagan/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cagan/errors.hpp"
#include "cagan/masks.hpp"

namespace cagan {

void LossWeights::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (!(epsilon_mass > 0.0)) throw ConfigError("epsilon_mass must be positive");
}

namespace {

void check_pair(const ImageTensor& target, const ImageTensor& predicted) {
  if (!target.same_shape(predicted)) {
    throw ShapeError("target " + std::to_string(target.channels()) + "x" + std::to_string(target.height()) + "x" +
                     std::to_string(target.width()) + " vs predicted " + std::to_string(predicted.channels()) + "x" +
                     std::to_string(predicted.height()) + "x" + std::to_string(predicted.width()));
  }
}

void check_masks(const ImageTensor& target, const MaskSet& masks, int component) {
  if (masks.height() != target.height() || masks.width() != target.width()) {
    throw ShapeError("mask size does not match image size");
  }
  if (component < 0 || component >= masks.components()) {
    throw IndexError("component " + std::to_string(component) + " out of range");
  }
}

ImageTensor* prepare_grad(ImageTensor* grad, const ImageTensor& predicted) {
  if (grad != nullptr && !grad->same_shape(predicted)) {
    *grad = ImageTensor(predicted.channels(), predicted.height(), predicted.width());
  }
  return grad;
}

inline float sign_of(float d) { return d > 0.0f ? 1.0f : (d < 0.0f ? -1.0f : 0.0f); }

// sum over pixels/channels of w(pixel) * |Yhat - Y|; adds scale * w * sign to grad.
double weighted_abs_sum(const ImageTensor& target, const ImageTensor& predicted, std::span<const float> weight,
                        double grad_scale, ImageTensor* grad) {
  const std::size_t plane = target.plane();
  double sum = 0.0;
  for (int ch = 0; ch < target.channels(); ++ch) {
    const float* y = target.data() + ch * plane;
    const float* p = predicted.data() + ch * plane;
    float* g = grad != nullptr ? grad->data() + ch * plane : nullptr;
    for (std::size_t i = 0; i < plane; ++i) {
      const float w = weight.empty() ? 1.0f : weight[i];
      const float d = p[i] - y[i];
      sum += static_cast<double>(w) * std::abs(d);
      if (g != nullptr) g[i] += static_cast<float>(grad_scale * w * sign_of(d));
    }
  }
  return sum;
}

}  // namespace

double global_l1(const ImageTensor& target, const ImageTensor& predicted, ImageTensor* grad) {
  check_pair(target, predicted);
  const double mn = static_cast<double>(target.plane());
  return weighted_abs_sum(target, predicted, {}, 1.0 / mn, prepare_grad(grad, predicted)) / mn;
}

double component_global_l1(const ImageTensor& target, const ImageTensor& predicted, const MaskSet& masks,
                           int component, ImageTensor* grad) {
  check_pair(target, predicted);
  check_masks(target, masks, component);
  const double mn = static_cast<double>(target.plane());
  return weighted_abs_sum(target, predicted, masks.channel(component), 1.0 / mn, prepare_grad(grad, predicted)) / mn;
}

double component_balance_weight(const MaskSet& masks, int component, double epsilon_mass) {
  const double mass = component_mass(masks, component);
  if (mass < epsilon_mass) return 0.0;
  return static_cast<double>(masks.height()) * masks.width() / mass;
}

double balanced_component_l1(const ImageTensor& target, const ImageTensor& predicted, const MaskSet& masks,
                             int component, double epsilon_mass, ImageTensor* grad) {
  check_pair(target, predicted);
  check_masks(target, masks, component);
  prepare_grad(grad, predicted);
  const double mass = component_mass(masks, component);
  if (mass < epsilon_mass) return 0.0;
  return weighted_abs_sum(target, predicted, masks.channel(component), 1.0 / mass, grad) / mass;
}

double compositional_l1(const ImageTensor& target, const ImageTensor& predicted, const MaskSet& masks,
                        double epsilon_mass, ImageTensor* grad) {
  double total = 0.0;
  for (int c = 0; c < masks.components(); ++c) {
    total += balanced_component_l1(target, predicted, masks, c, epsilon_mass, grad);
  }
  return total;
}

double mixed_reconstruction_loss(const ImageTensor& target, const ImageTensor& predicted, const MaskSet& masks,
                                 const LossWeights& weights, ImageTensor* grad) {
  weights.validate();
  check_pair(target, predicted);
  check_masks(target, masks, 0);
  prepare_grad(grad, predicted);
  const double alpha = weights.alpha;
  const double mn = static_cast<double>(target.plane());

  // Fold both terms into one per-pixel weight so the sum and its gradient
  // take a single pass: w = alpha * sum_c M_c / mass_c + (1 - alpha) / mn.
  std::vector<double> acc(target.plane(), (1.0 - alpha) / mn);
  for (int c = 0; c < masks.components(); ++c) {
    const double mass = component_mass(masks, c);
    if (mass < weights.epsilon_mass) continue;
    const auto m = masks.channel(c);
    const double scale = alpha / mass;
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += scale * m[i];
  }
  double total = 0.0;
  const std::size_t plane = target.plane();
  for (int ch = 0; ch < target.channels(); ++ch) {
    const float* y = target.data() + ch * plane;
    const float* p = predicted.data() + ch * plane;
    float* g = grad != nullptr ? grad->data() + ch * plane : nullptr;
    for (std::size_t i = 0; i < plane; ++i) {
      const float d = p[i] - y[i];
      total += acc[i] * std::abs(d);
      if (g != nullptr) g[i] += static_cast<float>(acc[i] * sign_of(d));
    }
  }
  return total;
}

AdversarialLosses adversarial_losses(std::span<const float> d_real, std::span<const float> d_fake) {
  if (d_real.empty() || d_fake.empty()) throw ShapeError("empty discriminator map");
  constexpr double kLo = 1e-12, kHi = 1.0 - 1e-12;
  auto mean_log = [&](std::span<const float> values, bool complement) {
    double sum = 0.0;
    for (float v : values) {
      if (!std::isfinite(v)) throw NumericalError("non-finite discriminator output");
      const double p = std::clamp(static_cast<double>(v), kLo, kHi);
      sum += complement ? std::log1p(-p) : std::log(p);
    }
    return sum / static_cast<double>(values.size());
  };
  AdversarialLosses out;
  out.discriminator = -(mean_log(d_real, false) + mean_log(d_fake, true));
  out.generator = -mean_log(d_fake, false);
  return out;
}

double generator_objective(double adversarial_generator, double reconstruction, const LossWeights& weights) {
  return adversarial_generator + weights.lambda * reconstruction;
}

float stable_sigmoid(float z) {
  if (z >= 0.0f) return 1.0f / (1.0f + std::exp(-z));
  const float e = std::exp(z);
  return e / (1.0f + e);
}

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

double bce_with_logits(const Tensor& logits, bool label_real, Tensor* grad) {
  if (logits.empty()) throw ShapeError("empty logit map");
  if (grad != nullptr && !grad->same_shape(logits)) *grad = Tensor(logits.channels(), logits.height(), logits.width());
  const double n = static_cast<double>(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits.data()[i];
    if (!std::isfinite(z)) throw NumericalError("non-finite discriminator logit");
    // -log sigmoid(z) = softplus(-z); -log(1 - sigmoid(z)) = softplus(z)
    sum += label_real ? softplus(-z) : softplus(z);
    if (grad != nullptr) {
      const double s = stable_sigmoid(static_cast<float>(z));
      grad->data()[i] = static_cast<float>(((label_real ? s - 1.0 : s)) / n);
    }
  }
  return sum / n;
}

}  // namespace cagan
