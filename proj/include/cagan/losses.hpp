#pragma once

// Reconstruction and adversarial losses.
//
// Every reconstruction loss takes an optional `grad` tensor. When supplied,
// d(loss)/d(predicted) is *added* into it (resized and zeroed first if its
// shape does not match `predicted`), so terms can be combined cheaply. At
// |Y - Yhat| = 0 the L1 subgradient 0 is used.

#include <span>

#include "cagan/datamodel.hpp"

namespace cagan {

struct LossWeights {
  double alpha = 0.7;           // compositional vs global mix
  double lambda = 100.0;        // reconstruction weight in the generator objective
  double epsilon_mass = 1e-6;   // components lighter than this are dropped

  // Throws ConfigError if alpha is outside [0, 1], lambda < 0 or epsilon_mass <= 0.
  void validate() const;

  bool operator==(const LossWeights&) const = default;
};

// (1 / (m n)) * sum |Y - Yhat| over pixels and channels.
double global_l1(const ImageTensor& target, const ImageTensor& predicted, ImageTensor* grad = nullptr);

// (1 / (m n)) * sum |Y (.) M_c - Yhat (.) M_c|, mask broadcast over channels.
double component_global_l1(const ImageTensor& target, const ImageTensor& predicted, const MaskSet& masks,
                           int component, ImageTensor* grad = nullptr);

// Inverse-frequency weight m n / mass(c); 0 when mass(c) < epsilon_mass.
double component_balance_weight(const MaskSet& masks, int component, double epsilon_mass);

// gamma_c * component_global_l1: the masked L1 sum divided by mass(c).
double balanced_component_l1(const ImageTensor& target, const ImageTensor& predicted, const MaskSet& masks,
                             int component, double epsilon_mass, ImageTensor* grad = nullptr);

// Sum of balanced_component_l1 over all components.
double compositional_l1(const ImageTensor& target, const ImageTensor& predicted, const MaskSet& masks,
                        double epsilon_mass, ImageTensor* grad = nullptr);

// alpha * compositional_l1 + (1 - alpha) * global_l1.
double mixed_reconstruction_loss(const ImageTensor& target, const ImageTensor& predicted, const MaskSet& masks,
                                 const LossWeights& weights, ImageTensor* grad = nullptr);

struct AdversarialLosses {
  double discriminator = 0.0;  // -mean[log D(real) + log(1 - D(fake))]
  double generator = 0.0;      // -mean[log D(fake)]
};

// Losses from patch maps of probabilities. Inputs are clamped to
// [1e-12, 1 - 1e-12]; non-finite values raise NumericalError.
AdversarialLosses adversarial_losses(std::span<const float> d_real, std::span<const float> d_fake);

// adv_g + lambda * recon.
double generator_objective(double adversarial_generator, double reconstruction, const LossWeights& weights);

// Mean binary cross-entropy of a logit map against an all-real or all-fake
// label, computed with softplus so it never evaluates log(0). Writes
// d(loss)/d(logits) into `grad` when given.
double bce_with_logits(const Tensor& logits, bool label_real, Tensor* grad = nullptr);

// Numerically stable logistic function.
float stable_sigmoid(float z);

}  // namespace cagan
