#pragma once

#include <filesystem>

#include "cagan/datamodel.hpp"

namespace cagan {

struct MaskLoadReport {
  // Pixels whose channels were all zero and were replaced by uniform 1/C.
  long empty_pixels = 0;
};

// File name of component `c` for a mask prefix: "<prefix>.c<c>.png".
std::filesystem::path mask_file(const std::filesystem::path& prefix, int component);

// Loads `<prefix>.c0.png` ... `<prefix>.c{C-1}.png` (8-bit gray, probability =
// value / 255) and renormalizes every pixel so its channels sum to one.
MaskSet load_mask_set(const std::filesystem::path& prefix, int components = kComponents,
                      MaskLoadReport* report = nullptr);

// Writes one 8-bit PNG per component, value ~ 255 * p. Pixels whose
// probabilities sum to 1 are rounded by largest remainder so the bytes sum to 255.
void save_mask_set(const std::filesystem::path& prefix, const MaskSet& masks);

// Per-pixel renormalization of raw non-negative weights; all-zero pixels
// become uniform.
MaskSet renormalize(const Tensor& weights, MaskLoadReport* report = nullptr);

// One-hot argmax per pixel, ties to the lowest component index.
MaskSet binarize(const MaskSet& masks);

// Sum of component c's probabilities over all pixels.
double component_mass(const MaskSet& masks, int component);

}  // namespace cagan
