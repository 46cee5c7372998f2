#pragma once

#include <cstdint>

#include "cagan/datamodel.hpp"

namespace cagan {

struct ProceduralOptions {
  // Blur the one-hot label masks into soft labels (3x3 box) and renormalize.
  bool soft_masks = true;
};

// Draws a parameterized cartoon face: background, hair, skin ellipse, two
// eyes, two brows, nose, lips and inner mouth. The photo is a shaded RGB
// rendering, the sketch a 1-channel line drawing of the same geometry and the
// masks are exactly the drawn regions. Deterministic in `seed`; size must be
// 32, 64 or 128 (ConfigError otherwise).
Sample generate_procedural_sample(std::uint64_t seed, int size, const ProceduralOptions& options = {});

// Label map (component index per pixel) behind a procedural sample.
std::vector<int> procedural_labels(std::uint64_t seed, int size);

}  // namespace cagan
