#include "cagan/procedural.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>

#include "cagan/errors.hpp"
#include "cagan/masks.hpp"
#include "cagan/random.hpp"

namespace cagan {
namespace {

struct Ellipse {
  double cx, cy, rx, ry;
  bool contains(double u, double v) const {
    const double a = (u - cx) / rx, b = (v - cy) / ry;
    return a * a + b * b <= 1.0;
  }
};

using Rgb = std::array<double, 3>;

struct FaceGeometry {
  Ellipse face, hair, nose, lips, inner_mouth;
  std::array<Ellipse, 2> eyes, brows;
  double hairline = 0, hair_bottom = 0, pupil_r = 0, light = 0;
  Rgb background, skin, hair_color, lip_color, mouth_color, iris_color;
};

Rgb random_color(std::mt19937_64& rng, const Rgb& lo, const Rgb& hi) {
  return {uniform(rng, lo[0], hi[0]), uniform(rng, lo[1], hi[1]), uniform(rng, lo[2], hi[2])};
}

FaceGeometry draw_geometry(std::mt19937_64& rng, int size) {
  const double px = 1.0 / size;
  FaceGeometry g;
  const double cx = 0.5 + uniform(rng, -0.04, 0.04);
  const double cy = 0.55 + uniform(rng, -0.03, 0.03);
  const double frx = uniform(rng, 0.22, 0.28);
  const double fry = uniform(rng, 0.28, 0.34);
  g.face = {cx, cy, frx, fry};
  g.hair = {cx, cy - uniform(rng, 0.03, 0.06), frx + uniform(rng, 0.03, 0.07), fry + uniform(rng, 0.03, 0.06)};
  g.hairline = cy - fry * uniform(rng, 0.45, 0.65);
  g.hair_bottom = cy + fry * uniform(rng, 0.0, 0.6);

  const double eye_dx = frx * uniform(rng, 0.36, 0.44);
  const double eye_y = cy - fry * uniform(rng, 0.12, 0.22);
  const double eye_rx = std::max(frx * uniform(rng, 0.16, 0.20), 1.2 * px);
  const double eye_ry = std::max(eye_rx * uniform(rng, 0.45, 0.6), 0.8 * px);
  const double brow_gap = uniform(rng, 0.03, 0.05);
  const double brow_ry = std::max(uniform(rng, 0.012, 0.02), 0.8 * px);
  for (int side = 0; side < 2; ++side) {
    const double ex = cx + (side == 0 ? -eye_dx : eye_dx);
    g.eyes[side] = {ex, eye_y, eye_rx, eye_ry};
    g.brows[side] = {ex, eye_y - eye_ry - brow_gap, eye_rx * 1.2, brow_ry};
  }
  g.pupil_r = eye_ry * 0.9;
  g.nose = {cx, cy + fry * 0.12, frx * uniform(rng, 0.10, 0.14), fry * uniform(rng, 0.18, 0.24)};
  const double lips_y = cy + fry * uniform(rng, 0.50, 0.58);
  const double lips_rx = frx * uniform(rng, 0.32, 0.40);
  const double lips_ry = std::max(fry * uniform(rng, 0.08, 0.11), 1.2 * px);
  g.lips = {cx, lips_y, lips_rx, lips_ry};
  g.inner_mouth = {cx, lips_y, lips_rx * 0.75, std::max(lips_ry * uniform(rng, 0.25, 0.5), 0.6 * px)};
  g.light = uniform(rng, -1.0, 1.0);

  g.background = random_color(rng, {0.35, 0.35, 0.35}, {0.9, 0.9, 0.9});
  const double tone = unit_uniform(rng);
  g.skin = {0.55 + 0.4 * tone, 0.4 + 0.35 * tone, 0.3 + 0.3 * tone};
  g.hair_color = random_color(rng, {0.02, 0.02, 0.02}, {0.45, 0.35, 0.25});
  g.lip_color = random_color(rng, {0.55, 0.15, 0.15}, {0.85, 0.4, 0.4});
  g.mouth_color = {0.25, 0.05, 0.05};
  g.iris_color = random_color(rng, {0.05, 0.05, 0.05}, {0.35, 0.3, 0.25});
  return g;
}

std::vector<int> paint_labels(const FaceGeometry& g, int size) {
  std::vector<int> labels(static_cast<std::size_t>(size) * size, static_cast<int>(Component::kBackground));
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = (x + 0.5) / size, v = (y + 0.5) / size;
      Component c = Component::kBackground;
      const bool in_face = g.face.contains(u, v);
      if (g.hair.contains(u, v) && v < g.hair_bottom && (v < g.hairline || !in_face)) {
        c = Component::kHair;
      } else if (in_face) {
        c = Component::kSkin;
      }
      if (in_face) {
        if (g.nose.contains(u, v)) c = Component::kNose;
        for (int s = 0; s < 2; ++s) {
          if (g.eyes[s].contains(u, v)) c = Component::kEyes;
          if (g.brows[s].contains(u, v)) c = Component::kEyebrows;
        }
        if (g.lips.contains(u, v)) c = Component::kLips;
        if (g.inner_mouth.contains(u, v)) c = Component::kInnerMouth;
      }
      labels[static_cast<std::size_t>(y) * size + x] = static_cast<int>(c);
    }
  }
  return labels;
}

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

bool in_pupil(const FaceGeometry& g, double u, double v) {
  for (const auto& e : g.eyes) {
    const double du = u - e.cx, dv = v - e.cy;
    if (du * du + dv * dv <= g.pupil_r * g.pupil_r) return true;
  }
  return false;
}

MaskSet soften(const MaskSet& hard) {
  const int h = hard.height(), w = hard.width();
  Tensor blurred(hard.components(), h, w);
  for (int c = 0; c < hard.components(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double sum = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            sum += hard.at(c, std::clamp(y + dy, 0, h - 1), std::clamp(x + dx, 0, w - 1));
          }
        }
        blurred.at(c, y, x) = static_cast<float>(sum / 9.0);
      }
    }
  }
  return renormalize(blurred);
}

}  // namespace

std::vector<int> procedural_labels(std::uint64_t seed, int size) {
  if (size != 32 && size != 64 && size != 128) {
    throw ConfigError("procedural sample size must be 32, 64 or 128, got " + std::to_string(size));
  }
  std::mt19937_64 rng(mix_seed(seed, 0));
  return paint_labels(draw_geometry(rng, size), size);
}

Sample generate_procedural_sample(std::uint64_t seed, int size, const ProceduralOptions& options) {
  if (size != 32 && size != 64 && size != 128) {
    throw ConfigError("procedural sample size must be 32, 64 or 128, got " + std::to_string(size));
  }
  std::mt19937_64 rng(mix_seed(seed, 0));
  const FaceGeometry g = draw_geometry(rng, size);
  const std::vector<int> labels = paint_labels(g, size);
  std::mt19937_64 noise(mix_seed(seed, 1));

  Sample s;
  char id[32];
  std::snprintf(id, sizeof(id), "proc_%06llu", static_cast<unsigned long long>(seed));
  s.id = id;
  s.source = "procedural";
  s.photo = Tensor(3, size, size);
  s.sketch = Tensor(1, size, size);

  auto label_at = [&](int y, int x) { return labels[static_cast<std::size_t>(y) * size + x]; };
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = (x + 0.5) / size, v = (y + 0.5) / size;
      const auto c = static_cast<Component>(label_at(y, x));
      const double shade = 1.0 + 0.15 * g.light * (u - g.face.cx) / g.face.rx;
      Rgb color{};
      double ink = 0.95;
      switch (c) {
        case Component::kBackground:
          color = g.background;
          break;
        case Component::kHair:
          color = g.hair_color;
          for (double& ch : color) ch *= shade;
          ink = ((x + y) % 3 == 0) ? -0.5 : 0.2;
          break;
        case Component::kSkin:
          color = g.skin;
          for (double& ch : color) ch *= shade;
          break;
        case Component::kNose:
          color = g.skin;
          for (double& ch : color) ch *= 0.9 * shade;
          break;
        case Component::kEyes:
          color = in_pupil(g, u, v) ? g.iris_color : Rgb{0.92, 0.92, 0.9};
          ink = in_pupil(g, u, v) ? -0.9 : 0.9;
          break;
        case Component::kEyebrows:
          color = g.hair_color;
          ink = -0.4;
          break;
        case Component::kLips:
          color = g.lip_color;
          ink = 0.2;
          break;
        case Component::kInnerMouth:
          color = g.mouth_color;
          ink = -0.7;
          break;
      }
      for (int ch = 0; ch < 3; ++ch) {
        const double jitter = uniform(noise, -0.03, 0.03);
        s.photo.at(ch, y, x) = static_cast<float>(clamp_unit(2.0 * (color[ch] + jitter) - 1.0));
      }
      // Region boundaries become strokes; nose boundaries are drawn lightly.
      const int here = label_at(y, x);
      const int right = x + 1 < size ? label_at(y, x + 1) : here;
      const int down = y + 1 < size ? label_at(y + 1, x) : here;
      if (right != here || down != here) {
        const bool nose_edge = here == static_cast<int>(Component::kNose) ||
                               right == static_cast<int>(Component::kNose) ||
                               down == static_cast<int>(Component::kNose);
        ink = std::min(ink, nose_edge ? -0.1 : -0.6);
      }
      s.sketch.at(0, y, x) = static_cast<float>(clamp_unit(ink + uniform(noise, -0.02, 0.02)));
    }
  }

  const MaskSet hard = MaskSet::from_labels(labels, size, size);
  s.masks = options.soft_masks ? soften(hard) : hard;
  return s;
}

}  // namespace cagan
