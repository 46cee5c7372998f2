#include "cagan/masks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cagan/errors.hpp"
#include "cagan/image_io.hpp"

namespace cagan {

std::string_view component_name(int component) {
  static constexpr std::array<std::string_view, kComponents> kNames = {
      "eyes", "eyebrows", "nose", "lips", "inner-mouth", "facial-skin", "hair", "background"};
  if (component < 0 || component >= kComponents) throw IndexError("component index out of range");
  return kNames[component];
}

std::string_view split_name(Split split) { return split == Split::kTrain ? "train" : "test"; }

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  throw ManifestError("unknown split '" + std::string(name) + "'");
}

MaskSet::MaskSet(Tensor probabilities) : probs_(std::move(probabilities)) {
  for (float v : probs_.values()) {
    if (!(v >= 0.0f && v <= 1.0f)) throw MaskShapeError("mask probability outside [0, 1]");
  }
}

MaskSet MaskSet::uniform(int height, int width, int components) {
  return MaskSet(Tensor(components, height, width, 1.0f / static_cast<float>(components)));
}

MaskSet MaskSet::from_labels(std::span<const int> labels, int height, int width, int components) {
  if (labels.size() != static_cast<std::size_t>(height) * width) {
    throw MaskShapeError("label map size does not match height x width");
  }
  Tensor t(components, height, width);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels[i];
    if (c < 0 || c >= components) throw IndexError("label " + std::to_string(c) + " out of range");
    t.data()[c * t.plane() + i] = 1.0f;
  }
  return MaskSet(std::move(t));
}

bool MaskSet::is_normalized(double tol) const {
  const std::size_t plane = probs_.plane();
  for (std::size_t i = 0; i < plane; ++i) {
    double sum = 0.0;
    for (int c = 0; c < components(); ++c) sum += probs_.data()[c * plane + i];
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

void validate_sample(const Sample& s) {
  if (!s.photo.same_spatial(s.sketch) || s.photo.height() != s.masks.height() ||
      s.photo.width() != s.masks.width()) {
    throw ShapeError("sample '" + s.id + "': photo, sketch and masks differ in size");
  }
}

std::filesystem::path mask_file(const std::filesystem::path& prefix, int component) {
  return prefix.string() + ".c" + std::to_string(component) + ".png";
}

MaskSet renormalize(const Tensor& weights, MaskLoadReport* report) {
  const int components = weights.channels();
  const std::size_t plane = weights.plane();
  Tensor out(components, weights.height(), weights.width());
  long empty = 0;
  for (std::size_t i = 0; i < plane; ++i) {
    double sum = 0.0;
    for (int c = 0; c < components; ++c) sum += weights.data()[c * plane + i];
    if (sum <= 0.0) {
      ++empty;
      for (int c = 0; c < components; ++c) out.data()[c * plane + i] = 1.0f / static_cast<float>(components);
    } else {
      for (int c = 0; c < components; ++c) {
        out.data()[c * plane + i] = static_cast<float>(weights.data()[c * plane + i] / sum);
      }
    }
  }
  if (report != nullptr) report->empty_pixels += empty;
  return MaskSet(std::move(out));
}

MaskSet load_mask_set(const std::filesystem::path& prefix, int components, MaskLoadReport* report) {
  if (components <= 0) throw ConfigError("mask component count must be positive");
  Tensor raw;
  for (int c = 0; c < components; ++c) {
    const auto path = mask_file(prefix, c);
    if (!std::filesystem::exists(path)) throw MaskFileMissing("missing mask file '" + path.string() + "'");
    const Raster8 r = read_png8(path);
    if (r.channels != 1) throw MaskShapeError("mask file '" + path.string() + "' is not grayscale");
    if (c == 0) {
      raw = Tensor(components, r.height, r.width);
    } else if (r.height != raw.height() || r.width != raw.width()) {
      throw MaskShapeError("mask file '" + path.string() + "' is " + std::to_string(r.height) + "x" +
                           std::to_string(r.width) + ", expected " + std::to_string(raw.height()) + "x" +
                           std::to_string(raw.width()));
    }
    auto dst = raw.channel(c);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(r.pixels[i]) / 255.0f;
  }
  return renormalize(raw, report);
}

void save_mask_set(const std::filesystem::path& prefix, const MaskSet& masks) {
  const int comps = masks.components();
  const std::size_t plane = static_cast<std::size_t>(masks.height()) * masks.width();
  std::vector<Raster8> rasters(static_cast<std::size_t>(comps));
  for (auto& r : rasters) {
    r.width = masks.width();
    r.height = masks.height();
    r.channels = 1;
    r.pixels.resize(plane);
  }
  // Normalized pixels are quantized by largest remainder so the stored bytes
  // sum to exactly 255 and reloading reproduces them.
  std::vector<double> scaled(static_cast<std::size_t>(comps));
  std::vector<int> order(static_cast<std::size_t>(comps));
  for (std::size_t i = 0; i < plane; ++i) {
    double total = 0.0;
    for (int c = 0; c < comps; ++c) {
      scaled[c] = std::clamp(static_cast<double>(masks.channel(c)[i]), 0.0, 1.0) * 255.0;
      total += scaled[c];
    }
    if (std::abs(total - 255.0) > 0.25) {
      for (int c = 0; c < comps; ++c) rasters[c].pixels[i] = static_cast<std::uint8_t>(std::lround(scaled[c]));
      continue;
    }
    int assigned = 0;
    for (int c = 0; c < comps; ++c) {
      const double f = std::floor(scaled[c] + 1e-9);
      rasters[c].pixels[i] = static_cast<std::uint8_t>(f);
      assigned += static_cast<int>(f);
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return scaled[a] - std::floor(scaled[a] + 1e-9) > scaled[b] - std::floor(scaled[b] + 1e-9);
    });
    for (int k = 0; assigned < 255 && k < comps; ++k, ++assigned) ++rasters[order[k]].pixels[i];
  }
  for (int c = 0; c < comps; ++c) write_png8(mask_file(prefix, c), rasters[c]);
}

MaskSet binarize(const MaskSet& masks) {
  const Tensor& p = masks.probabilities();
  const std::size_t plane = p.plane();
  Tensor out(p.channels(), p.height(), p.width());
  for (std::size_t i = 0; i < plane; ++i) {
    int best = 0;
    for (int c = 1; c < p.channels(); ++c) {
      if (p.data()[c * plane + i] > p.data()[best * plane + i]) best = c;
    }
    out.data()[best * plane + i] = 1.0f;
  }
  return MaskSet(std::move(out));
}

double component_mass(const MaskSet& masks, int component) {
  if (component < 0 || component >= masks.components()) {
    throw IndexError("component " + std::to_string(component) + " out of range [0, " +
                     std::to_string(masks.components()) + ")");
  }
  double sum = 0.0;
  for (float v : masks.channel(component)) sum += v;
  return sum;
}

}  // namespace cagan
