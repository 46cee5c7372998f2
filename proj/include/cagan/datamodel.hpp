#pragma once

#include <array>
#include <string>
#include <string_view>

#include "cagan/tensor.hpp"

namespace cagan {

// Images are Tensors with values in [-1, 1]: photos have 3 channels, sketches 1.
using ImageTensor = Tensor;

inline constexpr int kComponents = 8;

// Fixed component order of every mask stack.
enum class Component : int {
  kEyes = 0,
  kEyebrows = 1,
  kNose = 2,
  kLips = 3,
  kInnerMouth = 4,
  kSkin = 5,
  kHair = 6,
  kBackground = 7,
};

std::string_view component_name(int component);

// Per-pixel component probabilities, stored as a C x H x W tensor.
// Construction checks that every value is in [0, 1]; the sum-to-one property
// is established by the loaders and generators (see is_normalized()).
class MaskSet {
 public:
  MaskSet() = default;
  explicit MaskSet(Tensor probabilities);

  // Uniform 1/C everywhere.
  static MaskSet uniform(int height, int width, int components = kComponents);
  // Hard masks from a label map of component indices (row-major, H x W).
  static MaskSet from_labels(std::span<const int> labels, int height, int width, int components = kComponents);

  int components() const { return probs_.channels(); }
  int height() const { return probs_.height(); }
  int width() const { return probs_.width(); }
  float at(int c, int y, int x) const { return probs_.at(c, y, x); }
  std::span<const float> channel(int c) const { return probs_.channel(c); }
  const Tensor& probabilities() const { return probs_; }

  // True when every pixel's component probabilities sum to 1 within tol.
  bool is_normalized(double tol = 1e-4) const;

  bool operator==(const MaskSet& other) const = default;

 private:
  Tensor probs_;
};

enum class Split { kTrain, kTest };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

// One paired training triplet.
struct Sample {
  std::string id;
  ImageTensor photo;
  ImageTensor sketch;
  MaskSet masks;
  Split split = Split::kTrain;
  std::string source;
};

// Throws ShapeError unless photo, sketch and masks share H x W.
void validate_sample(const Sample& sample);

}  // namespace cagan
