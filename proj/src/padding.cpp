#include "cagan/padding.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "cagan/errors.hpp"

namespace cagan {

PadRecord centered_pad(int height, int width, int target_height, int target_width) {
  if (target_height < height || target_width < width) {
    throw PadError("cannot pad " + std::to_string(height) + "x" + std::to_string(width) + " to smaller " +
                   std::to_string(target_height) + "x" + std::to_string(target_width));
  }
  return {(target_height - height) / 2, (target_width - width) / 2, height, width};
}

namespace {

Tensor pad_tensor(const Tensor& src, int target_height, int target_width, const PadRecord& r,
                  const std::vector<float>& fill) {
  Tensor out(src.channels(), target_height, target_width);
  for (int c = 0; c < src.channels(); ++c) {
    auto dst = out.channel(c);
    std::fill(dst.begin(), dst.end(), fill[c]);
    for (int y = 0; y < src.height(); ++y) {
      for (int x = 0; x < src.width(); ++x) out.at(c, y + r.top, x + r.left) = src.at(c, y, x);
    }
  }
  return out;
}

Tensor crop_tensor(const Tensor& padded, const PadRecord& r) {
  if (r.top < 0 || r.left < 0 || r.top + r.height > padded.height() || r.left + r.width > padded.width()) {
    throw PadError("pad record does not fit inside the padded image");
  }
  Tensor out(padded.channels(), r.height, r.width);
  for (int c = 0; c < padded.channels(); ++c) {
    for (int y = 0; y < r.height; ++y) {
      for (int x = 0; x < r.width; ++x) out.at(c, y, x) = padded.at(c, y + r.top, x + r.left);
    }
  }
  return out;
}

}  // namespace

ImageTensor zero_pad(const ImageTensor& image, int target_height, int target_width, PadRecord* record) {
  const PadRecord r = centered_pad(image.height(), image.width(), target_height, target_width);
  if (record != nullptr) *record = r;
  return pad_tensor(image, target_height, target_width, r, std::vector<float>(image.channels(), -1.0f));
}

MaskSet zero_pad(const MaskSet& masks, int target_height, int target_width, PadRecord* record) {
  const PadRecord r = centered_pad(masks.height(), masks.width(), target_height, target_width);
  if (record != nullptr) *record = r;
  std::vector<float> fill(masks.components(), 0.0f);
  const int background = std::min(static_cast<int>(Component::kBackground), masks.components() - 1);
  fill[background] = 1.0f;
  return MaskSet(pad_tensor(masks.probabilities(), target_height, target_width, r, fill));
}

ImageTensor crop(const ImageTensor& padded, const PadRecord& record) { return crop_tensor(padded, record); }

MaskSet crop(const MaskSet& padded, const PadRecord& record) {
  return MaskSet(crop_tensor(padded.probabilities(), record));
}

PadRecord compose(const PadRecord& inner, const PadRecord& outer) {
  return {inner.top + outer.top, inner.left + outer.left, inner.height, inner.width};
}

}  // namespace cagan
