#include "cagan/tensor.hpp"

#include <algorithm>
#include <string>

#include "cagan/errors.hpp"

namespace cagan {

Tensor::Tensor(int channels, int height, int width, float fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels < 0 || height < 0 || width < 0) {
    throw ShapeError("negative tensor dimension");
  }
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

void Tensor::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

Tensor concat_channels(std::initializer_list<const Tensor*> parts) {
  int channels = 0;
  const Tensor* first = *parts.begin();
  for (const Tensor* p : parts) {
    if (!p->same_spatial(*first)) {
      throw ShapeError("concat_channels: spatial size mismatch (" + std::to_string(p->height()) + "x" +
                       std::to_string(p->width()) + " vs " + std::to_string(first->height()) + "x" +
                       std::to_string(first->width()) + ")");
    }
    channels += p->channels();
  }
  Tensor out(channels, first->height(), first->width());
  float* dst = out.data();
  for (const Tensor* p : parts) {
    dst = std::copy(p->data(), p->data() + p->size(), dst);
  }
  return out;
}

Tensor slice_channels(const Tensor& t, int first, int count) {
  if (first < 0 || count < 0 || first + count > t.channels()) {
    throw ShapeError("slice_channels: range out of bounds");
  }
  Tensor out(count, t.height(), t.width());
  std::copy(t.data() + first * t.plane(), t.data() + (first + count) * t.plane(), out.data());
  return out;
}

}  // namespace cagan
