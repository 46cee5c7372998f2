#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace cagan {

// Dense single-image tensor, channel-major (C x H x W), float storage.
// Used for photos, sketches, mask stacks, and every intermediate feature map.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int height, int width, float fill = 0.0f);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(height_) * width_; }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }
  std::span<float> channel(int c) { return {data_.data() + c * plane(), plane()}; }
  std::span<const float> channel(int c) const { return {data_.data() + c * plane(), plane()}; }

  float& at(int c, int y, int x) { return data_[(c * plane()) + static_cast<std::size_t>(y) * width_ + x]; }
  float at(int c, int y, int x) const { return data_[(c * plane()) + static_cast<std::size_t>(y) * width_ + x]; }

  bool same_shape(const Tensor& other) const {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }
  bool same_spatial(const Tensor& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  void fill(float value);
  void zero() { fill(0.0f); }

  bool operator==(const Tensor& other) const = default;

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

// Stacks tensors along the channel axis. All parts must share H x W.
Tensor concat_channels(std::initializer_list<const Tensor*> parts);

// Copies channels [first, first + count) into a new tensor.
Tensor slice_channels(const Tensor& t, int first, int count);

}  // namespace cagan
