#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cagan/datamodel.hpp"
#include "cagan/layers.hpp"

namespace cagan {

enum class Stage { kOne, kTwo };
enum class Norm { kInstance };

struct NetConfig {
  int image_size = 64;
  int in_channels_appearance = 3;               // photo (or sketch) channels
  int in_channels_composition = kComponents;    // mask channels
  int out_channels = 1;
  int base_width = 64;
  int depth = 0;                                // 0: log2(image_size), capped at 8
  Norm norm = Norm::kInstance;
  Stage stage = Stage::kOne;

  // Throws ConfigError for non power-of-two sizes, depth outside
  // [3, min(log2(size), 8)] or non-positive channel counts.
  void validate() const;
  int resolved_depth() const;
  // Appearance encoder input: photo channels, plus the initial output in stage two.
  int appearance_input_channels() const;
  // Discriminator input: photo + masks + candidate (+ initial in stage two).
  int discriminator_input_channels() const;
  // Encoder widths base * {1, 2, 4, 8, 8, 8, 8, 8}, truncated to depth.
  std::vector<int> encoder_widths() const;

  bool operator==(const NetConfig&) const = default;
};

// Common parameter plumbing for both networks.
class Network {
 public:
  virtual ~Network() = default;
  virtual std::vector<ParamBlock*> parameters() = 0;
  std::vector<const ParamBlock*> parameters() const;

  std::size_t parameter_count() const;
  void zero_grad();
  std::vector<float> flat_parameters() const;
  void set_flat_parameters(std::span<const float> values);
  std::vector<float> flat_gradients() const;
  // Stable 64-bit FNV-1a hash over all parameter bytes.
  std::uint64_t parameter_hash() const;
};

// Dual-encoder U-Net. The appearance encoder sees the photo (plus the
// initial output in stage two), the composition encoder sees the masks. Their
// bottleneck features are concatenated, and every decoder level concatenates
// the features of both encoders at the mirrored level.
class Generator : public Network {
 public:
  Generator(const NetConfig& config, std::uint64_t seed);

  const NetConfig& config() const { return config_; }

  // Throws StageError when `initial` is given to a stage-one generator or
  // missing for stage two; ShapeError when sizes differ from image_size.
  ImageTensor forward(const ImageTensor& photo, const MaskSet& masks, const ImageTensor* initial = nullptr);

  struct InputGrads {
    Tensor appearance;   // photo channels, then initial channels in stage two
    Tensor composition;  // mask channels
  };
  // Accumulates parameter gradients of the last forward call; fills
  // input_grads when provided.
  void backward(const Tensor& grad_output, InputGrads* input_grads = nullptr);

  std::vector<ParamBlock*> parameters() override;
  using Network::parameters;

  // Composition encoder first-layer weights.
  const ParamBlock& composition_first_layer() const { return composition_[0].conv.weight(); }
  ParamBlock& composition_first_layer() { return composition_[0].conv.weight(); }

 private:
  struct DownBlock {
    bool activate = false;  // leaky ReLU before the convolution
    bool normalize = false;
    LeakyRelu act{0.2f};
    Conv2d conv;
    InstanceNorm norm;

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& g, bool want_input_grad);
  };
  struct UpBlock {
    bool normalize = false;
    bool final = false;     // tanh instead of normalization
    LeakyRelu act{0.0f};
    Deconv2d deconv;
    InstanceNorm norm;
    Tanh tanh;

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& g);
  };

  std::vector<Tensor> encode(std::vector<DownBlock>& blocks, const Tensor& input);

  NetConfig config_;
  std::vector<DownBlock> appearance_;
  std::vector<DownBlock> composition_;
  std::vector<UpBlock> decoder_;  // decoder_[j] consumes level j, j = depth-1 .. 0
};

// Conditional patch discriminator C64-C128-C256-C512 (strides 2,2,2,1) plus a
// 1-channel 4x4 output layer; widths scale with base_width.
class Discriminator : public Network {
 public:
  Discriminator(const NetConfig& config, std::uint64_t seed);

  const NetConfig& config() const { return config_; }

  // Patch map of logits for the concatenated conditioning input.
  Tensor forward(const ImageTensor& photo, const MaskSet& masks, const ImageTensor& candidate,
                 const ImageTensor* initial = nullptr);
  // Patch map of probabilities, sigmoid(forward(...)).
  Tensor probabilities(const ImageTensor& photo, const MaskSet& masks, const ImageTensor& candidate,
                       const ImageTensor* initial = nullptr);

  // Accumulates parameter gradients; returns d/d(input) over all input
  // channels (photo, masks, candidate[, initial]) when requested.
  Tensor backward(const Tensor& grad_logits, bool want_input_grad = true);

  // Channel offset of the candidate image inside the concatenated input.
  int candidate_offset() const { return config_.in_channels_appearance + config_.in_channels_composition; }

  std::vector<ParamBlock*> parameters() override;
  using Network::parameters;

 private:
  struct Block {
    Conv2d conv;
    bool normalize = false;
    bool activate = true;
    InstanceNorm norm;
    LeakyRelu act{0.2f};
  };
  NetConfig config_;
  std::vector<Block> blocks_;
};

// Parameter count of the generator / discriminator for a config, without
// building the networks.
std::size_t generator_parameter_count(const NetConfig& config);
std::size_t discriminator_parameter_count(const NetConfig& config);

}  // namespace cagan
