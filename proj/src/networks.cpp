#include "cagan/networks.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <string>

#include "cagan/errors.hpp"
#include "cagan/losses.hpp"
#include "cagan/random.hpp"

namespace cagan {

namespace {

constexpr int kKernel = 4;
constexpr double kInitStd = 0.02;
constexpr int kWidthMultipliers[8] = {1, 2, 4, 8, 8, 8, 8, 8};

int log2_exact(int v) { return std::countr_zero(static_cast<unsigned>(v)); }

struct LayerShape {
  int in = 0;
  int out = 0;
};

struct GeneratorLayout {
  std::vector<LayerShape> appearance;
  std::vector<LayerShape> composition;
  std::vector<LayerShape> decoder;  // indexed by level j
};

GeneratorLayout generator_layout(const NetConfig& cfg) {
  cfg.validate();
  const int depth = cfg.resolved_depth();
  const auto widths = cfg.encoder_widths();
  GeneratorLayout layout;
  for (int i = 0; i < depth; ++i) {
    layout.appearance.push_back({i == 0 ? cfg.appearance_input_channels() : widths[i - 1], widths[i]});
    layout.composition.push_back({i == 0 ? cfg.in_channels_composition : widths[i - 1], widths[i]});
  }
  layout.decoder.resize(depth);
  for (int j = depth - 1; j >= 0; --j) {
    const int in = j == depth - 1 ? 2 * widths[j] : 3 * widths[j];
    const int out = j == 0 ? cfg.out_channels : widths[j - 1];
    layout.decoder[j] = {in, out};
  }
  return layout;
}

std::vector<LayerShape> discriminator_layout(const NetConfig& cfg) {
  cfg.validate();
  const int b = cfg.base_width;
  return {{cfg.discriminator_input_channels(), b}, {b, 2 * b}, {2 * b, 4 * b}, {4 * b, 8 * b}, {8 * b, 1}};
}

std::size_t conv_params(const LayerShape& s) {
  return static_cast<std::size_t>(s.in) * s.out * kKernel * kKernel + s.out;
}

void check_channels(const Tensor& t, int channels, const char* what) {
  if (t.channels() != channels) {
    throw ShapeError(std::string(what) + " has " + std::to_string(t.channels()) + " channels, network expects " +
                     std::to_string(channels));
  }
}

void check_spatial(const Tensor& t, int size, const char* what) {
  if (t.height() != size || t.width() != size) {
    throw ShapeError(std::string(what) + " is " + std::to_string(t.height()) + "x" + std::to_string(t.width()) +
                     ", network expects " + std::to_string(size) + "x" + std::to_string(size));
  }
}

}  // namespace

void NetConfig::validate() const {
  if (image_size < 8 || !std::has_single_bit(static_cast<unsigned>(image_size))) {
    throw ConfigError("image_size must be a power of two >= 8, got " + std::to_string(image_size));
  }
  if (in_channels_appearance <= 0 || in_channels_composition <= 0 || out_channels <= 0 || base_width <= 0) {
    throw ConfigError("channel counts and base_width must be positive");
  }
  const int d = resolved_depth();
  const int max_depth = std::min(log2_exact(image_size), 8);
  if (d < 3 || d > max_depth) {
    throw ConfigError("depth " + std::to_string(d) + " outside [3, " + std::to_string(max_depth) + "]");
  }
}

int NetConfig::resolved_depth() const {
  return depth > 0 ? depth : std::min(log2_exact(image_size), 8);
}

int NetConfig::appearance_input_channels() const {
  return in_channels_appearance + (stage == Stage::kTwo ? out_channels : 0);
}

int NetConfig::discriminator_input_channels() const {
  return in_channels_appearance + in_channels_composition + out_channels + (stage == Stage::kTwo ? out_channels : 0);
}

std::vector<int> NetConfig::encoder_widths() const {
  std::vector<int> w;
  for (int i = 0; i < resolved_depth(); ++i) w.push_back(base_width * kWidthMultipliers[i]);
  return w;
}

std::size_t generator_parameter_count(const NetConfig& cfg) {
  const auto layout = generator_layout(cfg);
  std::size_t n = 0;
  for (const auto* group : {&layout.appearance, &layout.composition, &layout.decoder}) {
    for (const auto& s : *group) n += conv_params(s);
  }
  return n;
}

std::size_t discriminator_parameter_count(const NetConfig& cfg) {
  std::size_t n = 0;
  for (const auto& s : discriminator_layout(cfg)) n += conv_params(s);
  return n;
}

// ---------------------------------------------------------------------------
// Network

std::vector<const ParamBlock*> Network::parameters() const {
  auto blocks = const_cast<Network*>(this)->parameters();
  return {blocks.begin(), blocks.end()};
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto* b : parameters()) n += b->value.size();
  return n;
}

void Network::zero_grad() {
  for (auto* b : parameters()) b->zero_grad();
}

std::vector<float> Network::flat_parameters() const {
  std::vector<float> out;
  out.reserve(parameter_count());
  for (const auto* b : parameters()) out.insert(out.end(), b->value.begin(), b->value.end());
  return out;
}

std::vector<float> Network::flat_gradients() const {
  std::vector<float> out;
  out.reserve(parameter_count());
  for (const auto* b : parameters()) out.insert(out.end(), b->grad.begin(), b->grad.end());
  return out;
}

void Network::set_flat_parameters(std::span<const float> values) {
  if (values.size() != parameter_count()) {
    throw ConfigError("parameter vector has " + std::to_string(values.size()) + " values, network has " +
                      std::to_string(parameter_count()));
  }
  std::size_t offset = 0;
  for (auto* b : parameters()) {
    std::copy(values.begin() + offset, values.begin() + offset + b->value.size(), b->value.begin());
    offset += b->value.size();
  }
}

std::uint64_t Network::parameter_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto* b : parameters()) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(b->value.data());
    for (std::size_t i = 0; i < b->value.size() * sizeof(float); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Generator

Tensor Generator::DownBlock::forward(const Tensor& x) {
  Tensor h = conv.forward(activate ? act.forward(x) : x);
  return normalize ? norm.forward(h) : h;
}

Tensor Generator::DownBlock::backward(const Tensor& g, bool want_input_grad) {
  Tensor d = normalize ? norm.backward(g) : g;
  d = conv.backward(d, want_input_grad || activate);
  if (!want_input_grad) return {};
  return activate ? act.backward(d) : d;
}

Tensor Generator::UpBlock::forward(const Tensor& x) {
  Tensor h = deconv.forward(act.forward(x));
  if (final) return tanh.forward(h);
  return normalize ? norm.forward(h) : h;
}

Tensor Generator::UpBlock::backward(const Tensor& g) {
  Tensor d = final ? tanh.backward(g) : (normalize ? norm.backward(g) : g);
  return act.backward(deconv.backward(d, true));
}

Generator::Generator(const NetConfig& config, std::uint64_t seed) : config_(config) {
  const auto layout = generator_layout(config_);
  const int depth = config_.resolved_depth();
  std::uint64_t stream = 0;
  auto make_down = [&](const char* prefix, int i, const LayerShape& s) {
    DownBlock b;
    b.activate = i > 0;
    // The innermost level is 1x1 at full depth, where instance statistics
    // degenerate; it is left unnormalized like the first level.
    b.normalize = i > 0 && i < depth - 1;
    b.conv = Conv2d(std::string(prefix) + std::to_string(i), s.in, s.out, kKernel, 2, 1);
    init_gaussian(b.conv.weight(), mix_seed(seed, stream++), kInitStd);
    return b;
  };
  for (int i = 0; i < depth; ++i) appearance_.push_back(make_down("appearance.", i, layout.appearance[i]));
  for (int i = 0; i < depth; ++i) composition_.push_back(make_down("composition.", i, layout.composition[i]));
  decoder_.resize(depth);
  for (int j = depth - 1; j >= 0; --j) {
    UpBlock& b = decoder_[j];
    b.final = j == 0;
    b.normalize = j > 0;
    b.deconv = Deconv2d("decoder." + std::to_string(j), layout.decoder[j].in, layout.decoder[j].out, kKernel, 2, 1);
    init_gaussian(b.deconv.weight(), mix_seed(seed, stream++), kInitStd);
  }
}

std::vector<Tensor> Generator::encode(std::vector<DownBlock>& blocks, const Tensor& input) {
  std::vector<Tensor> features;
  features.reserve(blocks.size());
  const Tensor* x = &input;
  for (auto& b : blocks) {
    features.push_back(b.forward(*x));
    x = &features.back();
  }
  return features;
}

ImageTensor Generator::forward(const ImageTensor& photo, const MaskSet& masks, const ImageTensor* initial) {
  if ((config_.stage == Stage::kTwo) != (initial != nullptr)) {
    throw StageError(config_.stage == Stage::kTwo ? "stage-two generator needs the initial output"
                                                  : "stage-one generator takes no initial output");
  }
  check_spatial(photo, config_.image_size, "photo");
  check_spatial(masks.probabilities(), config_.image_size, "masks");
  check_channels(photo, config_.in_channels_appearance, "photo");
  check_channels(masks.probabilities(), config_.in_channels_composition, "masks");
  if (initial != nullptr) {
    check_spatial(*initial, config_.image_size, "initial output");
    check_channels(*initial, config_.out_channels, "initial output");
  }

  const Tensor appearance_in = initial != nullptr ? concat_channels({&photo, initial}) : photo;
  const auto ea = encode(appearance_, appearance_in);
  const auto ec = encode(composition_, masks.probabilities());

  const int depth = config_.resolved_depth();
  Tensor h = concat_channels({&ea[depth - 1], &ec[depth - 1]});
  for (int j = depth - 1; j >= 0; --j) {
    Tensor up = decoder_[j].forward(h);
    if (j > 0) h = concat_channels({&up, &ea[j - 1], &ec[j - 1]});
    else h = std::move(up);
  }
  return h;
}

namespace {

void add_into(Tensor& dst, const Tensor& src) {
  float* d = dst.data();
  const float* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

}  // namespace

void Generator::backward(const Tensor& grad_output, InputGrads* input_grads) {
  const int depth = config_.resolved_depth();
  const auto widths = config_.encoder_widths();
  // Gradients reaching each encoder level through the skips and bottleneck.
  std::vector<Tensor> ga(depth), gc(depth);

  // decoder_[j] output feeds the level j-1 concat [up, ea, ec]; walk from the
  // output (j = 0) down to the bottleneck.
  Tensor g = grad_output;
  for (int j = 0; j < depth; ++j) {
    const Tensor d = decoder_[j].backward(g);
    const int up = j == depth - 1 ? 0 : d.channels() - 2 * widths[j];
    if (up > 0) g = slice_channels(d, 0, up);
    ga[j] = slice_channels(d, up, widths[j]);
    gc[j] = slice_channels(d, up + widths[j], widths[j]);
  }

  auto backprop_encoder = [&](std::vector<DownBlock>& blocks, std::vector<Tensor>& grads) {
    Tensor gi = std::move(grads[depth - 1]);
    for (int i = depth - 1; i >= 0; --i) {
      const bool want = i > 0 || input_grads != nullptr;
      Tensor dx = blocks[i].backward(gi, want);
      if (i > 0) {
        add_into(dx, grads[i - 1]);
        gi = std::move(dx);
      } else {
        gi = std::move(dx);
      }
    }
    return gi;
  };
  Tensor appearance_grad = backprop_encoder(appearance_, ga);
  Tensor composition_grad = backprop_encoder(composition_, gc);
  if (input_grads != nullptr) {
    input_grads->appearance = std::move(appearance_grad);
    input_grads->composition = std::move(composition_grad);
  }
}

std::vector<ParamBlock*> Generator::parameters() {
  std::vector<ParamBlock*> out;
  for (auto* group : {&appearance_, &composition_}) {
    for (auto& b : *group) {
      out.push_back(&b.conv.weight());
      out.push_back(&b.conv.bias());
    }
  }
  for (int j = static_cast<int>(decoder_.size()) - 1; j >= 0; --j) {
    out.push_back(&decoder_[j].deconv.weight());
    out.push_back(&decoder_[j].deconv.bias());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Discriminator

Discriminator::Discriminator(const NetConfig& config, std::uint64_t seed) : config_(config) {
  const auto layout = discriminator_layout(config_);
  for (std::size_t i = 0; i < layout.size(); ++i) {
    Block b;
    const bool last = i + 1 == layout.size();
    const int stride = i < 3 ? 2 : 1;
    b.conv = Conv2d("discriminator." + std::to_string(i), layout[i].in, layout[i].out, kKernel, stride, 1);
    b.normalize = i > 0 && !last;
    b.activate = !last;
    init_gaussian(b.conv.weight(), mix_seed(seed, i), kInitStd);
    blocks_.push_back(std::move(b));
  }
}

Tensor Discriminator::forward(const ImageTensor& photo, const MaskSet& masks, const ImageTensor& candidate,
                              const ImageTensor* initial) {
  if ((config_.stage == Stage::kTwo) != (initial != nullptr)) {
    throw StageError(config_.stage == Stage::kTwo ? "stage-two discriminator needs the initial output"
                                                  : "stage-one discriminator takes no initial output");
  }
  const int size = config_.image_size;
  check_spatial(photo, size, "photo");
  check_spatial(masks.probabilities(), size, "masks");
  check_spatial(candidate, size, "candidate");
  check_channels(photo, config_.in_channels_appearance, "photo");
  check_channels(masks.probabilities(), config_.in_channels_composition, "masks");
  check_channels(candidate, config_.out_channels, "candidate");
  if (initial != nullptr) {
    check_spatial(*initial, size, "initial output");
    check_channels(*initial, config_.out_channels, "initial output");
  }
  Tensor h = initial != nullptr ? concat_channels({&photo, &masks.probabilities(), &candidate, initial})
                                : concat_channels({&photo, &masks.probabilities(), &candidate});
  for (auto& b : blocks_) {
    h = b.conv.forward(h);
    if (b.normalize) h = b.norm.forward(h);
    if (b.activate) h = b.act.forward(h);
  }
  return h;
}

Tensor Discriminator::probabilities(const ImageTensor& photo, const MaskSet& masks, const ImageTensor& candidate,
                                    const ImageTensor* initial) {
  Tensor logits = forward(photo, masks, candidate, initial);
  for (float& v : logits.values()) v = stable_sigmoid(v);
  return logits;
}

Tensor Discriminator::backward(const Tensor& grad_logits, bool want_input_grad) {
  Tensor g = grad_logits;
  for (int i = static_cast<int>(blocks_.size()) - 1; i >= 0; --i) {
    auto& b = blocks_[i];
    if (b.activate) g = b.act.backward(g);
    if (b.normalize) g = b.norm.backward(g);
    g = b.conv.backward(g, i > 0 || want_input_grad);
  }
  return g;
}

std::vector<ParamBlock*> Discriminator::parameters() {
  std::vector<ParamBlock*> out;
  for (auto& b : blocks_) {
    out.push_back(&b.conv.weight());
    out.push_back(&b.conv.bias());
  }
  return out;
}

}  // namespace cagan
