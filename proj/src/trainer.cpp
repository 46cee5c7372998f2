#include "cagan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "cagan/errors.hpp"
#include "cagan/random.hpp"

namespace cagan {

namespace {

constexpr std::uint64_t kStreamG1 = 1, kStreamD1 = 2, kStreamG2 = 3, kStreamD2 = 4;
constexpr std::uint64_t kStreamOrder = 1000;

void require_stage(const TrainConfig& cfg, int stage) {
  if (stage < 1 || stage > cfg.stages) throw StageError(fmt::format("stage {} not present (stages = {})", stage, cfg.stages));
}

void scale(Tensor& t, double s) {
  const float f = static_cast<float>(s);
  for (float& v : t.values()) v *= f;
}

void check_finite(double v, std::string_view what, std::int64_t iteration) {
  if (!std::isfinite(v)) throw DivergedError(fmt::format("{} became non-finite at iteration {}", what, iteration));
}

}  // namespace

std::string_view direction_name(Direction d) {
  return d == Direction::kPhotoToSketch ? "photo2sketch" : "sketch2photo";
}

Direction parse_direction(std::string_view name) {
  if (name == "photo2sketch") return Direction::kPhotoToSketch;
  if (name == "sketch2photo") return Direction::kSketchToPhoto;
  throw ConfigError(fmt::format("unknown direction '{}' (expected photo2sketch or sketch2photo)", name));
}

void TrainConfig::validate() const {
  if (stages != 1 && stages != 2) throw ConfigError(fmt::format("stages must be 1 or 2, got {}", stages));
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (discriminator_learning_rate && !(*discriminator_learning_rate >= 0.0))
    throw ConfigError("discriminator learning rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (log_every < 0) throw ConfigError("log_every must be >= 0");
  loss.validate();
  net_config(stages).validate();
}

NetConfig TrainConfig::net_config(int stage) const {
  NetConfig n;
  n.image_size = image_size;
  n.in_channels_appearance = input_channels();
  n.in_channels_composition = kComponents;
  n.out_channels = output_channels();
  n.base_width = base_width;
  n.depth = depth;
  n.stage = stage == 2 ? Stage::kTwo : Stage::kOne;
  return n;
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["train.direction"] = direction_name(direction);
  j["train.stages"] = stages;
  j["train.epochs"] = epochs;
  j["train.batch_size"] = batch_size;
  j["train.learning_rate"] = learning_rate;
  if (discriminator_learning_rate)
    j["train.d_learning_rate"] = *discriminator_learning_rate;
  else
    j["train.d_learning_rate"] = nullptr;
  j["train.beta1"] = beta1;
  j["train.beta2"] = beta2;
  j["train.seed"] = seed;
  j["train.log_every"] = log_every;
  j["loss.lambda"] = loss.lambda;
  j["loss.alpha"] = loss.alpha;
  j["loss.epsilon_mass"] = loss.epsilon_mass;
  j["net.image_size"] = image_size;
  j["net.base_width"] = base_width;
  j["net.depth"] = depth;
  return j;
}

void TrainConfig::apply_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "train.direction") direction = parse_direction(value.get<std::string>());
      else if (key == "train.stages") stages = value.get<int>();
      else if (key == "train.epochs") epochs = value.get<int>();
      else if (key == "train.batch_size") batch_size = value.get<int>();
      else if (key == "train.learning_rate") learning_rate = value.get<double>();
      else if (key == "train.d_learning_rate") {
        if (value.is_null()) discriminator_learning_rate.reset();
        else discriminator_learning_rate = value.get<double>();
      } else if (key == "train.beta1") beta1 = value.get<double>();
      else if (key == "train.beta2") beta2 = value.get<double>();
      else if (key == "train.seed") seed = value.get<std::uint64_t>();
      else if (key == "train.log_every") log_every = value.get<int>();
      else if (key == "loss.lambda") loss.lambda = value.get<double>();
      else if (key == "loss.alpha") loss.alpha = value.get<double>();
      else if (key == "loss.epsilon_mass") loss.epsilon_mass = value.get<double>();
      else if (key == "net.image_size") image_size = value.get<int>();
      else if (key == "net.base_width") base_width = value.get<int>();
      else if (key == "net.depth") depth = value.get<int>();
      else if (key.starts_with("train.") || key.starts_with("loss.") || key.starts_with("net."))
        throw ConfigError(fmt::format("unknown configuration key '{}'", key));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(fmt::format("bad value for '{}': {}", key, e.what()));
    }
  }
}

TrainState::TrainState(const TrainConfig& config) : config_(config) {
  config_.validate();
  const std::uint64_t g_streams[2] = {kStreamG1, kStreamG2};
  const std::uint64_t d_streams[2] = {kStreamD1, kStreamD2};
  AdamConfig g_adam{config_.learning_rate, config_.beta1, config_.beta2};
  AdamConfig d_adam = g_adam;
  if (config_.discriminator_learning_rate) d_adam.learning_rate = *config_.discriminator_learning_rate;
  for (int s = 0; s < config_.stages; ++s) {
    const NetConfig net = config_.net_config(s + 1);
    generators_[s] = std::make_unique<Generator>(net, mix_seed(config_.seed, g_streams[s]));
    discriminators_[s] = std::make_unique<Discriminator>(net, mix_seed(config_.seed, d_streams[s]));
    g_optim_[s] = std::make_unique<Adam>(g_adam, generators_[s]->parameters());
    d_optim_[s] = std::make_unique<Adam>(d_adam, discriminators_[s]->parameters());
  }
}

Generator& TrainState::generator(int stage) {
  require_stage(config_, stage);
  return *generators_[stage - 1];
}
Discriminator& TrainState::discriminator(int stage) {
  require_stage(config_, stage);
  return *discriminators_[stage - 1];
}
const Generator& TrainState::generator(int stage) const {
  require_stage(config_, stage);
  return *generators_[stage - 1];
}
const Discriminator& TrainState::discriminator(int stage) const {
  require_stage(config_, stage);
  return *discriminators_[stage - 1];
}
Adam& TrainState::generator_optimizer(int stage) {
  require_stage(config_, stage);
  return *g_optim_[stage - 1];
}
const Adam& TrainState::generator_optimizer(int stage) const {
  require_stage(config_, stage);
  return *g_optim_[stage - 1];
}
const Adam& TrainState::discriminator_optimizer(int stage) const {
  require_stage(config_, stage);
  return *d_optim_[stage - 1];
}
Adam& TrainState::discriminator_optimizer(int stage) {
  require_stage(config_, stage);
  return *d_optim_[stage - 1];
}

TrainingPair as_pair(const Sample& sample, Direction direction) {
  if (direction == Direction::kPhotoToSketch) return {&sample.photo, &sample.sketch, &sample.masks};
  return {&sample.sketch, &sample.photo, &sample.masks};
}

StageOutputs estimate_outputs(TrainState& state, std::span<const TrainingPair> batch) {
  StageOutputs out;
  const bool two = state.config().stages == 2;
  for (const auto& p : batch) {
    out.initial.push_back(state.generator(1).forward(*p.input, *p.masks));
    if (two) out.refined.push_back(state.generator(2).forward(*p.input, *p.masks, &out.initial.back()));
  }
  return out;
}

double update_discriminator(TrainState& state, int stage, std::span<const TrainingPair> batch,
                            const StageOutputs& outputs) {
  Discriminator& d = state.discriminator(stage);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  d.zero_grad();
  double total = 0.0;
  Tensor grad;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const TrainingPair& p = batch[b];
    const ImageTensor* initial = stage == 2 ? &outputs.initial[b] : nullptr;
    const ImageTensor& fake = stage == 2 ? outputs.refined[b] : outputs.initial[b];

    double loss = bce_with_logits(d.forward(*p.input, *p.masks, *p.target, initial), true, &grad);
    scale(grad, inv_b);
    d.backward(grad, false);
    loss += bce_with_logits(d.forward(*p.input, *p.masks, fake, initial), false, &grad);
    scale(grad, inv_b);
    d.backward(grad, false);
    total += loss;
  }
  state.discriminator_optimizer(stage).step();
  return total * inv_b;
}

StageLosses update_generator(TrainState& state, int stage, std::span<const TrainingPair> batch,
                             const StageOutputs& outputs) {
  Generator& g = state.generator(stage);
  Discriminator& d = state.discriminator(stage);
  const LossWeights& w = state.config().loss;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  g.zero_grad();
  StageLosses losses;
  Tensor grad_logits;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const TrainingPair& p = batch[b];
    const ImageTensor* initial = stage == 2 ? &outputs.initial[b] : nullptr;
    // The layer caches hold the last forward pass, so with several samples
    // the generator is re-run before its backward pass.
    ImageTensor y = batch.size() == 1 ? (stage == 2 ? outputs.refined[b] : outputs.initial[b])
                                      : g.forward(*p.input, *p.masks, initial);

    const double adv = bce_with_logits(d.forward(*p.input, *p.masks, y, initial), true, &grad_logits);
    scale(grad_logits, inv_b);
    const Tensor grad_input = d.backward(grad_logits, true);
    ImageTensor grad_y = slice_channels(grad_input, d.candidate_offset(), y.channels());

    ImageTensor grad_recon;
    const double recon = mixed_reconstruction_loss(*p.target, y, *p.masks, w, &grad_recon);
    const float k = static_cast<float>(w.lambda * inv_b);
    auto gy = grad_y.values();
    auto gr = grad_recon.values();
    for (std::size_t i = 0; i < gy.size(); ++i) gy[i] += k * gr[i];

    g.backward(grad_y);
    losses.adversarial_g += adv * inv_b;
    losses.reconstruction += recon * inv_b;
  }
  state.generator_optimizer(stage).step();
  return losses;
}

IterationLosses train_step(TrainState& state, std::span<const TrainingPair> batch, const UpdateObserver& observer) {
  if (batch.empty()) throw DataError("empty minibatch");
  const int stages = state.config().stages;
  IterationLosses rec;
  rec.iteration = state.iteration + 1;
  rec.stages = stages;

  try {
    const StageOutputs outputs = estimate_outputs(state, batch);
    for (int s = 1; s <= stages; ++s) {
      rec.stage[s - 1].adversarial_d = update_discriminator(state, s, batch, outputs);
      check_finite(rec.stage[s - 1].adversarial_d, fmt::format("D{} loss", s), rec.iteration);
      if (observer) observer(s == 1 ? "D1" : "D2");
    }
    for (int s = 1; s <= stages; ++s) {
      const StageLosses g = update_generator(state, s, batch, outputs);
      rec.stage[s - 1].adversarial_g = g.adversarial_g;
      rec.stage[s - 1].reconstruction = g.reconstruction;
      check_finite(g.adversarial_g, fmt::format("G{} adversarial loss", s), rec.iteration);
      check_finite(g.reconstruction, fmt::format("G{} reconstruction loss", s), rec.iteration);
      if (observer) observer(s == 1 ? "G1" : "G2");
    }
  } catch (const NumericalError& e) {
    throw DivergedError(fmt::format("iteration {}: {}", rec.iteration, e.what()));
  }
  state.iteration = rec.iteration;
  state.log.push_back(rec);
  return rec;
}

IterationLosses train_step(TrainState& state, const Sample& sample, const UpdateObserver& observer) {
  const TrainingPair pair = as_pair(sample, state.config().direction);
  return train_step(state, std::span<const TrainingPair>(&pair, 1), observer);
}

std::int64_t iterations_per_epoch(const TrainConfig& config, std::size_t samples) {
  const auto b = static_cast<std::size_t>(config.batch_size);
  return static_cast<std::int64_t>((samples + b - 1) / b);
}

std::vector<int> batch_indices(const TrainConfig& config, std::size_t samples, std::int64_t t) {
  if (samples == 0) throw DataError("no training samples");
  const std::int64_t per_epoch = iterations_per_epoch(config, samples);
  const std::int64_t epoch = t / per_epoch;
  const std::int64_t pos = t % per_epoch;
  const std::vector<int> order = seeded_permutation(
      static_cast<int>(samples), mix_seed(config.seed, kStreamOrder + static_cast<std::uint64_t>(epoch)));
  const std::size_t first = static_cast<std::size_t>(pos) * static_cast<std::size_t>(config.batch_size);
  const std::size_t last = std::min(samples, first + static_cast<std::size_t>(config.batch_size));
  return {order.begin() + static_cast<std::ptrdiff_t>(first), order.begin() + static_cast<std::ptrdiff_t>(last)};
}

void train_until(TrainState& state, std::span<const Sample> samples, std::int64_t target_iterations,
                 const ProgressFn& progress) {
  const TrainConfig& cfg = state.config();
  if (samples.empty()) throw DataError("training split is empty");
  const std::int64_t per_epoch = iterations_per_epoch(cfg, samples.size());
  if (target_iterations < 0) target_iterations = per_epoch * cfg.epochs;
  std::vector<TrainingPair> batch;
  while (state.iteration < target_iterations) {
    batch.clear();
    for (int i : batch_indices(cfg, samples.size(), state.iteration))
      batch.push_back(as_pair(samples[static_cast<std::size_t>(i)], cfg.direction));
    const IterationLosses rec = train_step(state, batch);
    state.epoch = state.iteration / per_epoch;
    if (progress) progress(state, rec);
  }
}

std::vector<Sample> load_training_samples(const TrainConfig& config, const Manifest& manifest) {
  std::vector<Sample> samples;
  for (const ManifestEntry* e : manifest.with_split(Split::kTrain)) {
    Sample s = load_sample(manifest, *e);
    if (s.photo.height() != config.image_size || s.photo.width() != config.image_size)
      throw ShapeError(fmt::format("sample '{}' is {}x{}, expected {}x{} (run prepare --pad-to first)", s.id,
                                   s.photo.height(), s.photo.width(), config.image_size, config.image_size));
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw DataError("manifest has no train entries");
  return samples;
}

TrainState train(const TrainConfig& config, const Manifest& manifest, const ProgressFn& progress) {
  const std::vector<Sample> samples = load_training_samples(config, manifest);
  TrainState state(config);
  train_until(state, samples, -1, progress);
  return state;
}

ImageTensor synthesize(TrainState& state, const ImageTensor& input, const MaskSet& masks) {
  ImageTensor initial = state.generator(1).forward(input, masks);
  if (state.config().stages == 1) return initial;
  return state.generator(2).forward(input, masks, &initial);
}

std::vector<double> smooth_curve(std::span<const double> values, int window) {
  if (window < 1) throw ConfigError("smoothing window must be >= 1");
  std::vector<double> out;
  const auto w = static_cast<std::size_t>(window);
  for (std::size_t start = 0; start < values.size(); start += w) {
    const std::size_t end = std::min(values.size(), start + w);
    double sum = 0.0;
    for (std::size_t i = start; i < end; ++i) sum += values[i];
    out.push_back(sum / static_cast<double>(end - start));
  }
  return out;
}

}  // namespace cagan
