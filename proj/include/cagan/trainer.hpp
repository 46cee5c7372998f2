#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cagan/adam.hpp"
#include "cagan/losses.hpp"
#include "cagan/manifest.hpp"
#include "cagan/networks.hpp"
#include "json.hpp"

namespace cagan {

enum class Direction { kPhotoToSketch, kSketchToPhoto };

std::string_view direction_name(Direction d);
Direction parse_direction(std::string_view name);

struct TrainConfig {
  Direction direction = Direction::kPhotoToSketch;
  int stages = 2;
  int epochs = 700;
  int batch_size = 1;
  double learning_rate = 2e-4;
  // Discriminator learning rate; unset means `learning_rate`.
  std::optional<double> discriminator_learning_rate;
  double beta1 = 0.5;
  double beta2 = 0.999;
  LossWeights loss;
  std::uint64_t seed = 0;
  int image_size = 256;
  int base_width = 64;
  int depth = 0;
  int log_every = 100;

  void validate() const;
  // Network config for stage 1 or 2.
  NetConfig net_config(int stage) const;
  int input_channels() const { return direction == Direction::kPhotoToSketch ? 3 : 1; }
  int output_channels() const { return direction == Direction::kPhotoToSketch ? 1 : 3; }

  // Flat dotted-key JSON ("train.epochs", "loss.alpha", "net.image_size", ...).
  nlohmann::ordered_json to_json() const;
  // Applies the keys present in `j` on top of this config; unknown keys in
  // the train/loss/net namespaces raise ConfigError.
  void apply_json(const nlohmann::json& j);

  bool operator==(const TrainConfig&) const = default;
};

struct StageLosses {
  double reconstruction = 0.0;  // mixed reconstruction loss against the target
  double adversarial_g = 0.0;   // -mean log D(fake) after the discriminator update
  double adversarial_d = 0.0;   // -mean[log D(real) + log(1 - D(fake))]
};

struct IterationLosses {
  std::int64_t iteration = 0;  // 1-based
  int stages = 1;
  std::array<StageLosses, 2> stage{};
};

// Mutable training snapshot. Stage-two networks exist only when stages == 2.
class TrainState {
 public:
  explicit TrainState(const TrainConfig& config);

  const TrainConfig& config() const { return config_; }
  Generator& generator(int stage);
  Discriminator& discriminator(int stage);
  Adam& generator_optimizer(int stage);
  Adam& discriminator_optimizer(int stage);
  const Generator& generator(int stage) const;
  const Discriminator& discriminator(int stage) const;
  const Adam& generator_optimizer(int stage) const;
  const Adam& discriminator_optimizer(int stage) const;

  std::int64_t iteration = 0;
  std::int64_t epoch = 0;  // completed epochs
  std::vector<IterationLosses> log;

 private:
  TrainConfig config_;
  std::array<std::unique_ptr<Generator>, 2> generators_;
  std::array<std::unique_ptr<Discriminator>, 2> discriminators_;
  std::array<std::unique_ptr<Adam>, 2> g_optim_;
  std::array<std::unique_ptr<Adam>, 2> d_optim_;
};

// A training triplet seen from the configured direction.
struct TrainingPair {
  const ImageTensor* input = nullptr;   // X
  const ImageTensor* target = nullptr;  // Y
  const MaskSet* masks = nullptr;
};

TrainingPair as_pair(const Sample& sample, Direction direction);

// Called after every parameter update with "D1", "D2", "G1" or "G2".
using UpdateObserver = std::function<void(std::string_view network)>;

// Stage outputs of one forward pass: initial[b] = G1(X, M), refined[b] = G2(X, M, initial[b]).
struct StageOutputs {
  std::vector<ImageTensor> initial;
  std::vector<ImageTensor> refined;
};

StageOutputs estimate_outputs(TrainState& state, std::span<const TrainingPair> batch);

// One discriminator update (minimizes -[log D(real) + log(1 - D(fake))]).
// Returns the batch-mean discriminator loss.
double update_discriminator(TrainState& state, int stage, std::span<const TrainingPair> batch,
                            const StageOutputs& outputs);

// One generator update on adv_g + lambda * mixed reconstruction. Stage-two
// outputs consume the stage-one estimate as a constant input, so no gradient
// reaches G1 from the stage-two objective.
StageLosses update_generator(TrainState& state, int stage, std::span<const TrainingPair> batch,
                             const StageOutputs& outputs);

// Algorithm 1 for one minibatch: estimate G1 (and G2) outputs, then update
// D1, D2, G1, G2 in that order. Appends to state.log and bumps the iteration
// counter. Throws DivergedError on a non-finite loss.
IterationLosses train_step(TrainState& state, std::span<const TrainingPair> batch,
                           const UpdateObserver& observer = {});
IterationLosses train_step(TrainState& state, const Sample& sample, const UpdateObserver& observer = {});

// Number of iterations per epoch for n training samples.
std::int64_t iterations_per_epoch(const TrainConfig& config, std::size_t samples);

// Sample indices of the minibatch processed at 0-based iteration t: a seeded
// per-epoch permutation, so the order is a pure function of (seed, t).
std::vector<int> batch_indices(const TrainConfig& config, std::size_t samples, std::int64_t t);

using ProgressFn = std::function<void(const TrainState&, const IterationLosses&)>;

// Continues training until `target_iterations` have run (or all epochs when
// target is negative).
void train_until(TrainState& state, std::span<const Sample> samples, std::int64_t target_iterations = -1,
                 const ProgressFn& progress = {});

// Loads the train split of a manifest (samples must already be image_size
// square) and trains from scratch for config.epochs.
TrainState train(const TrainConfig& config, const Manifest& manifest, const ProgressFn& progress = {});

// Loads and validates the train split of a manifest for `config`.
std::vector<Sample> load_training_samples(const TrainConfig& config, const Manifest& manifest);

// Stage-two output when stages == 2, else stage-one output.
ImageTensor synthesize(TrainState& state, const ImageTensor& input, const MaskSet& masks);

// Non-overlapping block means; a trailing partial block is averaged over its length.
std::vector<double> smooth_curve(std::span<const double> values, int window = 40);

// Checkpoint directory: config.json, g1.bin, d1.bin, [g2.bin, d2.bin],
// optim.bin, log.csv, CHECKSUMS.
inline constexpr int kCheckpointVersion = 1;
void save_checkpoint(const TrainState& state, const std::filesystem::path& dir);
// When `expected` is given the networks are built from it, and weight blobs
// whose parameter count differs are rejected with CheckpointError.
std::unique_ptr<TrainState> load_checkpoint(const std::filesystem::path& dir,
                                            const std::optional<TrainConfig>& expected = std::nullopt);

// Loss log as CSV rows "iteration,stage,loss,value" (loss = recon|adv_g|adv_d).
void write_loss_log(const std::filesystem::path& path, std::span<const IterationLosses> log);
std::vector<IterationLosses> read_loss_log(const std::filesystem::path& path);

}  // namespace cagan
