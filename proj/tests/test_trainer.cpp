#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cagan/errors.hpp"
#include "cagan/procedural.hpp"
#include "cagan/random.hpp"
#include "cagan/trainer.hpp"
#include "support.hpp"

using namespace cagan;
namespace fs = std::filesystem;

namespace {

std::vector<Sample> procedural_set(int n, int size = 32, std::uint64_t seed = 0) {
  std::vector<Sample> out;
  for (int i = 0; i < n; ++i) out.push_back(generate_procedural_sample(mix_seed(seed, static_cast<std::uint64_t>(i)), size));
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Hashes {
  std::uint64_t g1 = 0, d1 = 0, g2 = 0, d2 = 0;
};

Hashes hashes(const TrainState& s) {
  Hashes h{s.generator(1).parameter_hash(), s.discriminator(1).parameter_hash(), 0, 0};
  if (s.config().stages == 2) {
    h.g2 = s.generator(2).parameter_hash();
    h.d2 = s.discriminator(2).parameter_hash();
  }
  return h;
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<double>(a[i]) * b[i];
    aa += static_cast<double>(a[i]) * a[i];
    bb += static_cast<double>(b[i]) * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

void expect_logs_near(const std::vector<IterationLosses>& a, const std::vector<IterationLosses>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].iteration, b[i].iteration);
    for (int s = 0; s < a[i].stages; ++s) {
      EXPECT_NEAR(a[i].stage[s].reconstruction, b[i].stage[s].reconstruction, tol);
      EXPECT_NEAR(a[i].stage[s].adversarial_g, b[i].stage[s].adversarial_g, tol);
      EXPECT_NEAR(a[i].stage[s].adversarial_d, b[i].stage[s].adversarial_d, tol);
    }
  }
}

}  // namespace

TEST(SmoothCurve, BlockMeans) {
  const std::vector<double> v = {1, 2, 3, 4, 5};
  EXPECT_EQ(smooth_curve(v, 2), (std::vector<double>{1.5, 3.5, 5.0}));
  EXPECT_EQ(smooth_curve(v, 5), (std::vector<double>{3.0}));
  EXPECT_EQ(smooth_curve(v, 1), v);
  std::vector<double> ramp(80);
  for (int i = 0; i < 80; ++i) ramp[i] = i;
  EXPECT_EQ(smooth_curve(ramp), (std::vector<double>{19.5, 59.5}));
  EXPECT_TRUE(smooth_curve(std::vector<double>{}, 3).empty());
  EXPECT_THROW(smooth_curve(v, 0), ConfigError);
}

TEST(TrainConfig, JsonRoundTripAndValidation) {
  TrainConfig cfg = test::tiny_config();
  cfg.direction = Direction::kSketchToPhoto;
  cfg.discriminator_learning_rate = 1e-5;
  cfg.loss.alpha = 0.3;
  TrainConfig back;
  back.apply_json(nlohmann::json::parse(cfg.to_json().dump()));
  EXPECT_EQ(back, cfg);

  TrainConfig other;
  EXPECT_THROW(other.apply_json(nlohmann::json{{"train.bogus", 1}}), ConfigError);
  EXPECT_THROW(other.apply_json(nlohmann::json{{"train.direction", "sideways"}}), ConfigError);

  cfg = test::tiny_config();
  cfg.stages = 3;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = test::tiny_config();
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = test::tiny_config();
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = test::tiny_config();
  cfg.loss.alpha = -0.1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_NO_THROW(test::tiny_config().validate());
}

TEST(TrainConfig, ChannelsFollowDirection) {
  TrainConfig cfg = test::tiny_config();
  EXPECT_EQ(cfg.net_config(1).in_channels_appearance, 3);
  EXPECT_EQ(cfg.net_config(1).out_channels, 1);
  EXPECT_EQ(cfg.net_config(2).stage, Stage::kTwo);
  cfg.direction = Direction::kSketchToPhoto;
  EXPECT_EQ(cfg.net_config(1).in_channels_appearance, 1);
  EXPECT_EQ(cfg.net_config(1).out_channels, 3);
}

TEST(BatchIndices, SeededPerEpochPermutation) {
  TrainConfig cfg = test::tiny_config();
  cfg.batch_size = 3;
  EXPECT_EQ(iterations_per_epoch(cfg, 10), 4);
  std::vector<int> seen;
  for (int t = 0; t < 4; ++t) {
    const auto idx = batch_indices(cfg, 10, t);
    seen.insert(seen.end(), idx.begin(), idx.end());
  }
  EXPECT_EQ(batch_indices(cfg, 10, 3).size(), 1u);
  std::sort(seen.begin(), seen.end());
  for (int i = 0; i < 10; ++i) EXPECT_EQ(seen[i], i);
  EXPECT_EQ(batch_indices(cfg, 10, 5), batch_indices(cfg, 10, 5));
  EXPECT_THROW(batch_indices(cfg, 0, 0), DataError);
}

TEST(TrainStep, UpdateOrderAndIsolation) {
  const auto samples = procedural_set(1);
  TrainState state(test::tiny_config(2));
  std::vector<std::string> order;
  Hashes before = hashes(state);
  bool isolated = true;
  train_step(state, samples[0], [&](std::string_view net) {
    order.emplace_back(net);
    const Hashes now = hashes(state);
    const bool g1 = now.g1 != before.g1, d1 = now.d1 != before.d1, g2 = now.g2 != before.g2, d2 = now.d2 != before.d2;
    const int changed = g1 + d1 + g2 + d2;
    isolated = isolated && changed == 1 && ((net == "D1" && d1) || (net == "D2" && d2) || (net == "G1" && g1) ||
                                            (net == "G2" && g2));
    before = now;
  });
  EXPECT_EQ(order, (std::vector<std::string>{"D1", "D2", "G1", "G2"}));
  EXPECT_TRUE(isolated);
  EXPECT_EQ(state.iteration, 1);
  ASSERT_EQ(state.log.size(), 1u);
  EXPECT_EQ(state.log[0].stages, 2);
}

TEST(TrainStep, SingleStageUpdatesOnlyStageOne) {
  const auto samples = procedural_set(1);
  TrainState state(test::tiny_config(1));
  std::vector<std::string> order;
  train_step(state, samples[0], [&](std::string_view net) { order.emplace_back(net); });
  EXPECT_EQ(order, (std::vector<std::string>{"D1", "G1"}));
  EXPECT_THROW(state.generator(2), StageError);
}

TEST(TrainStep, DeterministicAcrossRuns) {
  const auto samples = procedural_set(4);
  TrainConfig cfg = test::tiny_config(2, 17);
  cfg.epochs = 2;
  TrainState a(cfg), b(cfg);
  train_until(a, samples);
  train_until(b, samples);
  ASSERT_EQ(a.log.size(), 8u);
  expect_logs_near(a.log, b.log, 0.0);
  EXPECT_EQ(a.generator(2).parameter_hash(), b.generator(2).parameter_hash());
  EXPECT_EQ(a.epoch, 2);
}

TEST(TrainStep, ZeroDiscriminatorRateFreezesDiscriminators) {
  const auto samples = procedural_set(2);
  TrainConfig cfg = test::tiny_config();
  cfg.discriminator_learning_rate = 0.0;
  TrainState state(cfg);
  const Hashes before = hashes(state);
  train_step(state, samples[0]);
  train_step(state, samples[1]);
  const Hashes after = hashes(state);
  EXPECT_EQ(after.d1, before.d1);
  EXPECT_EQ(after.d2, before.d2);
  EXPECT_NE(after.g1, before.g1);
}

TEST(TrainStep, LambdaZeroIgnoresTarget) {
  const auto samples = procedural_set(1);
  Sample altered = samples[0];
  for (float& v : altered.sketch.values()) v = -v;
  auto g1_grad = [&](double lambda, const Sample& s) {
    TrainConfig cfg = test::tiny_config(1);
    cfg.loss.lambda = lambda;
    TrainState state(cfg);
    const TrainingPair p = as_pair(s, cfg.direction);
    const std::span<const TrainingPair> batch(&p, 1);
    const StageOutputs out = estimate_outputs(state, batch);
    update_generator(state, 1, batch, out);
    return state.generator(1).flat_gradients();
  };
  EXPECT_EQ(g1_grad(0.0, samples[0]), g1_grad(0.0, altered));
  EXPECT_NE(g1_grad(100.0, samples[0]), g1_grad(100.0, altered));
}

TEST(TrainStep, StageTwoObjectiveLeavesStageOneUntouched) {
  const auto samples = procedural_set(1);
  TrainState state(test::tiny_config(2));
  const TrainingPair p = as_pair(samples[0], Direction::kPhotoToSketch);
  const std::span<const TrainingPair> batch(&p, 1);
  const StageOutputs out = estimate_outputs(state, batch);
  state.generator(1).zero_grad();
  const std::uint64_t g1 = state.generator(1).parameter_hash();
  update_generator(state, 2, batch, out);
  for (float v : state.generator(1).flat_gradients()) ASSERT_EQ(v, 0.0f);
  EXPECT_EQ(state.generator(1).parameter_hash(), g1);
}

TEST(TrainStep, LargeLambdaFollowsReconstructionGradient) {
  const auto samples = procedural_set(1);
  TrainConfig cfg = test::tiny_config(1);
  cfg.loss.lambda = 1e6;
  TrainState state(cfg);
  const TrainingPair p = as_pair(samples[0], cfg.direction);
  const std::span<const TrainingPair> batch(&p, 1);
  update_generator(state, 1, batch, estimate_outputs(state, batch));
  const auto combined = state.generator(1).flat_gradients();

  TrainState ref(cfg);
  Generator& g = ref.generator(1);
  const ImageTensor y = g.forward(samples[0].photo, samples[0].masks);
  ImageTensor grad;
  mixed_reconstruction_loss(samples[0].sketch, y, samples[0].masks, cfg.loss, &grad);
  g.zero_grad();
  g.backward(grad);
  EXPECT_GT(cosine(combined, g.flat_gradients()), 0.999);
}

TEST(TrainStep, MinibatchesAverageGradients) {
  const auto samples = procedural_set(2);
  TrainConfig cfg = test::tiny_config(1);
  cfg.batch_size = 2;
  TrainState state(cfg);
  const std::vector<TrainingPair> pairs = {as_pair(samples[0], cfg.direction), as_pair(samples[1], cfg.direction)};
  const IterationLosses rec = train_step(state, pairs);
  EXPECT_TRUE(std::isfinite(rec.stage[0].reconstruction));
  EXPECT_THROW(train_step(state, std::span<const TrainingPair>{}), DataError);
}

TEST(TrainStep, NonFiniteDiscriminatorRaisesDiverged) {
  const auto samples = procedural_set(1);
  TrainState state(test::tiny_config(1));
  Discriminator& d = state.discriminator(1);
  d.set_flat_parameters(std::vector<float>(d.parameter_count(), std::nanf("")));
  try {
    train_step(state, samples[0]);
    FAIL() << "expected DivergedError";
  } catch (const DivergedError& e) {
    EXPECT_NE(std::string(e.what()).find("iteration 1"), std::string::npos);
  }
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  const auto samples = procedural_set(3);
  TrainState state(test::tiny_config());
  train_until(state, samples);
  test::TempDir a("ckpt_a"), b("ckpt_b");
  save_checkpoint(state, a.path());
  const auto loaded = load_checkpoint(a.path());
  EXPECT_EQ(loaded->config(), state.config());
  EXPECT_EQ(loaded->iteration, state.iteration);
  EXPECT_EQ(loaded->epoch, state.epoch);
  save_checkpoint(*loaded, b.path());
  for (const auto& entry : fs::directory_iterator(a.path())) {
    const auto name = entry.path().filename();
    EXPECT_EQ(slurp(entry.path()), slurp(b / name.string())) << name;
  }
  EXPECT_TRUE(fs::exists(a / "g2.bin"));
  EXPECT_TRUE(fs::exists(a / "CHECKSUMS"));
}

TEST(Checkpoint, RejectsMismatchCorruptionAndVersion) {
  TrainState state(test::tiny_config());
  test::TempDir dir("ckpt_bad");
  save_checkpoint(state, dir.path());

  TrainConfig other = test::tiny_config();
  other.base_width = 8;
  EXPECT_THROW(load_checkpoint(dir.path(), other), CheckpointError);
  EXPECT_NO_THROW(load_checkpoint(dir.path(), test::tiny_config()));

  const fs::path g1 = dir / "g1.bin";
  const std::string blob = slurp(g1);
  {
    std::ofstream out(g1, std::ios::binary | std::ios::trunc);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size() / 2));
  }
  EXPECT_THROW(load_checkpoint(dir.path()), IntegrityError);
  {
    std::ofstream out(g1, std::ios::binary | std::ios::trunc);
    out << blob;
  }
  EXPECT_NO_THROW(load_checkpoint(dir.path()));

  auto cfg = nlohmann::json::parse(slurp(dir / "config.json"));
  cfg["format_version"] = kCheckpointVersion + 1;
  {
    std::ofstream out(dir / "config.json", std::ios::trunc);
    out << cfg.dump(2);
  }
  EXPECT_THROW(load_checkpoint(dir.path()), CheckpointError);
  EXPECT_THROW(load_checkpoint(dir / "nowhere"), Error);
}

TEST(Checkpoint, ResumeMatchesUninterruptedTraining) {
  const auto samples = procedural_set(4);
  TrainConfig cfg = test::tiny_config(2, 21);
  cfg.epochs = 3;
  TrainState full(cfg);
  train_until(full, samples, 10);

  TrainState first(cfg);
  train_until(first, samples, 5);
  test::TempDir dir("ckpt_resume");
  save_checkpoint(first, dir.path());
  auto resumed = load_checkpoint(dir.path(), cfg);
  train_until(*resumed, samples, 10);
  expect_logs_near(full.log, resumed->log, 1e-6);
  EXPECT_EQ(full.generator(2).parameter_hash(), resumed->generator(2).parameter_hash());
}

TEST(LossLog, RoundTrip) {
  const auto samples = procedural_set(2);
  TrainState state(test::tiny_config());
  train_until(state, samples);
  test::TempDir dir("losslog");
  write_loss_log(dir / "log.csv", state.log);
  expect_logs_near(read_loss_log(dir / "log.csv"), state.log, 0.0);
}

TEST(Synthesize, DeterministicShapesAndRange) {
  const auto samples = procedural_set(2);
  TrainState state(test::tiny_config());
  train_until(state, samples);
  const ImageTensor a = synthesize(state, samples[0].photo, samples[0].masks);
  const ImageTensor b = synthesize(state, samples[0].photo, samples[0].masks);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.channels(), 1);
  for (float v : a.values()) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }

  TrainConfig rev = test::tiny_config(1);
  rev.direction = Direction::kSketchToPhoto;
  TrainState back(rev);
  EXPECT_EQ(synthesize(back, samples[0].sketch, samples[0].masks).channels(), 3);
  EXPECT_THROW(synthesize(back, samples[0].photo, samples[0].masks), ShapeError);
}

TEST(Training, LoadTrainingSamplesRejectsBadData) {
  TrainConfig cfg = test::tiny_config();
  Manifest empty;
  EXPECT_THROW(load_training_samples(cfg, empty), DataError);
}
