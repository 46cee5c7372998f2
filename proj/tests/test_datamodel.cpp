#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <set>

#include "cagan/errors.hpp"
#include "cagan/image_io.hpp"
#include "cagan/manifest.hpp"
#include "cagan/masks.hpp"
#include "cagan/padding.hpp"
#include "cagan/procedural.hpp"
#include "support.hpp"

using namespace cagan;
using cagan::test::TempDir;

namespace {

void write_mask_channels(const std::filesystem::path& prefix, int h, int w, const std::vector<std::uint8_t>& per_channel) {
  for (int c = 0; c < kComponents; ++c) {
    Raster8 r{w, h, 1, std::vector<std::uint8_t>(static_cast<std::size_t>(h) * w, per_channel[c])};
    write_png8(mask_file(prefix, c), r);
  }
}

Manifest tagged_manifest(const std::vector<std::pair<std::string, int>>& groups) {
  Manifest m;
  int k = 0;
  for (const auto& [tag, count] : groups)
    for (int i = 0; i < count; ++i) {
      ManifestEntry e;
      e.id = "e" + std::to_string(k++);
      e.photo = e.id + ".png";
      e.sketch = e.id + "_s.png";
      e.mask_prefix = e.id;
      e.source = tag;
      m.entries.push_back(e);
    }
  return m;
}

int count_train(const Manifest& m, const std::string& source = "") {
  int n = 0;
  for (const auto& e : m.entries) n += e.split == Split::kTrain && (source.empty() || e.source == source);
  return n;
}

}  // namespace

TEST(ComponentOrder, IsFixed) {
  EXPECT_EQ(component_name(0), "eyes");
  EXPECT_EQ(component_name(1), "eyebrows");
  EXPECT_EQ(component_name(2), "nose");
  EXPECT_EQ(component_name(3), "lips");
  EXPECT_EQ(component_name(4), "inner-mouth");
  EXPECT_EQ(component_name(5), "facial-skin");
  EXPECT_EQ(component_name(6), "hair");
  EXPECT_EQ(component_name(7), "background");
}

TEST(ImageIo, EightBitMappingAndRoundTrip) {
  TempDir dir("img");
  Raster8 r{4, 2, 1, {0, 64, 127, 128, 200, 254, 255, 1}};
  write_png8(dir / "a.png", r);
  const ImageTensor t = read_image(dir / "a.png", 1);
  EXPECT_EQ(t.channels(), 1);
  EXPECT_FLOAT_EQ(t.at(0, 0, 0), -1.0f);
  EXPECT_FLOAT_EQ(t.at(0, 1, 2), 1.0f);
  EXPECT_NEAR(t.at(0, 0, 2), 127 / 127.5 - 1.0, 1e-6);
  for (float v : t.values()) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }
  write_image(dir / "b.png", t);
  EXPECT_EQ(read_png8(dir / "b.png").pixels, r.pixels);

  const ImageTensor rgb = read_image(dir / "a.png", 3);
  EXPECT_EQ(rgb.channels(), 3);
  EXPECT_EQ(rgb.at(0, 0, 1), rgb.at(2, 0, 1));
}

TEST(ImageIo, MissingFileIsIoError) { EXPECT_THROW(read_image("/nonexistent/x.png", 3), IoError); }

TEST(MaskSet, RejectsOutOfRangeValues) {
  Tensor t(kComponents, 2, 2, 0.125f);
  t.at(0, 0, 0) = 1.5f;
  EXPECT_THROW((MaskSet(t)), Error);
}

TEST(MaskSet, UniformAndFromLabels) {
  const MaskSet u = MaskSet::uniform(3, 5);
  EXPECT_TRUE(u.is_normalized());
  EXPECT_FLOAT_EQ(u.at(4, 2, 3), 0.125f);
  const std::vector<int> labels = {0, 7, 3, 3};
  const MaskSet h = MaskSet::from_labels(labels, 2, 2);
  EXPECT_TRUE(h.is_normalized());
  EXPECT_EQ(h.at(7, 0, 1), 1.0f);
  EXPECT_EQ(h.at(3, 1, 0), 1.0f);
  EXPECT_EQ(h.at(0, 1, 1), 0.0f);
}

TEST(MaskLoading, ConstantThirtyTwoBecomesUniform) {
  TempDir dir("mask");
  write_mask_channels(dir / "m", 3, 3, std::vector<std::uint8_t>(kComponents, 32));
  const MaskSet m = load_mask_set(dir / "m");
  for (int c = 0; c < kComponents; ++c) EXPECT_NEAR(m.at(c, 1, 1), 0.125, 1e-6);
}

TEST(MaskLoading, SingleFullChannel) {
  TempDir dir("mask");
  std::vector<std::uint8_t> v(kComponents, 0);
  v[6] = 255;
  write_mask_channels(dir / "m", 2, 4, v);
  const MaskSet m = load_mask_set(dir / "m");
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 4; ++x) {
      EXPECT_FLOAT_EQ(m.at(6, y, x), 1.0f);
      EXPECT_FLOAT_EQ(m.at(0, y, x), 0.0f);
    }
}

TEST(MaskLoading, TwoHalfChannels) {
  TempDir dir("mask");
  std::vector<std::uint8_t> v(kComponents, 0);
  v[0] = 128;
  v[1] = 128;
  write_mask_channels(dir / "m", 1, 1, v);
  const MaskSet m = load_mask_set(dir / "m");
  EXPECT_NEAR(m.at(0, 0, 0), 0.5, 1e-7);
  EXPECT_NEAR(m.at(1, 0, 0), 0.5, 1e-7);
  for (int c = 2; c < kComponents; ++c) EXPECT_EQ(m.at(c, 0, 0), 0.0f);
}

TEST(MaskLoading, EmptyPixelsBecomeUniformAndAreCounted) {
  TempDir dir("mask");
  write_mask_channels(dir / "m", 2, 3, std::vector<std::uint8_t>(kComponents, 0));
  MaskLoadReport report;
  const MaskSet m = load_mask_set(dir / "m", kComponents, &report);
  EXPECT_EQ(report.empty_pixels, 6);
  EXPECT_TRUE(m.is_normalized());
  EXPECT_FLOAT_EQ(m.at(5, 1, 2), 0.125f);
}

TEST(MaskLoading, MissingChannelAndShapeMismatch) {
  TempDir dir("mask");
  write_mask_channels(dir / "m", 2, 2, std::vector<std::uint8_t>(kComponents, 10));
  std::filesystem::remove(mask_file(dir / "m", 4));
  EXPECT_THROW(load_mask_set(dir / "m"), MaskFileMissing);
  write_png8(mask_file(dir / "m", 4), Raster8{3, 2, 1, std::vector<std::uint8_t>(6, 10)});
  EXPECT_THROW(load_mask_set(dir / "m"), MaskShapeError);
}

TEST(MaskSaving, SoftMasksReloadToTheSameBytes) {
  TempDir dir("mask");
  std::mt19937_64 rng(11);
  const MaskSet m = test::random_soft_masks(9, 7, rng);
  save_mask_set(dir / "a", m);
  const MaskSet once = load_mask_set(dir / "a");
  EXPECT_TRUE(once.is_normalized());
  save_mask_set(dir / "b", once);
  for (int c = 0; c < kComponents; ++c)
    EXPECT_EQ(read_png8(mask_file(dir / "a", c)).pixels, read_png8(mask_file(dir / "b", c)).pixels);
}

TEST(Binarize, ArgmaxWithLowestIndexTieBreak) {
  Tensor t(kComponents, 1, 2, 0.0f);
  t.at(0, 0, 0) = 0.6f;
  t.at(1, 0, 0) = 0.4f;
  for (int c = 0; c < kComponents; ++c) t.at(c, 0, 1) = 0.125f;
  const MaskSet b = binarize(MaskSet(t));
  EXPECT_EQ(b.at(0, 0, 0), 1.0f);
  EXPECT_EQ(b.at(1, 0, 0), 0.0f);
  EXPECT_EQ(b.at(0, 0, 1), 1.0f);
  for (int c = 1; c < kComponents; ++c) EXPECT_EQ(b.at(c, 0, 1), 0.0f);
}

TEST(Binarize, RowsSumToOne) {
  std::mt19937_64 rng(12);
  const MaskSet b = binarize(test::random_soft_masks(16, 16, rng));
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      float s = 0.0f;
      for (int c = 0; c < kComponents; ++c) s += b.at(c, y, x);
      EXPECT_EQ(s, 1.0f);
    }
}

TEST(ComponentMass, Examples) {
  EXPECT_DOUBLE_EQ(component_mass(MaskSet::uniform(4, 4), 2), 2.0);
  std::vector<int> labels(25, 7);
  for (int i : {0, 3, 8, 13, 24}) labels[i] = 3;
  EXPECT_DOUBLE_EQ(component_mass(MaskSet::from_labels(labels, 5, 5), 3), 5.0);
  EXPECT_THROW(component_mass(MaskSet::uniform(2, 2), 8), IndexError);
  EXPECT_THROW(component_mass(MaskSet::uniform(2, 2), -1), IndexError);
}

TEST(ComponentMass, SumsToPixelCount) {
  std::mt19937_64 rng(13);
  const MaskSet m = test::random_soft_masks(13, 11, rng);
  double total = 0.0;
  for (int c = 0; c < kComponents; ++c) total += component_mass(m, c);
  double brute = 0.0;
  for (float v : m.probabilities().values()) brute += v;
  EXPECT_NEAR(total, 13.0 * 11.0, 1e-4);
  EXPECT_NEAR(total, brute, 1e-6);
}

TEST(Padding, CufsGeometry) {
  const PadRecord r = centered_pad(250, 200, 256, 256);
  EXPECT_EQ(r.top, 3);
  EXPECT_EQ(r.left, 28);
  EXPECT_EQ(r.height, 250);
  EXPECT_EQ(r.width, 200);
  const PadRecord same = centered_pad(64, 64, 64, 64);
  EXPECT_EQ(same.top, 0);
  EXPECT_EQ(same.left, 0);
  EXPECT_THROW(centered_pad(300, 200, 256, 256), PadError);
}

TEST(Padding, PadCropRoundTripIsExact) {
  std::mt19937_64 rng(14);
  const ImageTensor img = test::random_tensor(3, 25, 20, rng);
  PadRecord r;
  const ImageTensor padded = zero_pad(img, 32, 32, &r);
  EXPECT_EQ(padded.height(), 32);
  EXPECT_EQ(padded.at(0, 0, 0), -1.0f);
  EXPECT_EQ(crop(padded, r), img);

  const MaskSet m = test::random_soft_masks(25, 20, rng);
  const MaskSet pm = zero_pad(m, 32, 32);
  EXPECT_TRUE(pm.is_normalized());
  EXPECT_EQ(pm.at(7, 0, 0), 1.0f);
  EXPECT_EQ(crop(pm, r), m);
}

TEST(Padding, ComposeAddsOffsets) {
  const PadRecord inner{3, 28, 250, 200};
  const PadRecord outer{2, 1, 256, 256};
  const PadRecord c = compose(inner, outer);
  EXPECT_EQ(c.top, 5);
  EXPECT_EQ(c.left, 29);
  EXPECT_EQ(c.height, 250);
}

TEST(Manifest, RoundTripWithPadRecord) {
  TempDir dir("manifest");
  Manifest m = tagged_manifest({{"cufs:ar", 3}});
  m.entries[1].pad = PadRecord{3, 28, 250, 200};
  m.entries[2].split = Split::kTest;
  write_manifest(dir / "m.jsonl", m);
  const Manifest back = read_manifest(dir / "m.jsonl");
  EXPECT_EQ(back.entries, m.entries);
  EXPECT_EQ(back.base_dir, dir.path());
}

TEST(Manifest, DuplicateIdsAndMissingFiles) {
  Manifest m = tagged_manifest({{"x", 2}});
  m.entries[1].id = m.entries[0].id;
  EXPECT_THROW(check_manifest(m, false), ManifestError);
  Manifest ok = tagged_manifest({{"x", 1}});
  ok.base_dir = "/nonexistent";
  EXPECT_THROW(check_manifest(ok, true), IoError);
}

TEST(Splits, Cufsf) {
  const Manifest m = split_manifest(tagged_manifest({{"cufsf", 1194}}), SplitScheme::cufsf(), 1);
  EXPECT_EQ(count_train(m), 250);
  EXPECT_EQ(static_cast<int>(m.entries.size()) - count_train(m), 944);
  EXPECT_THROW(split_manifest(tagged_manifest({{"cufs", 300}}), SplitScheme::cufsf(), 1), SplitError);
}

TEST(Splits, CufsSubsets) {
  const Manifest m =
      split_manifest(tagged_manifest({{"cufs:cuhk", 188}, {"cufs:ar", 123}, {"cufs:xm2vts", 295}}), SplitScheme::cufs(), 2);
  EXPECT_EQ(count_train(m, "cufs:cuhk"), 88);
  EXPECT_EQ(count_train(m, "cufs:ar"), 80);
  EXPECT_EQ(count_train(m, "cufs:xm2vts"), 100);
  EXPECT_EQ(count_train(m), 268);
  const Manifest plain = split_manifest(tagged_manifest({{"cufs", 606}}), SplitScheme::cufs(), 2);
  EXPECT_EQ(count_train(plain), 268);
}

TEST(Splits, Ratio) {
  const Manifest all = split_manifest(tagged_manifest({{"x", 10}}), SplitScheme::train_ratio(1.0), 5);
  EXPECT_EQ(count_train(all), 10);
  const Manifest a = split_manifest(tagged_manifest({{"x", 10}}), SplitScheme::train_ratio(0.6), 5);
  const Manifest b = split_manifest(tagged_manifest({{"x", 10}}), SplitScheme::train_ratio(0.6), 5);
  EXPECT_EQ(count_train(a), 6);
  std::set<std::string> ta, tb;
  for (const auto& e : a.entries)
    if (e.split == Split::kTrain) ta.insert(e.id);
  for (const auto& e : b.entries)
    if (e.split == Split::kTrain) tb.insert(e.id);
  EXPECT_EQ(ta, tb);
  EXPECT_THROW(split_manifest(tagged_manifest({{"x", 10}}), SplitScheme::train_ratio(1.5), 5), SplitError);
}

TEST(Procedural, DeterministicAndNormalized) {
  const Sample a = generate_procedural_sample(42, 64);
  const Sample b = generate_procedural_sample(42, 64);
  EXPECT_EQ(a.photo, b.photo);
  EXPECT_EQ(a.sketch, b.sketch);
  EXPECT_EQ(a.masks, b.masks);
  EXPECT_EQ(a.photo.channels(), 3);
  EXPECT_EQ(a.sketch.channels(), 1);
  EXPECT_TRUE(a.masks.is_normalized());
  EXPECT_NO_THROW(validate_sample(a));
  EXPECT_THROW(generate_procedural_sample(1, 48), ConfigError);
}

TEST(Procedural, BackgroundOutweighsEyes) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Sample s = generate_procedural_sample(seed, 64);
    EXPECT_GT(component_mass(s.masks, 7), component_mass(s.masks, 0)) << "seed " << seed;
  }
}

TEST(Procedural, ValidateRejectsShapeMismatch) {
  Sample s = generate_procedural_sample(1, 32);
  s.sketch = ImageTensor(1, 16, 16);
  EXPECT_THROW(validate_sample(s), ShapeError);
}
