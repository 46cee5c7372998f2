#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "cagan/image_io.hpp"
#include "cagan/manifest.hpp"
#include "cagan/masks.hpp"
#include "cagan/procedural.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace cagan;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

CliResult cli(const std::string& args, const fs::path& scratch) {
  const fs::path out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd = quote(CAGAN_CLI_PATH) + " " + args + " >" + quote(out.string()) + " 2>" + quote(err.string());
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string p(const fs::path& path) { return quote(path.string()); }

// Directory tree as (relative path -> bytes), skipping run_config.json.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "run_config.json") continue;
    files[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return files;
}

// Four 250x200 samples with soft masks, written straight to disk.
fs::path write_odd_sized_dataset(const fs::path& dir) {
  Manifest m;
  m.base_dir = dir;
  fs::create_directories(dir);
  for (int i = 0; i < 4; ++i) {
    const Sample big = generate_procedural_sample(static_cast<std::uint64_t>(i), 128);
    const std::string id = "odd" + std::to_string(i);
    // Upsample 2x by pixel replication to 256 then crop to 250x200.
    auto up = [](const Tensor& t) {
      Tensor u(t.channels(), 256, 256);
      for (int c = 0; c < t.channels(); ++c)
        for (int y = 0; y < 256; ++y)
          for (int x = 0; x < 256; ++x) u.at(c, y, x) = t.at(c, y / 2, x / 2);
      return u;
    };
    const PadRecord box{3, 28, 250, 200};
    write_image(dir / (id + "_photo.png"), crop(up(big.photo), box));
    write_image(dir / (id + "_sketch.png"), crop(up(big.sketch), box));
    save_mask_set(dir / (id + "_mask"), crop(MaskSet(up(big.masks.probabilities())), box));
    ManifestEntry e;
    e.id = id;
    e.photo = id + "_photo.png";
    e.sketch = id + "_sketch.png";
    e.mask_prefix = id + "_mask";
    e.split = i < 2 ? Split::kTrain : Split::kTest;
    m.entries.push_back(e);
  }
  write_manifest(dir / "manifest.jsonl", m);
  return dir / "manifest.jsonl";
}

const std::string kTinyTrain = " --image-size 32 --base-width 4 --epochs 1 --log-every 1000 ";

}  // namespace

TEST(Cli, GenSyntheticIsDeterministic) {
  test::TempDir dir("cli_gen");
  ASSERT_EQ(cli("gen-synthetic --n 5 --size 32 --seed 4 --out " + p(dir / "a"), dir.path()).code, 0);
  ASSERT_EQ(cli("gen-synthetic --n 5 --size 32 --seed 4 --out " + p(dir / "b"), dir.path()).code, 0);
  const auto a = tree(dir / "a");
  EXPECT_EQ(a, tree(dir / "b"));
  EXPECT_TRUE(a.contains("manifest.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "a" / "run_config.json"));
  EXPECT_EQ(read_manifest(dir / "a" / "manifest.jsonl").entries.size(), 5u);
  ASSERT_EQ(cli("gen-synthetic --n 5 --size 32 --seed 5 --out " + p(dir / "c"), dir.path()).code, 0);
  EXPECT_NE(a, tree(dir / "c"));
}

TEST(Cli, PrepareTrainSynthesizeRoundTrip) {
  test::TempDir dir("cli_pipeline");
  const fs::path manifest = write_odd_sized_dataset(dir / "raw");

  CliResult r = cli("prepare --manifest " + p(manifest) + " --out " + p(dir / "prep") + " --pad-to 256", dir.path());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "prep" / "run_config.json"));
  const Manifest prepared = read_manifest(dir / "prep" / "manifest.jsonl");
  ASSERT_EQ(prepared.entries.size(), 4u);
  for (const auto& e : prepared.entries) {
    ASSERT_TRUE(e.pad.has_value());
    EXPECT_EQ(*e.pad, (PadRecord{3, 28, 250, 200}));
    const Sample s = load_sample(prepared, e);
    EXPECT_EQ(s.photo.height(), 256);
    EXPECT_EQ(s.photo.width(), 256);
    EXPECT_TRUE(s.masks.is_normalized(1e-2));
  }

  // Preparing the prepared set again changes nothing.
  r = cli("prepare --manifest " + p(dir / "prep" / "manifest.jsonl") + " --out " + p(dir / "prep2") + " --pad-to 256",
          dir.path());
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* sub : {"photos", "sketches", "masks"}) EXPECT_EQ(tree(dir / "prep" / sub), tree(dir / "prep2" / sub));
  EXPECT_EQ(read_manifest(dir / "prep2" / "manifest.jsonl").entries, prepared.entries);

  // Binarized masks hold only 0 and 255.
  r = cli("prepare --manifest " + p(manifest) + " --out " + p(dir / "bin") + " --pad-to 256 --binarize", dir.path());
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& e : fs::directory_iterator(dir / "bin" / "masks")) {
    for (auto v : read_png8(e.path()).pixels) ASSERT_TRUE(v == 0 || v == 255);
  }

  r = cli("train --manifest " + p(dir / "prep" / "manifest.jsonl") + " --out " + p(dir / "ckpt") +
              " --image-size 256 --base-width 2 --depth 3 --epochs 1 --stages 1",
          dir.path());
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"config.json", "g1.bin", "d1.bin", "optim.bin", "log.csv", "CHECKSUMS", "run_config.json"})
    EXPECT_TRUE(fs::exists(dir / "ckpt" / f)) << f;

  r = cli("synthesize --checkpoint " + p(dir / "ckpt") + " --manifest " + p(dir / "prep" / "manifest.jsonl") +
              " --split test --out " + p(dir / "synth"),
          dir.path());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "synth" / "run_config.json"));
  for (const char* id : {"odd2", "odd3"}) {
    const Raster8 img = read_png8(dir / "synth" / (std::string(id) + ".png"));
    EXPECT_EQ(img.height, 250);
    EXPECT_EQ(img.width, 200);
    EXPECT_EQ(img.channels, 1);
  }
  EXPECT_FALSE(fs::exists(dir / "synth" / "odd0.png"));

  // A single unpadded input is padded to the network size and cropped back.
  r = cli("synthesize --checkpoint " + p(dir / "ckpt") + " --input " + p(dir / "raw" / "odd0_photo.png") +
              " --masks " + p(dir / "raw" / "odd0_mask") + " --id single --out " + p(dir / "one"),
          dir.path());
  ASSERT_EQ(r.code, 0) << r.err;
  const Raster8 single = read_png8(dir / "one" / "single.png");
  EXPECT_EQ(single.height, 250);
  EXPECT_EQ(single.width, 200);
}

TEST(Cli, TrainEvaluateCurves) {
  test::TempDir dir("cli_eval");
  ASSERT_EQ(cli("gen-synthetic --n 8 --size 32 --seed 1 --train-ratio 0.5 --out " + p(dir / "data"), dir.path()).code, 0);
  const std::string manifest = p(dir / "data" / "manifest.jsonl");
  CliResult r = cli("train --manifest " + manifest + " --out " + p(dir / "ckpt") + kTinyTrain, dir.path());
  ASSERT_EQ(r.code, 0) << r.err;

  // Resuming to a later epoch continues the same log.
  r = cli("train --resume " + p(dir / "ckpt") + " --manifest " + manifest + " --out " + p(dir / "ckpt2") +
              " --image-size 32 --base-width 4 --epochs 2",
          dir.path());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_GT(slurp(dir / "ckpt2" / "log.csv").size(), slurp(dir / "ckpt" / "log.csv").size());

  r = cli("synthesize --checkpoint " + p(dir / "ckpt") + " --manifest " + manifest + " --split test --out " +
              p(dir / "synth"),
          dir.path());
  ASSERT_EQ(r.code, 0) << r.err;

  r = cli("evaluate --real " + p(dir / "data" / "sketches") + " --synth " + p(dir / "data" / "sketches") +
              " --nlda --repeats 5 --out " + p(dir / "same"),
          dir.path());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto same = nlohmann::json::parse(slurp(dir / "same" / "metrics.json"));
  EXPECT_LE(std::abs(same["fid"].get<double>()), 1e-6);
  EXPECT_EQ(same["nlda"]["mean"].get<double>(), 1.0);
  EXPECT_EQ(same["nlda"]["repeats"].get<int>(), 5);
  EXPECT_EQ(same["embedder_id"], "randproj-d64-s0-p32");
  EXPECT_EQ(nlohmann::json::parse(r.out), same);
  EXPECT_TRUE(fs::exists(dir / "same" / "run_config.json"));

  r = cli("curves " + p(dir / "ckpt2") + " --window 2 --out " + p(dir / "curves"), dir.path());
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir / "curves" / "curves.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "block,first_iteration,stage1.recon,stage1.adv_g,stage1.adv_d,stage2.recon,stage2.adv_g,stage2.adv_d");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 4);  // 8 iterations / window 2
  EXPECT_GT(read_png8(dir / "curves" / "curves.png").width, 0);
  EXPECT_TRUE(fs::exists(dir / "curves" / "run_config.json"));
}

TEST(Cli, ConfigFileAndOverrides) {
  test::TempDir dir("cli_cfg");
  ASSERT_EQ(cli("gen-synthetic --n 2 --size 32 --out " + p(dir / "data"), dir.path()).code, 0);
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"train.epochs": 1, "net.image_size": 32, "net.base_width": 8, "train.stages": 1})";
  }
  CliResult r = cli("train " + p(dir / "cfg.json") + " --set net.base_width=4 loss.alpha=0.5 --manifest " +
                  p(dir / "data" / "manifest.jsonl") + " --out " + p(dir / "ckpt"),
              dir.path());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto cfg = nlohmann::json::parse(slurp(dir / "ckpt" / "config.json"))["config"];
  EXPECT_EQ(cfg["net.base_width"], 4);
  EXPECT_EQ(cfg["loss.alpha"], 0.5);
  EXPECT_EQ(cfg["train.stages"], 1);
  EXPECT_FALSE(fs::exists(dir / "ckpt" / "g2.bin"));

  r = cli("train " + p(dir / "cfg.json") + " --set train.bogus=1 --manifest " + p(dir / "data" / "manifest.jsonl") +
              " --out " + p(dir / "bad"),
          dir.path());
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(r.err.rfind("error: ConfigError: ", 0), 0u) << r.err;
}

TEST(Cli, ErrorsUseKindAndExitCode) {
  test::TempDir dir("cli_err");
  CliResult r = cli("train --manifest " + p(dir / "missing.jsonl") + " --out " + p(dir / "x") + kTinyTrain, dir.path());
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error: IoError: ", 0), 0u) << r.err;

  r = cli("evaluate --real " + p(dir.path()), dir.path());
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(r.err.rfind("error: UsageError: ", 0), 0u) << r.err;

  r = cli("synthesize --checkpoint " + p(dir / "nope") + " --input x.png --masks m --out " + p(dir / "o"), dir.path());
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u) << r.err;

  r = cli("gen-synthetic --n 2 --size 48 --out " + p(dir / "g"), dir.path());
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(r.err.rfind("error: ConfigError: ", 0), 0u) << r.err;

  r = cli("prepare --manifest " + p(dir / "none.jsonl") + " --out " + p(dir / "p") + " --split-scheme ratio:x",
          dir.path());
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u) << r.err;
}
