// cagan: dataset preparation, training, synthesis, evaluation, curve export
// and fixture generation for composition-aided face photo/sketch synthesis.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cagan/curves.hpp"
#include "cagan/errors.hpp"
#include "cagan/image_io.hpp"
#include "cagan/manifest.hpp"
#include "cagan/masks.hpp"
#include "cagan/metrics.hpp"
#include "cagan/nlda.hpp"
#include "cagan/padding.hpp"
#include "cagan/procedural.hpp"
#include "cagan/random.hpp"
#include "cagan/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace cagan;

namespace {

int exit_code_for(const std::string& kind) {
  static const std::map<std::string, int> codes = {
      {"IoError", 2},        {"MaskFileMissing", 2},                                                     //
      {"ConfigError", 3},    {"DataError", 3},       {"ShapeError", 3},     {"MaskShapeError", 3},       //
      {"ManifestError", 3},  {"SplitError", 3},      {"PadError", 3},       {"IndexError", 3},           //
      {"StageError", 3},     {"CheckpointError", 3}, {"IntegrityError", 3}, {"UsageError", 3},           //
      {"NumericalError", 4}, {"DivergedError", 4},   {"MatrixError", 4},    {"NullSpaceEmpty", 4}};
  const auto it = codes.find(kind);
  return it == codes.end() ? 1 : it->second;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create directory {}: {}", dir.string(), ec.message()));
}

void write_json(const fs::path& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
}

void write_run_config(const fs::path& dir, const ordered_json& config) { write_json(dir / "run_config.json", config); }

// Every declared output must exist and be non-empty before exit 0.
void require_outputs(const std::vector<fs::path>& paths) {
  for (const auto& p : paths) {
    std::error_code ec;
    if (!fs::is_regular_file(p, ec) || fs::file_size(p, ec) == 0)
      throw IoError(fmt::format("declared output {} was not written", p.string()));
  }
}

// "--set key=value": the value is parsed as JSON when possible, else kept as a string.
ordered_json parse_overrides(const std::vector<std::string>& sets) {
  ordered_json j = ordered_json::object();
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(fmt::format("--set expects key=value, got '{}'", s));
    const std::string key = s.substr(0, eq), text = s.substr(eq + 1);
    ordered_json value = ordered_json::parse(text, nullptr, false);
    j[key] = value.is_discarded() ? ordered_json(text) : value;
  }
  return j;
}

ordered_json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  ordered_json j = ordered_json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError(fmt::format("{} is not a JSON object", path.string()));
  return j;
}

std::string rel(const fs::path& p) { return p.generic_string(); }

// ---------------------------------------------------------------- prepare

struct PrepareArgs {
  std::string manifest;
  std::string out;
  int pad_to = 0;
  bool binarize = false;
  std::string split_scheme;
  std::uint64_t seed = 0;
};

SplitScheme parse_scheme(const std::string& s) {
  if (s == "cufs") return SplitScheme::cufs();
  if (s == "cufsf") return SplitScheme::cufsf();
  if (s.rfind("ratio:", 0) == 0) {
    try {
      return SplitScheme::train_ratio(std::stod(s.substr(6)));
    } catch (const std::exception&) {
    }
  }
  throw ConfigError(fmt::format("unknown split scheme '{}' (cufs, cufsf or ratio:<r>)", s));
}

int cmd_prepare(const PrepareArgs& a) {
  Manifest in = read_manifest(a.manifest);
  check_manifest(in, true);
  if (!a.split_scheme.empty()) in = split_manifest(in, parse_scheme(a.split_scheme), a.seed);
  const fs::path out(a.out);
  make_dir(out / "photos");
  make_dir(out / "sketches");
  make_dir(out / "masks");

  Manifest prepared;
  prepared.base_dir = out;
  std::vector<fs::path> outputs;
  std::int64_t empty_pixels = 0;
  for (const auto& e : in.entries) {
    MaskLoadReport report;
    Sample s = load_sample(in, e, &report);
    empty_pixels += report.empty_pixels;
    ManifestEntry pe = e;
    if (a.pad_to > 0) {
      PadRecord r;
      s.photo = zero_pad(s.photo, a.pad_to, a.pad_to, &r);
      s.sketch = zero_pad(s.sketch, a.pad_to, a.pad_to);
      s.masks = zero_pad(s.masks, a.pad_to, a.pad_to);
      pe.pad = e.pad ? compose(*e.pad, r) : r;
    }
    if (a.binarize) s.masks = binarize(s.masks);
    pe.photo = rel(fs::path("photos") / (e.id + ".png"));
    pe.sketch = rel(fs::path("sketches") / (e.id + ".png"));
    pe.mask_prefix = rel(fs::path("masks") / e.id);
    write_image(out / pe.photo, s.photo);
    write_image(out / pe.sketch, s.sketch);
    save_mask_set(out / pe.mask_prefix, s.masks);
    outputs.push_back(out / pe.photo);
    outputs.push_back(out / pe.sketch);
    for (int c = 0; c < kComponents; ++c) outputs.push_back(mask_file(out / pe.mask_prefix, c));
    prepared.entries.push_back(std::move(pe));
  }
  write_manifest(out / "manifest.jsonl", prepared);
  ordered_json cfg;
  cfg["command"] = "prepare";
  cfg["data.manifest"] = a.manifest;
  cfg["out"] = a.out;
  cfg["prepare.pad_to"] = a.pad_to;
  cfg["prepare.binarize"] = a.binarize;
  cfg["prepare.split_scheme"] = a.split_scheme;
  cfg["prepare.seed"] = a.seed;
  write_run_config(out, cfg);

  outputs.push_back(out / "manifest.jsonl");
  outputs.push_back(out / "run_config.json");
  require_outputs(outputs);
  check_manifest(read_manifest(out / "manifest.jsonl"), true);
  std::cerr << fmt::format("prepared {} entries into {} ({} empty mask pixels made uniform)\n", prepared.entries.size(),
                           out.string(), empty_pixels);
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config_file;
  std::vector<std::string> sets;
  std::string manifest;
  std::string out;
  std::string resume;
  int checkpoint_every = 0;
  std::optional<int> epochs, stages, batch_size, image_size, base_width, depth, log_every;
  std::optional<double> lr, alpha, lambda;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> direction;
};

int cmd_train(const TrainArgs& a) {
  ordered_json merged = a.config_file.empty() ? ordered_json::object() : read_json_file(a.config_file);
  const ordered_json overrides = parse_overrides(a.sets);
  for (const auto& [k, v] : overrides.items()) merged[k] = v;
  if (a.epochs) merged["train.epochs"] = *a.epochs;
  if (a.stages) merged["train.stages"] = *a.stages;
  if (a.batch_size) merged["train.batch_size"] = *a.batch_size;
  if (a.image_size) merged["net.image_size"] = *a.image_size;
  if (a.base_width) merged["net.base_width"] = *a.base_width;
  if (a.depth) merged["net.depth"] = *a.depth;
  if (a.log_every) merged["train.log_every"] = *a.log_every;
  if (a.lr) merged["train.learning_rate"] = *a.lr;
  if (a.alpha) merged["loss.alpha"] = *a.alpha;
  if (a.lambda) merged["loss.lambda"] = *a.lambda;
  if (a.seed) merged["train.seed"] = *a.seed;
  if (a.direction) merged["train.direction"] = *a.direction;
  if (!a.manifest.empty()) merged["data.manifest"] = a.manifest;
  if (!a.out.empty()) merged["out"] = a.out;

  TrainConfig cfg;
  cfg.apply_json(merged);
  cfg.validate();
  if (!merged.contains("data.manifest") || !merged["data.manifest"].is_string())
    throw ConfigError("no manifest given (--manifest or data.manifest)");
  if (!merged.contains("out") || !merged["out"].is_string()) throw ConfigError("no output directory given (--out or out)");
  const fs::path manifest_path = merged["data.manifest"].get<std::string>();
  const fs::path out = merged["out"].get<std::string>();

  ordered_json run = {{"command", "train"}};
  const ordered_json resolved = cfg.to_json();
  for (const auto& [k, v] : resolved.items()) run[k] = v;
  run["data.manifest"] = manifest_path.string();
  run["out"] = out.string();
  run["resume"] = a.resume;
  run["checkpoint_every"] = a.checkpoint_every;

  const Manifest manifest = read_manifest(manifest_path);
  const std::vector<Sample> samples = load_training_samples(cfg, manifest);
  std::unique_ptr<TrainState> state =
      a.resume.empty() ? std::make_unique<TrainState>(cfg) : load_checkpoint(a.resume, cfg);
  make_dir(out);
  write_run_config(out, run);

  const std::int64_t per_epoch = iterations_per_epoch(cfg, samples.size());
  const std::int64_t total = per_epoch * cfg.epochs;
  const auto start = std::chrono::steady_clock::now();
  auto progress = [&](const TrainState& s, const IterationLosses& rec) {
    if (cfg.log_every > 0 && (rec.iteration % cfg.log_every == 0 || rec.iteration == total)) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::string line = fmt::format("iter {}/{} epoch {} {:.1f}s", rec.iteration, total, s.epoch, secs);
      for (int k = 0; k < rec.stages; ++k)
        line += fmt::format(" | s{} recon {:.4f} adv_g {:.4f} adv_d {:.4f}", k + 1, rec.stage[k].reconstruction,
                            rec.stage[k].adversarial_g, rec.stage[k].adversarial_d);
      std::cerr << line << '\n';
    }
    if (a.checkpoint_every > 0 && rec.iteration % (per_epoch * a.checkpoint_every) == 0 && rec.iteration != total)
      save_checkpoint(s, out);
  };
  try {
    train_until(*state, samples, total, progress);
  } catch (const DivergedError&) {
    save_checkpoint(*state, out / "diverged");
    throw;
  }
  save_checkpoint(*state, out);

  require_outputs({out / "run_config.json", out / "config.json", out / "log.csv", out / "CHECKSUMS"});
  load_checkpoint(out);
  std::cerr << fmt::format("trained {} iterations; checkpoint in {}\n", state->iteration, out.string());
  return 0;
}

// ---------------------------------------------------------------- synthesize

struct SynthArgs {
  std::string checkpoint;
  std::string input;
  std::string masks;
  std::string id;
  std::string manifest;
  std::string split = "test";
  std::string out;
  std::string crop;
};

std::optional<PadRecord> parse_crop(const std::string& s) {
  if (s.empty()) return std::nullopt;
  PadRecord r;
  if (std::sscanf(s.c_str(), "%d,%d,%d,%d", &r.top, &r.left, &r.height, &r.width) != 4 || r.height <= 0 ||
      r.width <= 0 || r.top < 0 || r.left < 0)
    throw ConfigError(fmt::format("--crop expects T,L,H,W with positive sizes, got '{}'", s));
  return r;
}

// Pads to the network size when needed, synthesizes, then crops back to the
// network-input region and finally to `original` (if any).
ImageTensor synthesize_cropped(TrainState& state, const ImageTensor& input, const MaskSet& masks,
                               const std::optional<PadRecord>& original) {
  const int size = state.config().image_size;
  ImageTensor x = input;
  MaskSet m = masks;
  std::optional<PadRecord> auto_pad;
  if (x.height() != size || x.width() != size) {
    PadRecord r;
    x = zero_pad(input, size, size, &r);
    m = zero_pad(masks, size, size);
    auto_pad = r;
  }
  ImageTensor y = synthesize(state, x, m);
  if (auto_pad) y = crop(y, *auto_pad);
  if (original) y = crop(y, *original);
  return y;
}

int cmd_synthesize(const SynthArgs& a) {
  const std::unique_ptr<TrainState> state = load_checkpoint(a.checkpoint);
  const TrainConfig& cfg = state->config();
  const std::optional<PadRecord> explicit_crop = parse_crop(a.crop);
  const fs::path out(a.out);
  make_dir(out);
  std::vector<fs::path> outputs;

  if (!a.manifest.empty()) {
    if (!a.input.empty()) throw ConfigError("give either --manifest or --input, not both");
    const Manifest manifest = read_manifest(a.manifest);
    std::vector<const ManifestEntry*> entries;
    if (a.split == "all")
      for (const auto& e : manifest.entries) entries.push_back(&e);
    else
      entries = manifest.with_split(parse_split(a.split));
    if (entries.empty()) throw DataError(fmt::format("manifest has no '{}' entries", a.split));
    for (const ManifestEntry* e : entries) {
      const Sample s = load_sample(manifest, *e);
      const TrainingPair p = as_pair(s, cfg.direction);
      const ImageTensor y = synthesize_cropped(*state, *p.input, *p.masks, explicit_crop ? explicit_crop : e->pad);
      outputs.push_back(out / (e->id + ".png"));
      write_image(outputs.back(), y);
    }
  } else {
    if (a.input.empty() || a.masks.empty()) throw ConfigError("synthesize needs --manifest, or --input and --masks");
    const ImageTensor x = read_image(a.input, cfg.input_channels());
    const MaskSet m = load_mask_set(a.masks);
    const std::string id = a.id.empty() ? fs::path(a.input).stem().string() : a.id;
    outputs.push_back(out / (id + ".png"));
    write_image(outputs.back(), synthesize_cropped(*state, x, m, explicit_crop));
  }

  ordered_json run = {{"command", "synthesize"}, {"checkpoint", a.checkpoint}, {"input", a.input},
                      {"masks", a.masks},        {"manifest", a.manifest},     {"split", a.split},
                      {"out", a.out},            {"crop", a.crop}};
  const ordered_json resolved = cfg.to_json();
  for (const auto& [k, v] : resolved.items()) run[k] = v;
  write_run_config(out, run);
  outputs.push_back(out / "run_config.json");
  require_outputs(outputs);
  for (std::size_t i = 0; i + 1 < outputs.size(); ++i) read_png8(outputs[i]);
  std::cerr << fmt::format("wrote {} image(s) to {}\n", outputs.size() - 1, out.string());
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvalArgs {
  std::string real;
  std::string synth;
  std::string embedder = "randproj";
  bool nlda = false;
  int repeats = 20;
  std::uint64_t seed = 0;
  std::string features_real;
  std::string features_synth;
  std::string out;
};

std::vector<std::string> png_names(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(fmt::format("{} is not a directory", dir.string()));
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png") names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

int cmd_evaluate(const EvalArgs& a) {
  const fs::path real_dir(a.real), synth_dir(a.synth), out(a.out);
  const std::vector<std::string> names = png_names(real_dir);
  if (names.size() < 2) throw DataError(fmt::format("{} holds fewer than two PNG images", real_dir.string()));
  std::vector<ImageTensor> real, synth;
  for (const auto& name : names) {
    if (!fs::exists(synth_dir / name))
      throw DataError(fmt::format("{} has no synthesized counterpart in {}", name, synth_dir.string()));
    const int channels = read_png8(real_dir / name).channels == 1 ? 1 : 3;
    real.push_back(read_image(real_dir / name, channels));
    synth.push_back(read_image(synth_dir / name, channels));
  }

  MetricReport report;
  if (!a.features_real.empty() || !a.features_synth.empty()) {
    if (a.features_real.empty() || a.features_synth.empty())
      throw ConfigError("--features-real and --features-synth must be given together");
    report.fid = frechet_distance(read_feature_file(a.features_real), read_feature_file(a.features_synth));
    report.embedder_id = "file:" + fs::path(a.features_real).filename().string();
  } else {
    const std::unique_ptr<Embedder> embedder = make_embedder(a.embedder);
    report.fid = frechet_distance(embedder->embed_all(real), embedder->embed_all(synth));
    report.embedder_id = embedder->id();
  }
  if (a.nlda) {
    std::vector<int> ids(names.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    RecognitionConfig rc;
    rc.repeats = a.repeats;
    rc.seed = a.seed;
    report.nlda = nlda_recognition(real, synth, ids, rc);
  }
  report.config = {{"command", "evaluate"}, {"real", a.real},       {"synth", a.synth},
                   {"embedder", a.embedder}, {"nlda", a.nlda},     {"repeats", a.repeats},
                   {"seed", a.seed},         {"images", names.size()}, {"features_real", a.features_real},
                   {"features_synth", a.features_synth}};
  make_dir(out);
  write_json(out / "metrics.json", report.to_json());
  write_run_config(out, report.config);
  require_outputs({out / "metrics.json", out / "run_config.json"});
  std::cout << report.to_json().dump() << '\n';
  return 0;
}

// ---------------------------------------------------------------- curves

int cmd_curves(const std::string& log_path, int window, const std::string& out_dir) {
  fs::path log(log_path);
  if (fs::is_directory(log)) log /= "log.csv";
  const std::vector<IterationLosses> entries = read_loss_log(log);
  if (entries.empty()) throw DataError(fmt::format("{} has no loss rows", log.string()));
  const auto smoothed = smooth_curves(loss_curves(entries), window);
  const fs::path out(out_dir);
  make_dir(out);
  write_curves_csv(out / "curves.csv", smoothed, window);
  plot_curves_png(out / "curves.png", smoothed);
  write_run_config(out, {{"command", "curves"}, {"log", log.string()}, {"window", window}, {"out", out_dir}});
  require_outputs({out / "curves.csv", out / "curves.png", out / "run_config.json"});
  read_png8(out / "curves.png");
  return 0;
}

// ---------------------------------------------------------------- gen-synthetic

struct GenArgs {
  int n = 200;
  int size = 64;
  std::uint64_t seed = 0;
  std::string out;
  double train_ratio = 1.0;
  bool hard_masks = false;
};

int cmd_gen_synthetic(const GenArgs& a) {
  if (a.n < 1) throw ConfigError("--n must be >= 1");
  if (!(a.train_ratio >= 0.0 && a.train_ratio <= 1.0)) throw ConfigError("--train-ratio must lie in [0, 1]");
  const fs::path out(a.out);
  make_dir(out / "photos");
  make_dir(out / "sketches");
  make_dir(out / "masks");
  Manifest m;
  m.base_dir = out;
  std::vector<fs::path> outputs;
  ProceduralOptions opts;
  opts.soft_masks = !a.hard_masks;
  for (int i = 0; i < a.n; ++i) {
    Sample s = generate_procedural_sample(mix_seed(a.seed, static_cast<std::uint64_t>(i)), a.size, opts);
    ManifestEntry e;
    e.id = fmt::format("syn_{:05d}", i);
    e.photo = "photos/" + e.id + ".png";
    e.sketch = "sketches/" + e.id + ".png";
    e.mask_prefix = "masks/" + e.id;
    e.source = "procedural";
    write_image(out / e.photo, s.photo);
    write_image(out / e.sketch, s.sketch);
    save_mask_set(out / e.mask_prefix, s.masks);
    outputs.push_back(out / e.photo);
    outputs.push_back(out / e.sketch);
    for (int c = 0; c < kComponents; ++c) outputs.push_back(mask_file(out / e.mask_prefix, c));
    m.entries.push_back(std::move(e));
  }
  if (a.train_ratio < 1.0) m = split_manifest(m, SplitScheme::train_ratio(a.train_ratio), a.seed);
  write_manifest(out / "manifest.jsonl", m);
  write_run_config(out, {{"command", "gen-synthetic"},
                         {"n", a.n},
                         {"size", a.size},
                         {"seed", a.seed},
                         {"train_ratio", a.train_ratio},
                         {"hard_masks", a.hard_masks},
                         {"out", a.out}});
  outputs.push_back(out / "manifest.jsonl");
  outputs.push_back(out / "run_config.json");
  require_outputs(outputs);
  check_manifest(read_manifest(out / "manifest.jsonl"), true);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Composition-aided face photo/sketch synthesis"};
  app.require_subcommand(1);

  PrepareArgs prep;
  auto* prepare = app.add_subcommand("prepare", "Pad, optionally binarize and re-split a dataset");
  prepare->add_option("--manifest", prep.manifest, "Input manifest (JSON lines)")->required();
  prepare->add_option("--out", prep.out, "Output directory")->required();
  prepare->add_option("--pad-to", prep.pad_to, "Zero-pad every image to N x N (0 keeps sizes)")->check(CLI::NonNegativeNumber);
  prepare->add_flag("--binarize", prep.binarize, "Convert soft masks to hard labels");
  prepare->add_option("--split-scheme", prep.split_scheme, "Re-split: cufs, cufsf or ratio:<r>");
  prepare->add_option("--seed", prep.seed, "Seed for the split");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train Stage-I (and Stage-II) networks");
  train_cmd->add_option("config", tr.config_file, "Flat JSON config with dotted keys");
  train_cmd->add_option("--set", tr.sets, "Override a config key: key=value")->take_all();
  train_cmd->add_option("--manifest", tr.manifest, "Training manifest");
  train_cmd->add_option("--out", tr.out, "Checkpoint directory");
  train_cmd->add_option("--resume", tr.resume, "Resume from a checkpoint directory");
  train_cmd->add_option("--checkpoint-every", tr.checkpoint_every, "Save a checkpoint every N epochs");
  train_cmd->add_option("--epochs", tr.epochs);
  train_cmd->add_option("--stages", tr.stages);
  train_cmd->add_option("--batch-size", tr.batch_size);
  train_cmd->add_option("--image-size", tr.image_size);
  train_cmd->add_option("--base-width", tr.base_width);
  train_cmd->add_option("--depth", tr.depth);
  train_cmd->add_option("--log-every", tr.log_every);
  train_cmd->add_option("--lr", tr.lr);
  train_cmd->add_option("--alpha", tr.alpha);
  train_cmd->add_option("--lambda", tr.lambda);
  train_cmd->add_option("--seed", tr.seed);
  train_cmd->add_option("--direction", tr.direction, "photo2sketch or sketch2photo");

  SynthArgs sy;
  auto* synth_cmd = app.add_subcommand("synthesize", "Run trained generators");
  synth_cmd->add_option("--checkpoint", sy.checkpoint)->required();
  synth_cmd->add_option("--input", sy.input, "Input image (photo, or sketch for sketch2photo)");
  synth_cmd->add_option("--masks", sy.masks, "Mask prefix (<prefix>.c<k>.png)");
  synth_cmd->add_option("--id", sy.id, "Output name for --input");
  synth_cmd->add_option("--manifest", sy.manifest, "Synthesize every entry of a split");
  synth_cmd->add_option("--split", sy.split, "train, test or all");
  synth_cmd->add_option("--out", sy.out, "Output directory")->required();
  synth_cmd->add_option("--crop", sy.crop, "Crop T,L,H,W instead of the recorded padding");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "FID and NLDA recognition of synthesized images");
  eval_cmd->add_option("--real", ev.real, "Directory of real target images")->required();
  eval_cmd->add_option("--synth", ev.synth, "Directory of synthesized images (same file names)")->required();
  eval_cmd->add_option("--embedder", ev.embedder, "randproj[:dim[:seed]] or pixel[:size]");
  eval_cmd->add_flag("--nlda", ev.nlda, "Also run the NLDA recognition protocol");
  eval_cmd->add_option("--repeats", ev.repeats);
  eval_cmd->add_option("--seed", ev.seed);
  eval_cmd->add_option("--features-real", ev.features_real, "EMB1 feature file for FID");
  eval_cmd->add_option("--features-synth", ev.features_synth, "EMB1 feature file for FID");
  eval_cmd->add_option("--out", ev.out, "Report directory")->required();

  std::string log_path, curves_out;
  int window = 40;
  auto* curves_cmd = app.add_subcommand("curves", "Smoothed loss curves from log.csv");
  curves_cmd->add_option("log", log_path, "log.csv or a checkpoint directory")->required();
  curves_cmd->add_option("--window", window, "Block size for averaging")->check(CLI::PositiveNumber);
  curves_cmd->add_option("--out", curves_out)->required();

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "Write a procedural fixture dataset");
  gen_cmd->add_option("--n", gen.n);
  gen_cmd->add_option("--size", gen.size, "32, 64 or 128");
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--out", gen.out)->required();
  gen_cmd->add_option("--train-ratio", gen.train_ratio, "Share of samples marked train");
  gen_cmd->add_flag("--hard-masks", gen.hard_masks, "One-hot masks instead of soft labels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: UsageError: " << e.what() << '\n';
    return exit_code_for("UsageError");
  }

  try {
    if (*prepare) return cmd_prepare(prep);
    if (*train_cmd) return cmd_train(tr);
    if (*synth_cmd) return cmd_synthesize(sy);
    if (*eval_cmd) return cmd_evaluate(ev);
    if (*curves_cmd) return cmd_curves(log_path, window, curves_out);
    if (*gen_cmd) return cmd_gen_synthetic(gen);
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: InternalError: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
