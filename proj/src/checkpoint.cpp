#include <zlib.h>

#include <charconv>
#include <cstring>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <sstream>

#include "cagan/errors.hpp"
#include "cagan/trainer.hpp"

namespace cagan {

namespace fs = std::filesystem;

namespace {

constexpr char kWeightMagic[4] = {'C', 'A', 'G', 'W'};
constexpr char kOptimMagic[4] = {'C', 'A', 'G', 'O'};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
}

std::uint32_t crc_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

template <class T>
void put(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

std::string weight_blob(const Network& net) {
  const std::vector<float> flat = net.flat_parameters();
  std::string out(kWeightMagic, 4);
  put(out, static_cast<std::uint32_t>(kCheckpointVersion));
  put(out, static_cast<std::uint64_t>(flat.size()));
  out.append(reinterpret_cast<const char*>(flat.data()), flat.size() * sizeof(float));
  return out;
}

void load_weight_blob(Network& net, const std::string& bytes, const std::string& name) {
  constexpr std::size_t header = 4 + sizeof(std::uint32_t) + sizeof(std::uint64_t);
  if (bytes.size() < header || std::memcmp(bytes.data(), kWeightMagic, 4) != 0)
    throw IntegrityError(fmt::format("{}: not a weight file", name));
  std::uint32_t version = 0;
  std::uint64_t count = 0;
  std::memcpy(&version, bytes.data() + 4, sizeof(version));
  std::memcpy(&count, bytes.data() + 8, sizeof(count));
  if (version != kCheckpointVersion)
    throw CheckpointError(fmt::format("{}: format version {} (expected {})", name, version, kCheckpointVersion));
  if (count != net.parameter_count())
    throw CheckpointError(
        fmt::format("{}: parameter_count mismatch ({} stored, {} expected)", name, count, net.parameter_count()));
  if (bytes.size() != header + count * sizeof(float)) throw IntegrityError(fmt::format("{}: truncated", name));
  std::vector<float> flat(count);
  std::memcpy(flat.data(), bytes.data() + header, count * sizeof(float));
  net.set_flat_parameters(flat);
}

std::vector<std::string> checkpoint_files(int stages) {
  std::vector<std::string> files = {"config.json", "g1.bin", "d1.bin"};
  if (stages == 2) {
    files.emplace_back("g2.bin");
    files.emplace_back("d2.bin");
  }
  files.emplace_back("optim.bin");
  files.emplace_back("log.csv");
  return files;
}

std::string format_double(double v) { return fmt::format("{}", v); }

}  // namespace

void write_loss_log(const fs::path& path, std::span<const IterationLosses> log) {
  std::string out = "iteration,stage,loss,value\n";
  for (const auto& rec : log) {
    for (int s = 0; s < rec.stages; ++s) {
      const StageLosses& l = rec.stage[static_cast<std::size_t>(s)];
      out += fmt::format("{},{},recon,{}\n", rec.iteration, s + 1, format_double(l.reconstruction));
      out += fmt::format("{},{},adv_g,{}\n", rec.iteration, s + 1, format_double(l.adversarial_g));
      out += fmt::format("{},{},adv_d,{}\n", rec.iteration, s + 1, format_double(l.adversarial_d));
    }
  }
  write_file(path, out);
}

std::vector<IterationLosses> read_loss_log(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("iteration,stage,loss,value", 0) != 0)
    throw DataError(fmt::format("{}: missing loss log header", path.string()));
  std::vector<IterationLosses> log;
  std::map<std::int64_t, std::size_t> index;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    for (std::string f; std::getline(ls, f, ',');) fields.push_back(f);
    if (fields.size() != 4) throw DataError(fmt::format("{}:{}: expected 4 fields", path.string(), line_no));
    std::int64_t iteration = 0;
    int stage = 0;
    double value = 0.0;
    auto parse = [&](const std::string& s, auto& v) {
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw DataError(fmt::format("{}:{}: bad number '{}'", path.string(), line_no, s));
    };
    parse(fields[0], iteration);
    parse(fields[1], stage);
    if (fields[3] == "nan" || fields[3] == "inf" || fields[3] == "-inf")
      value = fields[3] == "nan" ? std::nan("") : (fields[3] == "inf" ? HUGE_VAL : -HUGE_VAL);
    else
      parse(fields[3], value);
    if (stage < 1 || stage > 2) throw DataError(fmt::format("{}:{}: bad stage {}", path.string(), line_no, stage));
    auto it = index.find(iteration);
    if (it == index.end()) {
      it = index.emplace(iteration, log.size()).first;
      log.push_back({});
      log.back().iteration = iteration;
      log.back().stages = 1;
    }
    IterationLosses& rec = log[it->second];
    rec.stages = std::max(rec.stages, stage);
    StageLosses& l = rec.stage[static_cast<std::size_t>(stage - 1)];
    if (fields[2] == "recon") l.reconstruction = value;
    else if (fields[2] == "adv_g") l.adversarial_g = value;
    else if (fields[2] == "adv_d") l.adversarial_d = value;
    else throw DataError(fmt::format("{}:{}: unknown loss '{}'", path.string(), line_no, fields[2]));
  }
  return log;
}

void save_checkpoint(const TrainState& state, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  const TrainConfig& cfg = state.config();

  nlohmann::ordered_json j;
  j["format_version"] = kCheckpointVersion;
  j["iteration"] = state.iteration;
  j["epoch"] = state.epoch;
  j["config"] = cfg.to_json();
  nlohmann::ordered_json counts;
  for (int s = 1; s <= cfg.stages; ++s) {
    counts[fmt::format("g{}", s)] = state.generator(s).parameter_count();
    counts[fmt::format("d{}", s)] = state.discriminator(s).parameter_count();
  }
  j["parameter_count"] = counts;
  write_file(dir / "config.json", j.dump(2) + "\n");

  std::string optim(kOptimMagic, 4);
  put(optim, static_cast<std::uint32_t>(kCheckpointVersion));
  for (int s = 1; s <= cfg.stages; ++s) {
    write_file(dir / fmt::format("g{}.bin", s), weight_blob(state.generator(s)));
    write_file(dir / fmt::format("d{}.bin", s), weight_blob(state.discriminator(s)));
    std::ostringstream os(std::ios::binary);
    state.generator_optimizer(s).save(os);
    state.discriminator_optimizer(s).save(os);
    optim += os.str();
  }
  write_file(dir / "optim.bin", optim);
  write_loss_log(dir / "log.csv", state.log);

  std::string sums;
  for (const auto& name : checkpoint_files(cfg.stages))
    sums += fmt::format("{:08x}  {}\n", crc_of(read_file(dir / name)), name);
  write_file(dir / "CHECKSUMS", sums);
}

std::unique_ptr<TrainState> load_checkpoint(const fs::path& dir, const std::optional<TrainConfig>& expected) {
  if (!fs::is_directory(dir)) throw IoError(fmt::format("checkpoint directory {} not found", dir.string()));
  const std::string config_text = read_file(dir / "config.json");
  const nlohmann::json meta = nlohmann::json::parse(config_text, nullptr, false);
  if (!meta.is_discarded() && meta.is_object() && meta.contains("format_version")) {
    const auto& v = meta["format_version"];
    if (!v.is_number_integer() || v.get<int>() != kCheckpointVersion)
      throw CheckpointError(fmt::format("checkpoint format_version {} is not supported (expected {})", v.dump(),
                                        kCheckpointVersion));
  }

  // Integrity: every listed file must exist with a matching CRC32.
  std::map<std::string, std::string> contents;
  {
    std::istringstream sums(read_file(dir / "CHECKSUMS"));
    std::string line;
    while (std::getline(sums, line)) {
      if (line.empty()) continue;
      const auto sep = line.find("  ");
      if (sep == std::string::npos) throw IntegrityError("malformed CHECKSUMS line: " + line);
      const std::string name = line.substr(sep + 2);
      std::uint32_t want = 0;
      const auto r = std::from_chars(line.data(), line.data() + sep, want, 16);
      if (r.ec != std::errc()) throw IntegrityError("malformed CHECKSUMS line: " + line);
      if (!fs::exists(dir / name)) throw IntegrityError(fmt::format("{} is missing", name));
      std::string bytes = read_file(dir / name);
      if (crc_of(bytes) != want) throw IntegrityError(fmt::format("{} failed its CRC32 check", name));
      contents.emplace(name, std::move(bytes));
    }
  }
  if (meta.is_discarded() || !meta.is_object()) throw IntegrityError("config.json is not valid JSON");

  TrainConfig stored;
  try {
    stored.apply_json(meta.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("config.json: ") + e.what());
  }
  const TrainConfig cfg = expected ? *expected : stored;
  if (cfg.stages > stored.stages)
    throw CheckpointError(fmt::format("checkpoint has {} stage(s), {} requested", stored.stages, cfg.stages));
  for (const auto& name : checkpoint_files(cfg.stages))
    if (!contents.contains(name)) throw IntegrityError(fmt::format("{} is not covered by CHECKSUMS", name));

  auto state = std::make_unique<TrainState>(cfg);
  for (int s = 1; s <= cfg.stages; ++s) {
    load_weight_blob(state->generator(s), contents.at(fmt::format("g{}.bin", s)), fmt::format("g{}.bin", s));
    load_weight_blob(state->discriminator(s), contents.at(fmt::format("d{}.bin", s)), fmt::format("d{}.bin", s));
  }
  const std::string& optim = contents.at("optim.bin");
  if (optim.size() < 8 || std::memcmp(optim.data(), kOptimMagic, 4) != 0)
    throw IntegrityError("optim.bin: not an optimizer state file");
  std::istringstream is(optim.substr(8), std::ios::binary);
  for (int s = 1; s <= cfg.stages; ++s) {
    state->generator_optimizer(s).load(is);
    state->discriminator_optimizer(s).load(is);
  }
  state->iteration = meta.value("iteration", std::int64_t{0});
  state->epoch = meta.value("epoch", std::int64_t{0});
  state->log = read_loss_log(dir / "log.csv");
  return state;
}

}  // namespace cagan
