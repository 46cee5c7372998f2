#include "cagan/manifest.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "cagan/errors.hpp"
#include "cagan/image_io.hpp"
#include "cagan/random.hpp"
#include "json.hpp"

namespace cagan {

using ordered_json = nlohmann::ordered_json;

std::filesystem::path Manifest::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<const ManifestEntry*> Manifest::with_split(Split split) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    if (e.split == split) out.push_back(&e);
  }
  return out;
}

namespace {

std::string required_string(const ordered_json& obj, const char* key, int line) {
  if (!obj.contains(key) || !obj[key].is_string()) {
    throw ManifestError("manifest line " + std::to_string(line) + ": missing string key '" + key + "'");
  }
  return obj[key].get<std::string>();
}

}  // namespace

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  Manifest m;
  m.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ordered_json obj;
    try {
      obj = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ManifestError("manifest line " + std::to_string(number) + ": " + e.what());
    }
    ManifestEntry e;
    e.id = required_string(obj, "id", number);
    e.photo = required_string(obj, "photo", number);
    e.sketch = required_string(obj, "sketch", number);
    e.mask_prefix = required_string(obj, "mask_prefix", number);
    e.split = parse_split(required_string(obj, "split", number));
    if (obj.contains("source")) e.source = obj["source"].get<std::string>();
    if (obj.contains("pad")) {
      const auto& p = obj["pad"];
      e.pad = PadRecord{p.at("top").get<int>(), p.at("left").get<int>(), p.at("height").get<int>(),
                        p.at("width").get<int>()};
    }
    m.entries.push_back(std::move(e));
  }
  check_manifest(m, false);
  return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  for (const auto& e : manifest.entries) {
    ordered_json obj;
    obj["id"] = e.id;
    obj["photo"] = e.photo;
    obj["sketch"] = e.sketch;
    obj["mask_prefix"] = e.mask_prefix;
    obj["split"] = std::string(split_name(e.split));
    if (!e.source.empty()) obj["source"] = e.source;
    if (e.pad) {
      obj["pad"] = {{"top", e.pad->top}, {"left", e.pad->left}, {"height", e.pad->height}, {"width", e.pad->width}};
    }
    out << obj.dump() << '\n';
  }
  if (!out) throw IoError("failed writing manifest '" + path.string() + "'");
}

void check_manifest(const Manifest& manifest, bool check_files) {
  std::set<std::string> ids;
  for (const auto& e : manifest.entries) {
    if (e.id.empty()) throw ManifestError("manifest entry with empty id");
    if (!ids.insert(e.id).second) throw ManifestError("duplicate manifest id '" + e.id + "'");
    if (!check_files) continue;
    for (const auto* p : {&e.photo, &e.sketch}) {
      if (!std::filesystem::exists(manifest.resolve(*p))) {
        throw IoError("entry '" + e.id + "': missing file '" + manifest.resolve(*p).string() + "'");
      }
    }
    for (int c = 0; c < kComponents; ++c) {
      const auto f = mask_file(manifest.resolve(e.mask_prefix), c);
      if (!std::filesystem::exists(f)) {
        throw MaskFileMissing("entry '" + e.id + "': missing mask file '" + f.string() + "'");
      }
    }
  }
}

Sample load_sample(const Manifest& manifest, const ManifestEntry& entry, MaskLoadReport* report) {
  Sample s;
  s.id = entry.id;
  s.split = entry.split;
  s.source = entry.source;
  s.photo = read_image(manifest.resolve(entry.photo), 3);
  s.sketch = read_image(manifest.resolve(entry.sketch), 1);
  s.masks = load_mask_set(manifest.resolve(entry.mask_prefix), kComponents, report);
  validate_sample(s);
  return s;
}

namespace {

// Marks the first `count` entries of a seeded permutation of `members` as train.
void assign_train(Manifest& m, const std::vector<int>& members, int count, std::uint64_t seed) {
  const auto order = seeded_permutation(static_cast<int>(members.size()), seed);
  for (int i = 0; i < count; ++i) m.entries[members[order[i]]].split = Split::kTrain;
}

}  // namespace

Manifest split_manifest(const Manifest& manifest, const SplitScheme& scheme, std::uint64_t seed) {
  Manifest out = manifest;
  for (auto& e : out.entries) e.split = Split::kTest;
  const int n = static_cast<int>(out.entries.size());
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);

  switch (scheme.kind) {
    case SplitScheme::Kind::kRatio: {
      if (!(scheme.ratio >= 0.0 && scheme.ratio <= 1.0)) throw SplitError("split ratio must lie in [0, 1]");
      if (n == 0) throw SplitError("cannot split an empty manifest");
      assign_train(out, all, static_cast<int>(std::floor(scheme.ratio * n)), seed);
      break;
    }
    case SplitScheme::Kind::kCufsf: {
      for (const auto& e : out.entries) {
        if (e.source != "cufsf") throw SplitError("entry '" + e.id + "' lacks source tag 'cufsf'");
      }
      if (n < 250) throw SplitError("cufsf split needs at least 250 entries, got " + std::to_string(n));
      assign_train(out, all, 250, seed);
      break;
    }
    case SplitScheme::Kind::kCufs: {
      // Per-subset training counts of the standard CUFS partition.
      const std::map<std::string, int> subsets = {{"cufs:cuhk", 88}, {"cufs:ar", 80}, {"cufs:xm2vts", 100}};
      std::map<std::string, std::vector<int>> groups;
      for (int i = 0; i < n; ++i) {
        const auto& src = out.entries[i].source;
        if (src != "cufs" && !subsets.contains(src)) {
          throw SplitError("entry '" + out.entries[i].id + "' lacks a cufs source tag");
        }
        groups[src].push_back(i);
      }
      if (groups.size() == 1 && groups.contains("cufs")) {
        if (n < 268) throw SplitError("cufs split needs at least 268 entries, got " + std::to_string(n));
        assign_train(out, all, 268, seed);
        break;
      }
      if (groups.contains("cufs")) throw SplitError("cufs manifest mixes subset tags with plain 'cufs' tags");
      std::uint64_t stream = 0;
      for (const auto& [name, count] : subsets) {
        const auto& members = groups[name];
        if (static_cast<int>(members.size()) < count) {
          throw SplitError("cufs subset '" + name + "' needs " + std::to_string(count) + " entries, got " +
                           std::to_string(members.size()));
        }
        assign_train(out, members, count, mix_seed(seed, stream++));
      }
      break;
    }
  }
  return out;
}

}  // namespace cagan
