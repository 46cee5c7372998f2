#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cagan/datamodel.hpp"
#include "cagan/masks.hpp"
#include "cagan/padding.hpp"

namespace cagan {

// One line of a manifest file. Paths are stored as written; relative paths
// resolve against the manifest's directory.
struct ManifestEntry {
  std::string id;
  std::string photo;
  std::string sketch;
  std::string mask_prefix;
  Split split = Split::kTrain;
  std::string source;             // optional dataset tag, e.g. "cufsf" or "cufs:ar"
  std::optional<PadRecord> pad;   // set by `prepare`

  bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& path) const;
  std::vector<const ManifestEntry*> with_split(Split split) const;
};

// JSON-lines: one object per line with keys id, photo, sketch, mask_prefix,
// split, and optional source / pad. Ids must be unique.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

// Throws ManifestError for duplicate ids, IoError/MaskFileMissing for files
// that do not exist.
void check_manifest(const Manifest& manifest, bool check_files = true);

// Reads the photo (3 channels), sketch (1 channel) and mask stack of an entry.
Sample load_sample(const Manifest& manifest, const ManifestEntry& entry, MaskLoadReport* report = nullptr);

struct SplitScheme {
  enum class Kind { kCufs, kCufsf, kRatio };
  Kind kind = Kind::kRatio;
  double ratio = 1.0;

  static SplitScheme cufs() { return {Kind::kCufs, 0.0}; }
  static SplitScheme cufsf() { return {Kind::kCufsf, 0.0}; }
  static SplitScheme train_ratio(double r) { return {Kind::kRatio, r}; }
};

// Reassigns split tags with a seeded shuffle.
//   cufs  : 268 train (88 cuhk / 80 ar / 100 xm2vts when entries carry
//           "cufs:<subset>" tags, otherwise 268 drawn from all), rest test
//   cufsf : 250 train, rest test
//   ratio : floor(r * N) train, rest test
Manifest split_manifest(const Manifest& manifest, const SplitScheme& scheme, std::uint64_t seed);

}  // namespace cagan
