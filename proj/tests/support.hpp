#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cagan/datamodel.hpp"
#include "cagan/masks.hpp"
#include "cagan/trainer.hpp"

namespace cagan::test {

inline Tensor random_tensor(int c, int h, int w, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> dist(lo, hi);
  Tensor t(c, h, w);
  for (float& v : t.values()) v = dist(rng);
  return t;
}

inline MaskSet random_soft_masks(int h, int w, std::mt19937_64& rng, int components = kComponents) {
  return renormalize(random_tensor(components, h, w, rng, 0.01f, 1.0f));
}

inline std::vector<int> random_labels(int h, int w, std::mt19937_64& rng, int components = kComponents) {
  std::uniform_int_distribution<int> dist(0, components - 1);
  std::vector<int> labels(static_cast<std::size_t>(h) * w);
  for (int& l : labels) l = dist(rng);
  return labels;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("cagan_" + name + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& child) const { return path_ / child; }

 private:
  std::filesystem::path path_;
};

// Small, fast configuration for unit tests.
inline TrainConfig tiny_config(int stages = 2, std::uint64_t seed = 3) {
  TrainConfig cfg;
  cfg.stages = stages;
  cfg.epochs = 1;
  cfg.image_size = 32;
  cfg.base_width = 4;
  cfg.seed = seed;
  return cfg;
}

}  // namespace cagan::test
