#include <cstring>
#include <fmt/format.h>
#include <fstream>
#include <random>

#include "cagan/errors.hpp"
#include "cagan/metrics.hpp"
#include "cagan/random.hpp"

namespace cagan {

namespace {

// m x n matrix whose row i averages the source interval [i n / m, (i + 1) n / m).
Eigen::MatrixXd area_weights(int n, int m) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, n);
  const double step = static_cast<double>(n) / m;
  for (int i = 0; i < m; ++i) {
    const double lo = i * step, hi = (i + 1) * step;
    for (int j = static_cast<int>(lo); j < n && j < hi; ++j) {
      const double overlap = std::min(hi, j + 1.0) - std::max(lo, static_cast<double>(j));
      if (overlap > 0.0) w(i, j) = overlap / step;
    }
  }
  return w;
}

constexpr char kFeatureMagic[4] = {'E', 'M', 'B', '1'};

}  // namespace

Eigen::VectorXd grayscale_features(const ImageTensor& image, int size) {
  if (size < 1) throw ConfigError("feature size must be positive");
  const int h = image.height(), w = image.width(), c = image.channels();
  if (h == 0 || w == 0 || c == 0) throw ShapeError("empty image");
  Eigen::MatrixXd gray(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      if (c == 3)
        v = 0.299 * image.at(0, y, x) + 0.587 * image.at(1, y, x) + 0.114 * image.at(2, y, x);
      else {
        for (int k = 0; k < c; ++k) v += image.at(k, y, x);
        v /= c;
      }
      gray(y, x) = v;
    }
  const Eigen::MatrixXd small = area_weights(h, size) * gray * area_weights(w, size).transpose();
  Eigen::VectorXd out(static_cast<Eigen::Index>(size) * size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) out(y * size + x) = small(y, x);
  return out;
}

FeatureMatrix Embedder::embed_all(std::span<const ImageTensor> images) const {
  if (images.empty()) throw DataError("no images to embed");
  FeatureMatrix out(static_cast<Eigen::Index>(images.size()), dim());
  for (std::size_t i = 0; i < images.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = embed(images[i]).transpose();
  return out;
}

std::string PixelEmbedder::id() const { return fmt::format("pixel{}", size_); }

Eigen::VectorXd PixelEmbedder::embed(const ImageTensor& image) const { return grayscale_features(image, size_); }

RandomProjectionEmbedder::RandomProjectionEmbedder(int dim, std::uint64_t seed, int size)
    : seed_(seed), size_(size) {
  if (dim < 1 || size < 1) throw ConfigError("embedder dimensions must be positive");
  const int in = size * size;
  weights_.resize(dim, in);
  std::mt19937_64 rng(mix_seed(seed, 0xE4B));
  const double scale = 1.0 / std::sqrt(static_cast<double>(in));
  for (int r = 0; r < dim; ++r)
    for (int k = 0; k < in; ++k) weights_(r, k) = scale * standard_normal(rng);
}

std::string RandomProjectionEmbedder::id() const {
  return fmt::format("randproj-d{}-s{}-p{}", weights_.rows(), seed_, size_);
}

Eigen::VectorXd RandomProjectionEmbedder::embed(const ImageTensor& image) const {
  return (weights_ * grayscale_features(image, size_)).array().tanh().matrix();
}

std::unique_ptr<Embedder> make_embedder(const std::string& spec) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = spec.find(':', start);
    parts.push_back(spec.substr(start, colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  auto number = [&](std::size_t i) -> long long {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(parts[i], &used);
      if (used != parts[i].size() || v < 0) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("bad number '{}' in embedder '{}'", parts[i], spec));
    }
  };
  if (parts[0] == "pixel" && parts.size() <= 2)
    return std::make_unique<PixelEmbedder>(parts.size() == 2 ? static_cast<int>(number(1)) : 32);
  if (parts[0] == "randproj" && parts.size() <= 3) {
    const int dim = parts.size() >= 2 ? static_cast<int>(number(1)) : 64;
    const auto seed = parts.size() == 3 ? static_cast<std::uint64_t>(number(2)) : 0;
    return std::make_unique<RandomProjectionEmbedder>(dim, seed);
  }
  throw ConfigError(fmt::format("unknown embedder '{}' (expected pixel[:size] or randproj[:dim[:seed]])", spec));
}

FeatureMatrix read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open feature file {}", path.string()));
  char magic[4];
  std::uint32_t dtype = 0;
  std::uint64_t rows = 0, cols = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&dtype), sizeof(dtype));
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in || std::memcmp(magic, kFeatureMagic, 4) != 0)
    throw DataError(fmt::format("{}: not an EMB1 feature file", path.string()));
  if (dtype != 0) throw DataError(fmt::format("{}: unsupported dtype {}", path.string(), dtype));
  if (rows > (1u << 24) || cols > (1u << 20)) throw DataError(fmt::format("{}: implausible shape", path.string()));
  std::vector<float> data(rows * cols);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!in) throw DataError(fmt::format("{}: truncated feature file", path.string()));
  FeatureMatrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::uint64_t r = 0; r < rows; ++r)
    for (std::uint64_t c = 0; c < cols; ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data[r * cols + c];
  return out;
}

void write_feature_file(const std::filesystem::path& path, const FeatureMatrix& features) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  const std::uint32_t dtype = 0;
  const std::uint64_t rows = static_cast<std::uint64_t>(features.rows());
  const std::uint64_t cols = static_cast<std::uint64_t>(features.cols());
  out.write(kFeatureMagic, 4);
  out.write(reinterpret_cast<const char*>(&dtype), sizeof(dtype));
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  for (Eigen::Index r = 0; r < features.rows(); ++r)
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      const float v = static_cast<float>(features(r, c));
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
}

}  // namespace cagan
