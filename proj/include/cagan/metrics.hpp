#pragma once

// Distribution-level image quality: embeddings, Gaussian statistics and the
// Frechet distance between them.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "cagan/datamodel.hpp"
#include "json.hpp"

namespace cagan {

// One feature vector per row.
using FeatureMatrix = Eigen::MatrixXd;

// Grayscale (BT.601) image resampled to size x size by exact area averaging,
// flattened row-major.
Eigen::VectorXd grayscale_features(const ImageTensor& image, int size = 32);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string id() const = 0;
  virtual int dim() const = 0;
  virtual Eigen::VectorXd embed(const ImageTensor& image) const = 0;

  FeatureMatrix embed_all(std::span<const ImageTensor> images) const;
};

// Raw grayscale pixels at a fixed resolution.
class PixelEmbedder final : public Embedder {
 public:
  explicit PixelEmbedder(int size = 32) : size_(size) {}
  std::string id() const override;
  int dim() const override { return size_ * size_; }
  Eigen::VectorXd embed(const ImageTensor& image) const override;

 private:
  int size_;
};

// tanh(W x) with a seeded Gaussian W (variance 1/input_dim) applied to
// grayscale_features(image, size). A stand-in for a pretrained network.
class RandomProjectionEmbedder final : public Embedder {
 public:
  RandomProjectionEmbedder(int dim = 64, std::uint64_t seed = 0, int size = 32);
  std::string id() const override;
  int dim() const override { return static_cast<int>(weights_.rows()); }
  Eigen::VectorXd embed(const ImageTensor& image) const override;

 private:
  std::uint64_t seed_;
  int size_;
  Eigen::MatrixXd weights_;
};

// Builds "pixel", "pixel:<size>", "randproj", "randproj:<dim>" or
// "randproj:<dim>:<seed>". ConfigError for anything else.
std::unique_ptr<Embedder> make_embedder(const std::string& spec);

// Feature file: "EMB1", u32 dtype (0 = float32), u64 rows, u64 cols, then
// rows * cols little-endian floats, row-major.
FeatureMatrix read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, const FeatureMatrix& features);

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // unbiased, symmetrized
};

// DataError for fewer than two rows.
GaussianStats gaussian_stats(const FeatureMatrix& features);

// Principal square root of a symmetric PSD matrix via eigen-decomposition,
// eigenvalues clamped at 0. MatrixError when the input is not symmetric
// (relative tolerance 1e-8) or not finite.
Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m);

// |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2). Round-off
// negatives down to -1e-6 are clamped to 0; anything lower is a NumericalError.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);
double frechet_distance(const FeatureMatrix& a, const FeatureMatrix& b);

struct RecognitionResult {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over repeats
  std::vector<double> accuracies;
};

struct MetricReport {
  double fid = 0.0;
  std::optional<RecognitionResult> nlda;
  std::string embedder_id;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();

  nlohmann::ordered_json to_json() const;
};

}  // namespace cagan
