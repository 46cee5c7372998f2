#pragma once

// Null-space linear discriminant analysis and the identity-recognition
// protocol built on it.

#include <cstdint>
#include <span>

#include "cagan/metrics.hpp"

namespace cagan {

struct NldaModel {
  Eigen::VectorXd mean;        // training mean, subtracted before projecting
  Eigen::MatrixXd projection;  // d x k, orthonormal columns
  int null_dimension = 0;      // dimension of the within-class null space used
};

// Fits on rows of `features` with identity `labels`:
//   U = basis of range(S_t), V = null space of U^T S_w U,
//   Q = leading eigenvectors of the between-class scatter in the basis U V,
//   projection = U V Q.
// `tolerance` is relative to the largest eigenvalue in each step. Throws
// NullSpaceEmpty when U^T S_w U has no null space and DataError for fewer than
// two classes.
NldaModel nlda_fit(const FeatureMatrix& features, std::span<const int> labels, double tolerance = 1e-9);

// (x - mean)^T projection for every row.
FeatureMatrix nlda_project(const NldaModel& model, const FeatureMatrix& features);

struct RecognitionConfig {
  int repeats = 20;
  double fit_fraction = 0.6;  // share of identities used to fit the projection
  std::uint64_t seed = 0;
  int feature_size = 32;      // images: grayscale, resampled to this size
};

// Row i of `real` and `synth` both belong to identity `ids[i]`. Every repeat
// splits the identities into fit / eval, fits NLDA on the real and synthesized
// rows of the fit identities, then matches each eval real probe to its
// nearest synthesized gallery row among the eval identities.
RecognitionResult nlda_recognition(const FeatureMatrix& real, const FeatureMatrix& synth, std::span<const int> ids,
                                   const RecognitionConfig& config = {});

// Image overload: vectorized grayscale features at config.feature_size.
RecognitionResult nlda_recognition(std::span<const ImageTensor> real, std::span<const ImageTensor> synth,
                                   std::span<const int> ids, const RecognitionConfig& config = {});

}  // namespace cagan
