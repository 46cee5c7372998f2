#include "cagan/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fmt/format.h>

#include "cagan/errors.hpp"

namespace cagan {

GaussianStats gaussian_stats(const FeatureMatrix& features) {
  const Eigen::Index n = features.rows();
  if (n < 2) throw DataError(fmt::format("need at least 2 feature rows for a covariance, got {}", n));
  if (!features.allFinite()) throw NumericalError("features contain non-finite values");
  GaussianStats s;
  s.mean = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - s.mean.transpose();
  s.covariance = (centered.transpose() * centered) / static_cast<double>(n - 1);
  s.covariance = 0.5 * (s.covariance + s.covariance.transpose()).eval();
  return s;
}

Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw MatrixError(fmt::format("matrix is {}x{}, not square", m.rows(), m.cols()));
  if (!m.allFinite()) throw MatrixError("matrix contains non-finite values");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) throw MatrixError("matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success) throw MatrixError("eigen-decomposition did not converge");
  const Eigen::VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.mean.size() != b.mean.size() || a.covariance.rows() != b.covariance.rows())
    throw ShapeError(fmt::format("feature dimensions differ: {} vs {}", a.mean.size(), b.mean.size()));
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const Eigen::MatrixXd root_a = matrix_sqrt_psd(a.covariance);
  Eigen::MatrixXd inner = root_a * b.covariance * root_a;
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw MatrixError("eigen-decomposition did not converge");
  const double cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double d = mean_term + a.covariance.trace() + b.covariance.trace() - 2.0 * cross;
  if (!std::isfinite(d)) throw NumericalError("Frechet distance is not finite");
  if (d < -1e-6) throw NumericalError(fmt::format("Frechet distance is negative ({})", d));
  return std::max(d, 0.0);
}

double frechet_distance(const FeatureMatrix& a, const FeatureMatrix& b) {
  return frechet_distance(gaussian_stats(a), gaussian_stats(b));
}

nlohmann::ordered_json MetricReport::to_json() const {
  nlohmann::ordered_json j;
  j["fid"] = fid;
  if (nlda) {
    j["nlda"] = {{"mean", nlda->mean}, {"std", nlda->std}, {"repeats", nlda->accuracies.size()}};
  } else {
    j["nlda"] = nullptr;
  }
  j["embedder_id"] = embedder_id;
  j["config"] = config;
  return j;
}

}  // namespace cagan
