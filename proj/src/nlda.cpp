#include "cagan/nlda.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <set>

#include "cagan/errors.hpp"
#include "cagan/random.hpp"

namespace cagan {

namespace {

// Eigenvectors (columns) of a symmetric matrix, eigenvalues ascending.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> symmetric_eigen(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success) throw MatrixError("eigen-decomposition did not converge");
  return eig;
}

FeatureMatrix gather(const FeatureMatrix& x, const std::vector<Eigen::Index>& rows) {
  FeatureMatrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

}  // namespace

NldaModel nlda_fit(const FeatureMatrix& features, std::span<const int> labels, double tolerance) {
  const Eigen::Index n = features.rows();
  if (static_cast<std::size_t>(n) != labels.size())
    throw ShapeError(fmt::format("{} feature rows but {} labels", n, labels.size()));
  std::map<int, std::vector<Eigen::Index>> classes;
  for (Eigen::Index i = 0; i < n; ++i) classes[labels[static_cast<std::size_t>(i)]].push_back(i);
  if (classes.size() < 2) throw DataError("NLDA needs at least two classes");
  if (!features.allFinite()) throw NumericalError("features contain non-finite values");

  NldaModel model;
  model.mean = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - model.mean.transpose();

  // Range of the total scatter from the N x N Gram matrix.
  const auto gram = symmetric_eigen(centered * centered.transpose());
  const double total_scale = std::max(gram.eigenvalues().maxCoeff(), 0.0);
  if (total_scale <= 0.0) throw DataError("features have no variance");
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < n; ++i)
    if (gram.eigenvalues()(i) > tolerance * total_scale) kept.push_back(i);
  Eigen::MatrixXd u(features.cols(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const Eigen::Index i = kept[k];
    u.col(static_cast<Eigen::Index>(k)) =
        centered.transpose() * gram.eigenvectors().col(i) / std::sqrt(gram.eigenvalues()(i));
  }

  // Within-class scatter in the basis U and its null space.
  const Eigen::MatrixXd z = centered * u;
  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(u.cols(), u.cols());
  std::vector<Eigen::VectorXd> class_means;
  std::vector<double> class_sizes;
  for (const auto& [label, rows] : classes) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(u.cols());
    for (Eigen::Index i : rows) mu += z.row(i).transpose();
    mu /= static_cast<double>(rows.size());
    for (Eigen::Index i : rows) {
      const Eigen::VectorXd d = z.row(i).transpose() - mu;
      within.noalias() += d * d.transpose();
    }
    class_means.push_back(mu);
    class_sizes.push_back(static_cast<double>(rows.size()));
  }
  const auto within_eig = symmetric_eigen(within);
  std::vector<Eigen::Index> null_cols;
  for (Eigen::Index i = 0; i < within.rows(); ++i)
    if (within_eig.eigenvalues()(i) <= tolerance * total_scale) null_cols.push_back(i);
  if (null_cols.empty())
    throw NullSpaceEmpty(fmt::format("within-class scatter has full rank {} inside the total-scatter range "
                                     "(more samples than the feature dimension allows)",
                                     within.rows()));
  Eigen::MatrixXd v(within.rows(), static_cast<Eigen::Index>(null_cols.size()));
  for (std::size_t k = 0; k < null_cols.size(); ++k)
    v.col(static_cast<Eigen::Index>(k)) = within_eig.eigenvectors().col(null_cols[k]);
  model.null_dimension = static_cast<int>(v.cols());

  // Between-class scatter inside the null space; keep its leading directions.
  Eigen::MatrixXd between = Eigen::MatrixXd::Zero(v.cols(), v.cols());
  for (std::size_t k = 0; k < class_means.size(); ++k) {
    const Eigen::VectorXd m = v.transpose() * class_means[k];
    between.noalias() += class_sizes[k] * m * m.transpose();
  }
  const auto between_eig = symmetric_eigen(between);
  const Eigen::Index max_dims = static_cast<Eigen::Index>(classes.size()) - 1;
  std::vector<Eigen::Index> lead;
  for (Eigen::Index i = between.rows() - 1; i >= 0 && static_cast<Eigen::Index>(lead.size()) < max_dims; --i)
    if (between_eig.eigenvalues()(i) > tolerance * total_scale) lead.push_back(i);
  if (lead.empty()) throw DataError("class means coincide inside the within-class null space");
  Eigen::MatrixXd q(v.cols(), static_cast<Eigen::Index>(lead.size()));
  for (std::size_t k = 0; k < lead.size(); ++k) q.col(static_cast<Eigen::Index>(k)) = between_eig.eigenvectors().col(lead[k]);

  model.projection = u * v * q;
  return model;
}

FeatureMatrix nlda_project(const NldaModel& model, const FeatureMatrix& features) {
  if (features.cols() != model.mean.size())
    throw ShapeError(fmt::format("features have {} columns, model expects {}", features.cols(), model.mean.size()));
  return (features.rowwise() - model.mean.transpose()) * model.projection;
}

RecognitionResult nlda_recognition(const FeatureMatrix& real, const FeatureMatrix& synth, std::span<const int> ids,
                                   const RecognitionConfig& config) {
  if (real.rows() != synth.rows() || static_cast<std::size_t>(real.rows()) != ids.size())
    throw ShapeError(fmt::format("{} real rows, {} synthesized rows, {} ids", real.rows(), synth.rows(), ids.size()));
  if (real.cols() != synth.cols()) throw ShapeError("real and synthesized features differ in dimension");
  if (config.repeats < 1) throw ConfigError("repeats must be >= 1");
  if (!(config.fit_fraction > 0.0 && config.fit_fraction < 1.0)) throw ConfigError("fit_fraction must lie in (0, 1)");

  const std::set<int> unique(ids.begin(), ids.end());
  const std::vector<int> identities(unique.begin(), unique.end());
  const int k = static_cast<int>(identities.size());
  const int n_fit = std::max(2, static_cast<int>(std::floor(config.fit_fraction * k)));
  if (k < 4 || k - n_fit < 1)
    throw DataError(fmt::format("{} identities cannot be split into fit and evaluation sets (need >= 4)", k));

  RecognitionResult result;
  for (int r = 0; r < config.repeats; ++r) {
    const std::vector<int> order = seeded_permutation(k, mix_seed(config.seed, static_cast<std::uint64_t>(r)));
    std::set<int> fit_ids;
    for (int i = 0; i < n_fit; ++i) fit_ids.insert(identities[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);

    std::vector<Eigen::Index> fit_rows, eval_rows;
    for (std::size_t i = 0; i < ids.size(); ++i)
      (fit_ids.contains(ids[i]) ? fit_rows : eval_rows).push_back(static_cast<Eigen::Index>(i));

    FeatureMatrix fit(static_cast<Eigen::Index>(2 * fit_rows.size()), real.cols());
    std::vector<int> fit_labels;
    for (std::size_t i = 0; i < fit_rows.size(); ++i) {
      fit.row(static_cast<Eigen::Index>(2 * i)) = real.row(fit_rows[i]);
      fit.row(static_cast<Eigen::Index>(2 * i + 1)) = synth.row(fit_rows[i]);
      fit_labels.push_back(ids[static_cast<std::size_t>(fit_rows[i])]);
      fit_labels.push_back(ids[static_cast<std::size_t>(fit_rows[i])]);
    }
    const NldaModel model = nlda_fit(fit, fit_labels);
    const FeatureMatrix probes = nlda_project(model, gather(real, eval_rows));
    const FeatureMatrix gallery = nlda_project(model, gather(synth, eval_rows));

    int correct = 0;
    for (Eigen::Index p = 0; p < probes.rows(); ++p) {
      Eigen::Index best = 0;
      (gallery.rowwise() - probes.row(p)).rowwise().squaredNorm().minCoeff(&best);
      if (ids[static_cast<std::size_t>(eval_rows[static_cast<std::size_t>(best)])] ==
          ids[static_cast<std::size_t>(eval_rows[static_cast<std::size_t>(p)])])
        ++correct;
    }
    result.accuracies.push_back(static_cast<double>(correct) / static_cast<double>(probes.rows()));
  }
  double sum = 0.0;
  for (double a : result.accuracies) sum += a;
  result.mean = sum / static_cast<double>(result.accuracies.size());
  if (result.accuracies.size() > 1) {
    double ss = 0.0;
    for (double a : result.accuracies) ss += (a - result.mean) * (a - result.mean);
    result.std = std::sqrt(ss / static_cast<double>(result.accuracies.size() - 1));
  }
  return result;
}

RecognitionResult nlda_recognition(std::span<const ImageTensor> real, std::span<const ImageTensor> synth,
                                   std::span<const int> ids, const RecognitionConfig& config) {
  const PixelEmbedder features(config.feature_size);
  return nlda_recognition(features.embed_all(real), features.embed_all(synth), ids, config);
}

}  // namespace cagan
