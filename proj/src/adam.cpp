#include "cagan/adam.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "cagan/errors.hpp"

namespace cagan {

Adam::Adam(const AdamConfig& config, std::vector<ParamBlock*> params) : config_(config), params_(std::move(params)) {
  for (const auto* p : params_) {
    m_.emplace_back(p->value.size(), 0.0f);
    v_.emplace_back(p->value.size(), 0.0f);
  }
}

void Adam::step() {
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const float lr = static_cast<float>(config_.learning_rate / c1);
  const float inv_c2 = static_cast<float>(1.0 / c2);
  const float eps = static_cast<float>(config_.epsilon);
  const float fb1 = static_cast<float>(b1), fb2 = static_cast<float>(b2);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    float* w = params_[k]->value.data();
    const float* g = params_[k]->grad.data();
    float* m = m_[k].data();
    float* v = v_[k].data();
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(m_[k].size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      m[i] = fb1 * m[i] + (1.0f - fb1) * g[i];
      v[i] = fb2 * v[i] + (1.0f - fb2) * g[i] * g[i];
      w[i] -= lr * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
    }
  }
}

void Adam::save(std::ostream& out) const {
  const std::uint64_t blocks = m_.size();
  out.write(reinterpret_cast<const char*>(&steps_), sizeof(steps_));
  out.write(reinterpret_cast<const char*>(&blocks), sizeof(blocks));
  for (std::size_t k = 0; k < m_.size(); ++k) {
    const std::uint64_t n = m_[k].size();
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(m_[k].data()), static_cast<std::streamsize>(n * sizeof(float)));
    out.write(reinterpret_cast<const char*>(v_[k].data()), static_cast<std::streamsize>(n * sizeof(float)));
  }
}

void Adam::load(std::istream& in) {
  std::int64_t steps = 0;
  std::uint64_t blocks = 0;
  in.read(reinterpret_cast<char*>(&steps), sizeof(steps));
  in.read(reinterpret_cast<char*>(&blocks), sizeof(blocks));
  if (!in || blocks != m_.size()) throw CheckpointError("optimizer state does not match the network layout");
  for (std::size_t k = 0; k < m_.size(); ++k) {
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (!in || n != m_[k].size()) throw CheckpointError("optimizer block size mismatch");
    in.read(reinterpret_cast<char*>(m_[k].data()), static_cast<std::streamsize>(n * sizeof(float)));
    in.read(reinterpret_cast<char*>(v_[k].data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (!in) throw IntegrityError("optimizer state truncated");
  }
  steps_ = steps;
}

}  // namespace cagan
