#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cagan/kernels.hpp"

namespace k = cagan::kernels;

namespace {

std::vector<float> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (float& x : v) x = d(rng);
  return v;
}

double max_rel_diff(const std::vector<float>& a, const std::vector<float>& b) {
  double worst = 0.0, scale = 1e-6;
  for (std::size_t i = 0; i < a.size(); ++i) scale = std::max(scale, static_cast<double>(std::abs(b[i])));
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(static_cast<double>(a[i]) - b[i]));
  return worst / scale;
}

double dot(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

struct GemmCase {
  int m, n, k;
};

}  // namespace

TEST(Gemm, MatchesReferenceForAllTransposes) {
  std::mt19937_64 rng(1);
  const std::vector<GemmCase> cases = {{1, 1, 1}, {7, 13, 5}, {37, 70, 300}, {100, 33, 513}, {6, 32, 256}, {97, 2049, 3}};
  for (const auto& c : cases) {
    for (auto ta : {k::Trans::kNo, k::Trans::kYes}) {
      for (auto tb : {k::Trans::kNo, k::Trans::kYes}) {
        const int lda = ta == k::Trans::kNo ? c.k : c.m;
        const int ldb = tb == k::Trans::kNo ? c.n : c.k;
        const auto a = random_vec(static_cast<std::size_t>(c.m) * c.k, rng);
        const auto b = random_vec(static_cast<std::size_t>(c.k) * c.n, rng);
        auto c_par = random_vec(static_cast<std::size_t>(c.m) * c.n, rng);
        auto c_ref = c_par;
        k::gemm(ta, tb, c.m, c.n, c.k, 0.7f, a.data(), lda, b.data(), ldb, 0.3f, c_par.data(), c.n);
        k::reference::gemm(ta, tb, c.m, c.n, c.k, 0.7f, a.data(), lda, b.data(), ldb, 0.3f, c_ref.data(), c.n);
        EXPECT_LT(max_rel_diff(c_par, c_ref), 1e-5) << c.m << "x" << c.n << "x" << c.k;
      }
    }
  }
}

TEST(Gemm, BetaZeroIgnoresGarbageInOutput) {
  std::mt19937_64 rng(2);
  const auto a = random_vec(12 * 9, rng);
  const auto b = random_vec(9 * 40, rng);
  std::vector<float> c_par(12 * 40, std::nanf("")), c_ref(12 * 40, 0.0f);
  k::gemm(k::Trans::kNo, k::Trans::kNo, 12, 40, 9, 1.0f, a.data(), 9, b.data(), 40, 0.0f, c_par.data(), 40);
  k::reference::gemm(k::Trans::kNo, k::Trans::kNo, 12, 40, 9, 1.0f, a.data(), 9, b.data(), 40, 0.0f, c_ref.data(), 40);
  EXPECT_LT(max_rel_diff(c_par, c_ref), 1e-5);
}

TEST(Gemm, Deterministic) {
  std::mt19937_64 rng(3);
  const auto a = random_vec(130 * 700, rng);
  const auto b = random_vec(700 * 90, rng);
  std::vector<float> c1(130 * 90), c2(130 * 90);
  k::gemm(k::Trans::kNo, k::Trans::kNo, 130, 90, 700, 1.0f, a.data(), 700, b.data(), 90, 0.0f, c1.data(), 90);
  k::gemm(k::Trans::kNo, k::Trans::kNo, 130, 90, 700, 1.0f, a.data(), 700, b.data(), 90, 0.0f, c2.data(), 90);
  EXPECT_EQ(c1, c2);
}

class ConvKernels : public ::testing::TestWithParam<k::ConvGeometry> {};

TEST_P(ConvKernels, ForwardAndBackwardMatchReference) {
  const k::ConvGeometry g = GetParam();
  std::mt19937_64 rng(4);
  const auto x = random_vec(static_cast<std::size_t>(g.in_channels) * g.in_height * g.in_width, rng);
  const auto w = random_vec(static_cast<std::size_t>(g.out_channels) * g.patch(), rng);
  const auto bias = random_vec(static_cast<std::size_t>(g.out_channels), rng);
  const std::size_t out_size = static_cast<std::size_t>(g.out_channels) * g.out_height() * g.out_width();
  std::vector<float> y(out_size), y_ref(out_size);
  k::conv2d_forward(g, x, w, bias, y);
  k::reference::conv2d_forward(g, x, w, bias, y_ref);
  EXPECT_LT(max_rel_diff(y, y_ref), 1e-5);

  const auto gy = random_vec(out_size, rng);
  std::vector<float> gx(x.size()), gw(w.size(), 0.5f), gb(bias.size(), 0.25f);
  std::vector<float> gx_ref(x.size()), gw_ref(w.size(), 0.5f), gb_ref(bias.size(), 0.25f);
  k::conv2d_backward(g, x, w, gy, gx, gw, gb);
  k::reference::conv2d_backward(g, x, w, gy, gx_ref, gw_ref, gb_ref);
  EXPECT_LT(max_rel_diff(gx, gx_ref), 1e-5);
  EXPECT_LT(max_rel_diff(gw, gw_ref), 1e-5);
  EXPECT_LT(max_rel_diff(gb, gb_ref), 1e-5);

  // Adjoint identity <conv(x), gy> = <x, conv^T(gy)> (bias-free).
  std::vector<float> y0(out_size);
  const std::vector<float> zero_bias(bias.size(), 0.0f);
  k::reference::conv2d_forward(g, x, w, zero_bias, y0);
  EXPECT_NEAR(dot(y0, gy), dot(x, gx_ref), 1e-4 * std::max(1.0, std::abs(dot(y0, gy))));
}

INSTANTIATE_TEST_SUITE_P(Geometries, ConvKernels,
                         ::testing::Values(k::ConvGeometry{3, 16, 16, 8, 4, 2, 1}, k::ConvGeometry{5, 9, 7, 6, 4, 2, 1},
                                           k::ConvGeometry{16, 8, 8, 32, 4, 1, 1}, k::ConvGeometry{2, 2, 2, 3, 4, 2, 1},
                                           k::ConvGeometry{4, 11, 11, 1, 3, 1, 0}));

class DeconvKernels : public ::testing::TestWithParam<k::DeconvGeometry> {};

TEST_P(DeconvKernels, ForwardAndBackwardMatchReference) {
  const k::DeconvGeometry g = GetParam();
  std::mt19937_64 rng(5);
  const auto x = random_vec(static_cast<std::size_t>(g.in_channels) * g.in_height * g.in_width, rng);
  const auto w = random_vec(static_cast<std::size_t>(g.in_channels) * g.out_channels * g.kernel * g.kernel, rng);
  const auto bias = random_vec(static_cast<std::size_t>(g.out_channels), rng);
  const std::size_t out_size = static_cast<std::size_t>(g.out_channels) * g.out_height() * g.out_width();
  std::vector<float> y(out_size), y_ref(out_size);
  k::deconv2d_forward(g, x, w, bias, y);
  k::reference::deconv2d_forward(g, x, w, bias, y_ref);
  EXPECT_LT(max_rel_diff(y, y_ref), 1e-5);

  const auto gy = random_vec(out_size, rng);
  std::vector<float> gx(x.size()), gw(w.size(), 0.0f), gb(bias.size(), 0.0f);
  std::vector<float> gx_ref(x.size()), gw_ref(w.size(), 0.0f), gb_ref(bias.size(), 0.0f);
  k::deconv2d_backward(g, x, w, gy, gx, gw, gb);
  k::reference::deconv2d_backward(g, x, w, gy, gx_ref, gw_ref, gb_ref);
  EXPECT_LT(max_rel_diff(gx, gx_ref), 1e-5);
  EXPECT_LT(max_rel_diff(gw, gw_ref), 1e-5);
  EXPECT_LT(max_rel_diff(gb, gb_ref), 1e-5);
}

INSTANTIATE_TEST_SUITE_P(Geometries, DeconvKernels,
                         ::testing::Values(k::DeconvGeometry{8, 4, 4, 3, 4, 2, 1}, k::DeconvGeometry{6, 5, 3, 7, 4, 2, 1},
                                           k::DeconvGeometry{1, 1, 1, 2, 4, 2, 1}));

TEST(Deconv, IsTheAdjointOfConvolution) {
  // A transposed convolution with weight [in][out] equals the input gradient
  // of the convolution from `out` to `in` channels with the same taps.
  std::mt19937_64 rng(6);
  const k::ConvGeometry cg{5, 8, 8, 7, 4, 2, 1};
  const k::DeconvGeometry dg{7, 4, 4, 5, 4, 2, 1};
  const auto w = random_vec(static_cast<std::size_t>(7) * 5 * 16, rng);  // conv [7][5][4][4] == deconv [7][5][4][4]
  const auto gy = random_vec(static_cast<std::size_t>(7) * 4 * 4, rng);
  const std::vector<float> x(5 * 8 * 8, 0.0f);
  std::vector<float> gx(x.size()), unused_w(w.size()), unused_b(7);
  k::reference::conv2d_backward(cg, x, w, gy, gx, unused_w, unused_b);
  std::vector<float> y(5 * 8 * 8);
  const std::vector<float> zero_bias(5, 0.0f);
  k::reference::deconv2d_forward(dg, gy, w, zero_bias, y);
  EXPECT_LT(max_rel_diff(y, gx), 1e-6);
}

TEST(Conv, EmptyGradientSpansAreSkipped) {
  std::mt19937_64 rng(7);
  const k::ConvGeometry g{2, 6, 6, 3, 4, 2, 1};
  const auto x = random_vec(2 * 36, rng);
  const auto w = random_vec(3 * g.patch(), rng);
  const auto gy = random_vec(3 * 9, rng);
  std::vector<float> gw(w.size(), 0.0f);
  k::conv2d_backward(g, x, w, gy, {}, gw, {});
  double norm = 0.0;
  for (float v : gw) norm += std::abs(v);
  EXPECT_GT(norm, 0.0);
}

TEST(Threads, ReportsAtLeastOne) { EXPECT_GE(k::max_threads(), 1); }
