#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <vector>

#include "cagan/kernels.hpp"

namespace cagan::kernels {
namespace {

// Micro-tile is kMR rows by kNR columns; kNR is two 16-lane vectors.
constexpr int kMR = 6;
constexpr int kNR = 32;
constexpr int kKC = 256;
constexpr int kMC = 6 * 16;
constexpr int kNC = 32 * 64;

typedef float v16 __attribute__((vector_size(64)));

struct FreeDeleter {
  void operator()(float* p) const { std::free(p); }
};

// Grow-only 64-byte aligned scratch buffer.
class AlignedScratch {
 public:
  float* get(std::size_t count) {
    if (count > capacity_) {
      std::size_t bytes = ((count * sizeof(float) + 63) / 64) * 64;
      float* raw = static_cast<float*>(std::aligned_alloc(64, bytes));
      if (raw == nullptr) throw std::bad_alloc();
      ptr_.reset(raw);
      capacity_ = bytes / sizeof(float);
    }
    return ptr_.get();
  }

 private:
  std::unique_ptr<float, FreeDeleter> ptr_;
  std::size_t capacity_ = 0;
};

inline float load_op(Trans t, const float* m, int ld, int row, int col) {
  return t == Trans::kNo ? m[static_cast<std::size_t>(row) * ld + col]
                         : m[static_cast<std::size_t>(col) * ld + row];
}

// Packs op(A)[i0 : i0+mc, p0 : p0+kc] into kMR-row panels, k-major inside.
void pack_a(Trans t, const float* a, int lda, int i0, int mc, int p0, int kc, float* dst) {
  const int panels = (mc + kMR - 1) / kMR;
#pragma omp parallel for schedule(static)
  for (int panel = 0; panel < panels; ++panel) {
    float* out = dst + static_cast<std::size_t>(panel) * kMR * kc;
    const int r0 = panel * kMR;
    for (int p = 0; p < kc; ++p) {
      for (int r = 0; r < kMR; ++r) {
        const int row = r0 + r;
        out[p * kMR + r] = row < mc ? load_op(t, a, lda, i0 + row, p0 + p) : 0.0f;
      }
    }
  }
}

// Packs op(B)[p0 : p0+kc, j0 : j0+nc] into kNR-column panels.
void pack_b(Trans t, const float* b, int ldb, int p0, int kc, int j0, int nc, float* dst) {
  const int panels = (nc + kNR - 1) / kNR;
#pragma omp parallel for schedule(static)
  for (int panel = 0; panel < panels; ++panel) {
    float* out = dst + static_cast<std::size_t>(panel) * kNR * kc;
    const int c0 = panel * kNR;
    const int width = std::min(kNR, nc - c0);
    for (int p = 0; p < kc; ++p) {
      float* row = out + p * kNR;
      if (t == Trans::kNo) {
        const float* src = b + static_cast<std::size_t>(p0 + p) * ldb + j0 + c0;
        std::memcpy(row, src, sizeof(float) * width);
      } else {
        for (int c = 0; c < width; ++c) row[c] = b[static_cast<std::size_t>(j0 + c0 + c) * ldb + p0 + p];
      }
      for (int c = width; c < kNR; ++c) row[c] = 0.0f;
    }
  }
}

void micro_kernel(int kc, const float* __restrict ap, const float* __restrict bp, float* __restrict acc) {
  v16 c00 = {}, c01 = {}, c10 = {}, c11 = {}, c20 = {}, c21 = {};
  v16 c30 = {}, c31 = {}, c40 = {}, c41 = {}, c50 = {}, c51 = {};
  for (int p = 0; p < kc; ++p) {
    const v16 b0 = *reinterpret_cast<const v16*>(bp);
    const v16 b1 = *reinterpret_cast<const v16*>(bp + 16);
    c00 += ap[0] * b0;
    c01 += ap[0] * b1;
    c10 += ap[1] * b0;
    c11 += ap[1] * b1;
    c20 += ap[2] * b0;
    c21 += ap[2] * b1;
    c30 += ap[3] * b0;
    c31 += ap[3] * b1;
    c40 += ap[4] * b0;
    c41 += ap[4] * b1;
    c50 += ap[5] * b0;
    c51 += ap[5] * b1;
    ap += kMR;
    bp += kNR;
  }
  v16* out = reinterpret_cast<v16*>(acc);
  out[0] = c00;
  out[1] = c01;
  out[2] = c10;
  out[3] = c11;
  out[4] = c20;
  out[5] = c21;
  out[6] = c30;
  out[7] = c31;
  out[8] = c40;
  out[9] = c41;
  out[10] = c50;
  out[11] = c51;
}

void scale_c(int m, int n, float beta, float* c, int ldc) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    float* row = c + static_cast<std::size_t>(i) * ldc;
    if (beta == 0.0f) {
      std::fill(row, row + n, 0.0f);
    } else {
      for (int j = 0; j < n; ++j) row[j] *= beta;
    }
  }
}

thread_local AlignedScratch g_im2col_scratch;
thread_local AlignedScratch g_grad_scratch;

}  // namespace

int max_threads() { return omp_get_max_threads(); }

void gemm(Trans trans_a, Trans trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
  if (m <= 0 || n <= 0) return;
  if (k <= 0 || alpha == 0.0f) {
    if (beta != 1.0f) scale_c(m, n, beta, c, ldc);
    return;
  }
  thread_local AlignedScratch packed_a;
  thread_local AlignedScratch packed_b;

  for (int jc = 0; jc < n; jc += kNC) {
    const int nc = std::min(kNC, n - jc);
    const int b_panels = (nc + kNR - 1) / kNR;
    for (int pc = 0; pc < k; pc += kKC) {
      const int kc = std::min(kKC, k - pc);
      const float beta_block = pc == 0 ? beta : 1.0f;
      float* bp = packed_b.get(static_cast<std::size_t>(b_panels) * kNR * kc);
      pack_b(trans_b, b, ldb, pc, kc, jc, nc, bp);

      for (int ic = 0; ic < m; ic += kMC) {
        const int mc = std::min(kMC, m - ic);
        const int a_panels = (mc + kMR - 1) / kMR;
        float* ap = packed_a.get(static_cast<std::size_t>(a_panels) * kMR * kc);
        pack_a(trans_a, a, lda, ic, mc, pc, kc, ap);

        const int tiles = a_panels * b_panels;
#pragma omp parallel for schedule(static)
        for (int tile = 0; tile < tiles; ++tile) {
          const int ir = tile / b_panels;
          const int jr = tile % b_panels;
          alignas(64) float acc[kMR * kNR];
          micro_kernel(kc, ap + static_cast<std::size_t>(ir) * kMR * kc,
                       bp + static_cast<std::size_t>(jr) * kNR * kc, acc);
          const int rows = std::min(kMR, mc - ir * kMR);
          const int cols = std::min(kNR, nc - jr * kNR);
          for (int r = 0; r < rows; ++r) {
            float* crow = c + static_cast<std::size_t>(ic + ir * kMR + r) * ldc + jc + jr * kNR;
            const float* arow = acc + r * kNR;
            if (beta_block == 0.0f) {
              for (int j = 0; j < cols; ++j) crow[j] = alpha * arow[j];
            } else if (beta_block == 1.0f) {
              for (int j = 0; j < cols; ++j) crow[j] += alpha * arow[j];
            } else {
              for (int j = 0; j < cols; ++j) crow[j] = beta_block * crow[j] + alpha * arow[j];
            }
          }
        }
      }
    }
  }
}

void im2col(const float* image, int channels, int height, int width, int kernel, int stride, int pad,
            float* columns) {
  const int out_h = (height + 2 * pad - kernel) / stride + 1;
  const int out_w = (width + 2 * pad - kernel) / stride + 1;
  const int rows = channels * kernel * kernel;
#pragma omp parallel for schedule(static)
  for (int row = 0; row < rows; ++row) {
    const int kx = row % kernel;
    const int ky = (row / kernel) % kernel;
    const int ch = row / (kernel * kernel);
    const float* src = image + static_cast<std::size_t>(ch) * height * width;
    float* dst = columns + static_cast<std::size_t>(row) * out_h * out_w;
    for (int oy = 0; oy < out_h; ++oy) {
      const int iy = oy * stride - pad + ky;
      float* drow = dst + oy * out_w;
      if (iy < 0 || iy >= height) {
        std::fill(drow, drow + out_w, 0.0f);
        continue;
      }
      const float* srow = src + static_cast<std::size_t>(iy) * width;
      for (int ox = 0; ox < out_w; ++ox) {
        const int ix = ox * stride - pad + kx;
        drow[ox] = (ix >= 0 && ix < width) ? srow[ix] : 0.0f;
      }
    }
  }
}

void col2im(const float* columns, int channels, int height, int width, int kernel, int stride, int pad,
            float* image) {
  const int out_h = (height + 2 * pad - kernel) / stride + 1;
  const int out_w = (width + 2 * pad - kernel) / stride + 1;
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < channels; ++ch) {
    float* dst = image + static_cast<std::size_t>(ch) * height * width;
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const int row = (ch * kernel + ky) * kernel + kx;
        const float* src = columns + static_cast<std::size_t>(row) * out_h * out_w;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= height) continue;
          float* drow = dst + static_cast<std::size_t>(iy) * width;
          const float* srow = src + oy * out_w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < width) drow[ix] += srow[ox];
          }
        }
      }
    }
  }
}

namespace {

void add_bias(std::span<const float> bias, int channels, std::size_t plane, float* out) {
  if (bias.empty()) return;
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < channels; ++ch) {
    float* p = out + ch * plane;
    const float b = bias[ch];
    for (std::size_t i = 0; i < plane; ++i) p[i] += b;
  }
}

void accumulate_bias_grad(std::span<const float> grad_output, int channels, std::size_t plane,
                          std::span<float> grad_bias) {
  if (grad_bias.empty()) return;
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < channels; ++ch) {
    const float* p = grad_output.data() + ch * plane;
    double sum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) sum += p[i];
    grad_bias[ch] += static_cast<float>(sum);
  }
}

}  // namespace

void conv2d_forward(const ConvGeometry& g, std::span<const float> input, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> output) {
  const int out_hw = g.out_height() * g.out_width();
  float* columns = g_im2col_scratch.get(static_cast<std::size_t>(g.patch()) * out_hw);
  im2col(input.data(), g.in_channels, g.in_height, g.in_width, g.kernel, g.stride, g.pad, columns);
  gemm(Trans::kNo, Trans::kNo, g.out_channels, out_hw, g.patch(), 1.0f, weight.data(), g.patch(), columns,
       out_hw, 0.0f, output.data(), out_hw);
  add_bias(bias, g.out_channels, out_hw, output.data());
}

void conv2d_backward(const ConvGeometry& g, std::span<const float> input, std::span<const float> weight,
                     std::span<const float> grad_output, std::span<float> grad_input,
                     std::span<float> grad_weight, std::span<float> grad_bias) {
  const int out_hw = g.out_height() * g.out_width();
  const std::size_t col_size = static_cast<std::size_t>(g.patch()) * out_hw;
  accumulate_bias_grad(grad_output, g.out_channels, out_hw, grad_bias);
  if (!grad_weight.empty()) {
    float* columns = g_im2col_scratch.get(col_size);
    im2col(input.data(), g.in_channels, g.in_height, g.in_width, g.kernel, g.stride, g.pad, columns);
    gemm(Trans::kNo, Trans::kYes, g.out_channels, g.patch(), out_hw, 1.0f, grad_output.data(), out_hw,
         columns, out_hw, 1.0f, grad_weight.data(), g.patch());
  }
  if (!grad_input.empty()) {
    float* grad_columns = g_grad_scratch.get(col_size);
    gemm(Trans::kYes, Trans::kNo, g.patch(), out_hw, g.out_channels, 1.0f, weight.data(), g.patch(),
         grad_output.data(), out_hw, 0.0f, grad_columns, out_hw);
    std::fill(grad_input.begin(), grad_input.end(), 0.0f);
    col2im(grad_columns, g.in_channels, g.in_height, g.in_width, g.kernel, g.stride, g.pad, grad_input.data());
  }
}

void deconv2d_forward(const DeconvGeometry& g, std::span<const float> input, std::span<const float> weight,
                      std::span<const float> bias, std::span<float> output) {
  const int in_hw = g.in_height * g.in_width;
  const int taps = g.out_channels * g.kernel * g.kernel;
  float* columns = g_im2col_scratch.get(static_cast<std::size_t>(taps) * in_hw);
  gemm(Trans::kYes, Trans::kNo, taps, in_hw, g.in_channels, 1.0f, weight.data(), taps, input.data(), in_hw,
       0.0f, columns, in_hw);
  std::fill(output.begin(), output.end(), 0.0f);
  col2im(columns, g.out_channels, g.out_height(), g.out_width(), g.kernel, g.stride, g.pad, output.data());
  add_bias(bias, g.out_channels, static_cast<std::size_t>(g.out_height()) * g.out_width(), output.data());
}

void deconv2d_backward(const DeconvGeometry& g, std::span<const float> input, std::span<const float> weight,
                       std::span<const float> grad_output, std::span<float> grad_input,
                       std::span<float> grad_weight, std::span<float> grad_bias) {
  const int in_hw = g.in_height * g.in_width;
  const int taps = g.out_channels * g.kernel * g.kernel;
  accumulate_bias_grad(grad_output, g.out_channels, static_cast<std::size_t>(g.out_height()) * g.out_width(),
                       grad_bias);
  float* grad_columns = g_grad_scratch.get(static_cast<std::size_t>(taps) * in_hw);
  im2col(grad_output.data(), g.out_channels, g.out_height(), g.out_width(), g.kernel, g.stride, g.pad,
         grad_columns);
  if (!grad_input.empty()) {
    gemm(Trans::kNo, Trans::kNo, g.in_channels, in_hw, taps, 1.0f, weight.data(), taps, grad_columns, in_hw,
         0.0f, grad_input.data(), in_hw);
  }
  if (!grad_weight.empty()) {
    gemm(Trans::kNo, Trans::kYes, g.in_channels, taps, in_hw, 1.0f, input.data(), in_hw, grad_columns, in_hw,
         1.0f, grad_weight.data(), taps);
  }
}

}  // namespace cagan::kernels
