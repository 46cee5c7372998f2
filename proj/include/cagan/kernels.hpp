#pragma once

// Compute kernels behind the convolutional layers.
//
// Two implementations share one interface:
//   cagan::kernels            OpenMP-parallel, packed/blocked GEMM + im2col
//   cagan::kernels::reference serial direct loops, kept as the test oracle
//
// Layout conventions: matrices are row-major; feature maps are C x H x W.
// Both paths are deterministic: the parallel GEMM splits work over output
// tiles only, so every output element sees the same summation order no matter
// how many threads run.

#include <span>

namespace cagan::kernels {

enum class Trans { kNo, kYes };

// Geometry of a square-kernel 2-D convolution on one image.
struct ConvGeometry {
  int in_channels = 0;
  int in_height = 0;
  int in_width = 0;
  int out_channels = 0;
  int kernel = 4;
  int stride = 2;
  int pad = 1;

  int out_height() const { return (in_height + 2 * pad - kernel) / stride + 1; }
  int out_width() const { return (in_width + 2 * pad - kernel) / stride + 1; }
  int patch() const { return in_channels * kernel * kernel; }
};

// Geometry of a transposed convolution (fractionally strided); weight layout
// is [in_channels][out_channels][k][k].
struct DeconvGeometry {
  int in_channels = 0;
  int in_height = 0;
  int in_width = 0;
  int out_channels = 0;
  int kernel = 4;
  int stride = 2;
  int pad = 1;

  int out_height() const { return (in_height - 1) * stride - 2 * pad + kernel; }
  int out_width() const { return (in_width - 1) * stride - 2 * pad + kernel; }
};

// C = alpha * op(A) * op(B) + beta * C, with op(A) M x K and op(B) K x N.
// lda/ldb/ldc are row strides of the stored (untransposed) matrices.
void gemm(Trans trans_a, Trans trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc);

// Unfolds input patches into a (C*k*k) x (Ho*Wo) matrix; out-of-range taps read 0.
void im2col(const float* image, int channels, int height, int width, int kernel, int stride, int pad,
            float* columns);

// Adjoint of im2col: scatters (accumulates) columns back into the image, which
// must be zeroed by the caller when a fresh result is wanted.
void col2im(const float* columns, int channels, int height, int width, int kernel, int stride, int pad,
            float* image);

// y = conv(x, w) + bias. w is [out][in][k][k]; workspace is resized as needed.
void conv2d_forward(const ConvGeometry& g, std::span<const float> input, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> output);

// Accumulates dW and dBias; writes dInput unless it is empty.
void conv2d_backward(const ConvGeometry& g, std::span<const float> input, std::span<const float> weight,
                     std::span<const float> grad_output, std::span<float> grad_input,
                     std::span<float> grad_weight, std::span<float> grad_bias);

void deconv2d_forward(const DeconvGeometry& g, std::span<const float> input, std::span<const float> weight,
                      std::span<const float> bias, std::span<float> output);

void deconv2d_backward(const DeconvGeometry& g, std::span<const float> input, std::span<const float> weight,
                       std::span<const float> grad_output, std::span<float> grad_input,
                       std::span<float> grad_weight, std::span<float> grad_bias);

// Number of OpenMP threads the parallel kernels will use.
int max_threads();

namespace reference {

void gemm(Trans trans_a, Trans trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc);

void conv2d_forward(const ConvGeometry& g, std::span<const float> input, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> output);
void conv2d_backward(const ConvGeometry& g, std::span<const float> input, std::span<const float> weight,
                     std::span<const float> grad_output, std::span<float> grad_input,
                     std::span<float> grad_weight, std::span<float> grad_bias);
void deconv2d_forward(const DeconvGeometry& g, std::span<const float> input, std::span<const float> weight,
                      std::span<const float> bias, std::span<float> output);
void deconv2d_backward(const DeconvGeometry& g, std::span<const float> input, std::span<const float> weight,
                       std::span<const float> grad_output, std::span<float> grad_input,
                       std::span<float> grad_weight, std::span<float> grad_bias);

}  // namespace reference

}  // namespace cagan::kernels
