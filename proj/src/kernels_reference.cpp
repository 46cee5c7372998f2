// Serial direct-loop kernels. Slow on purpose: no packing, no im2col, double
// accumulators. They exist to check the parallel path in tests and benchmarks.

#include <algorithm>
#include <vector>

#include "cagan/kernels.hpp"

namespace cagan::kernels::reference {

void gemm(Trans trans_a, Trans trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double sum = 0.0;
      for (int p = 0; p < k; ++p) {
        const float av = trans_a == Trans::kNo ? a[i * lda + p] : a[p * lda + i];
        const float bv = trans_b == Trans::kNo ? b[p * ldb + j] : b[j * ldb + p];
        sum += static_cast<double>(av) * bv;
      }
      float& out = c[i * ldc + j];
      out = static_cast<float>(alpha * sum + (beta == 0.0f ? 0.0 : static_cast<double>(beta) * out));
    }
  }
}

void conv2d_forward(const ConvGeometry& g, std::span<const float> input, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> output) {
  const int oh = g.out_height(), ow = g.out_width(), k = g.kernel;
  for (int co = 0; co < g.out_channels; ++co) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double sum = bias.empty() ? 0.0 : bias[co];
        for (int ci = 0; ci < g.in_channels; ++ci) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * g.stride - g.pad + ky;
            if (iy < 0 || iy >= g.in_height) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * g.stride - g.pad + kx;
              if (ix < 0 || ix >= g.in_width) continue;
              sum += static_cast<double>(weight[((co * g.in_channels + ci) * k + ky) * k + kx]) *
                     input[(ci * g.in_height + iy) * g.in_width + ix];
            }
          }
        }
        output[(co * oh + oy) * ow + ox] = static_cast<float>(sum);
      }
    }
  }
}

void conv2d_backward(const ConvGeometry& g, std::span<const float> input, std::span<const float> weight,
                     std::span<const float> grad_output, std::span<float> grad_input,
                     std::span<float> grad_weight, std::span<float> grad_bias) {
  const int oh = g.out_height(), ow = g.out_width(), k = g.kernel;
  std::fill(grad_input.begin(), grad_input.end(), 0.0f);
  for (int co = 0; co < g.out_channels; ++co) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const float go = grad_output[(co * oh + oy) * ow + ox];
        if (!grad_bias.empty()) grad_bias[co] += go;
        for (int ci = 0; ci < g.in_channels; ++ci) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * g.stride - g.pad + ky;
            if (iy < 0 || iy >= g.in_height) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * g.stride - g.pad + kx;
              if (ix < 0 || ix >= g.in_width) continue;
              const int wi = ((co * g.in_channels + ci) * k + ky) * k + kx;
              const int xi = (ci * g.in_height + iy) * g.in_width + ix;
              if (!grad_weight.empty()) grad_weight[wi] += go * input[xi];
              if (!grad_input.empty()) grad_input[xi] += go * weight[wi];
            }
          }
        }
      }
    }
  }
}

void deconv2d_forward(const DeconvGeometry& g, std::span<const float> input, std::span<const float> weight,
                      std::span<const float> bias, std::span<float> output) {
  const int oh = g.out_height(), ow = g.out_width(), k = g.kernel;
  std::vector<double> acc(output.size(), 0.0);
  for (int co = 0; co < g.out_channels; ++co) {
    for (int i = 0; i < oh * ow; ++i) acc[co * oh * ow + i] = bias.empty() ? 0.0 : bias[co];
  }
  for (int ci = 0; ci < g.in_channels; ++ci) {
    for (int iy = 0; iy < g.in_height; ++iy) {
      for (int ix = 0; ix < g.in_width; ++ix) {
        const double x = input[(ci * g.in_height + iy) * g.in_width + ix];
        for (int co = 0; co < g.out_channels; ++co) {
          for (int ky = 0; ky < k; ++ky) {
            const int oy = iy * g.stride - g.pad + ky;
            if (oy < 0 || oy >= oh) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ox = ix * g.stride - g.pad + kx;
              if (ox < 0 || ox >= ow) continue;
              acc[(co * oh + oy) * ow + ox] += x * weight[((ci * g.out_channels + co) * k + ky) * k + kx];
            }
          }
        }
      }
    }
  }
  std::transform(acc.begin(), acc.end(), output.begin(), [](double v) { return static_cast<float>(v); });
}

void deconv2d_backward(const DeconvGeometry& g, std::span<const float> input, std::span<const float> weight,
                       std::span<const float> grad_output, std::span<float> grad_input,
                       std::span<float> grad_weight, std::span<float> grad_bias) {
  const int oh = g.out_height(), ow = g.out_width(), k = g.kernel;
  if (!grad_bias.empty()) {
    for (int co = 0; co < g.out_channels; ++co) {
      double sum = 0.0;
      for (int i = 0; i < oh * ow; ++i) sum += grad_output[co * oh * ow + i];
      grad_bias[co] += static_cast<float>(sum);
    }
  }
  for (int ci = 0; ci < g.in_channels; ++ci) {
    for (int iy = 0; iy < g.in_height; ++iy) {
      for (int ix = 0; ix < g.in_width; ++ix) {
        const int xi = (ci * g.in_height + iy) * g.in_width + ix;
        double gx = 0.0;
        for (int co = 0; co < g.out_channels; ++co) {
          for (int ky = 0; ky < k; ++ky) {
            const int oy = iy * g.stride - g.pad + ky;
            if (oy < 0 || oy >= oh) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ox = ix * g.stride - g.pad + kx;
              if (ox < 0 || ox >= ow) continue;
              const int wi = ((ci * g.out_channels + co) * k + ky) * k + kx;
              const float go = grad_output[(co * oh + oy) * ow + ox];
              gx += static_cast<double>(go) * weight[wi];
              if (!grad_weight.empty()) grad_weight[wi] += go * input[xi];
            }
          }
        }
        if (!grad_input.empty()) grad_input[xi] = static_cast<float>(gx);
      }
    }
  }
}

}  // namespace cagan::kernels::reference
