#include "saec/kernels.hpp"

#include <algorithm>

namespace saec::kernels::reference {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> out,
            std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += a[i * k + t] * b[t * n + j];
      out[i * n + j] = acc;
    }
  }
}

void conv2d(std::span<const double> input, std::span<const double> kernel, const ConvGeometry& g,
            std::span<double> output) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t f = 0; f < g.out_channels; ++f) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double acc = 0.0;
          for (std::size_t c = 0; c < g.in_channels; ++c) {
            for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
              for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
                auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) - pad;
                auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) - pad;
                if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h) ||
                    ix >= static_cast<std::ptrdiff_t>(g.in_w)) {
                  continue;
                }
                acc += input[((n * g.in_channels + c) * g.in_h + iy) * g.in_w + ix] *
                       kernel[((f * g.in_channels + c) * g.kernel_h + ki) * g.kernel_w + kj];
              }
            }
          }
          output[((n * g.out_channels + f) * oh + oy) * ow + ox] = acc;
        }
      }
    }
  }
}

void conv2d_transpose(std::span<const double> input, std::span<const double> kernel,
                      const ConvGeometry& g, std::span<double> output) {
  // Direct scatter: each input pixel paints a kernel-sized patch.
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  std::fill(output.begin(), output.end(), 0.0);
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t f = 0; f < g.out_channels; ++f) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const double v = input[((n * g.out_channels + f) * oh + oy) * ow + ox];
          for (std::size_t c = 0; c < g.in_channels; ++c) {
            for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
              for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
                auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) - pad;
                auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) - pad;
                if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h) ||
                    ix >= static_cast<std::ptrdiff_t>(g.in_w)) {
                  continue;
                }
                output[((n * g.in_channels + c) * g.in_h + iy) * g.in_w + ix] +=
                    v * kernel[((f * g.in_channels + c) * g.kernel_h + ki) * g.kernel_w + kj];
              }
            }
          }
        }
      }
    }
  }
}

void max_pool2x2(std::span<const double> input, std::size_t planes, std::size_t h, std::size_t w,
                 std::span<double> output) {
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t oy = 0; oy < h / 2; ++oy) {
      for (std::size_t ox = 0; ox < w / 2; ++ox) {
        double best = input[(p * h + 2 * oy) * w + 2 * ox];
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            best = std::max(best, input[(p * h + 2 * oy + dy) * w + 2 * ox + dx]);
          }
        }
        output[(p * (h / 2) + oy) * (w / 2) + ox] = best;
      }
    }
  }
}

}  // namespace saec::kernels::reference
