#include "saec/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>
#include <cstring>
#include <vector>

namespace saec::kernels {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

void im2col_ld(const double* image, const ConvGeometry& g, double* cols, std::size_t ld) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    const double* plane = image + c * g.in_h * g.in_w;
    for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
        double* row = cols + ((c * g.kernel_h + ki) * g.kernel_w + kj) * ld;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) - pad;
          double* dst = row + oy * ow;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) {
            std::fill(dst, dst + ow, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(iy) * g.in_w;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) - pad;
            dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) ? 0.0 : src[ix];
          }
        }
      }
    }
  }
}

void col2im_ld(const double* cols, const ConvGeometry& g, double* image, std::size_t ld) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    double* plane = image + c * g.in_h * g.in_w;
    for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
        const double* row = cols + ((c * g.kernel_h + ki) * g.kernel_w + kj) * ld;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          double* dst = plane + static_cast<std::size_t>(iy) * g.in_w;
          const double* src = row + oy * ow;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) - pad;
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.in_w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

// [N, R, P] -> [R, N*P]
void gather_rows(const double* src, std::size_t n, std::size_t rows, std::size_t pixels, double* dst) {
  const std::size_t ld = n * pixels;
#pragma omp parallel for if (n > 1)
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t r = 0; r < rows; ++r) {
      std::memcpy(dst + r * ld + s * pixels, src + (s * rows + r) * pixels, pixels * sizeof(double));
    }
  }
}

// [R, N*P] -> [N, R, P], overwriting or accumulating.
void scatter_rows(const double* src, std::size_t n, std::size_t rows, std::size_t pixels, double* dst,
                  bool accumulate) {
  const std::size_t ld = n * pixels;
#pragma omp parallel for if (n > 1)
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t r = 0; r < rows; ++r) {
      const double* a = src + r * ld + s * pixels;
      double* b = dst + (s * rows + r) * pixels;
      if (accumulate) {
        for (std::size_t p = 0; p < pixels; ++p) b[p] += a[p];
      } else {
        std::memcpy(b, a, pixels * sizeof(double));
      }
    }
  }
}

}  // namespace

namespace {

// Eigen's vectorized products peel a data-dependent number of leading
// elements to reach an aligned address, which changes the summation order.
// Operands that are not on a max-alignment boundary are staged through
// aligned scratch so results never depend on where the heap put them.
using Scratch = std::vector<double, Eigen::aligned_allocator<double>>;

bool aligned(const double* p) { return reinterpret_cast<std::uintptr_t>(p) % EIGEN_MAX_ALIGN_BYTES == 0; }

const double* staged(std::span<const double> v, Scratch& scratch) {
  if (aligned(v.data())) return v.data();
  scratch.assign(v.begin(), v.end());
  return scratch.data();
}

enum class Layout { nn, tn, nt };

void product(std::span<const double> a, std::span<const double> b, std::span<double> out, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate, Layout layout) {
  thread_local Scratch sa, sb, sc;
  const double* pa = staged(a, sa);
  const double* pb = staged(b, sb);
  double* pc = out.data();
  const bool stage_out = !aligned(pc);
  if (stage_out) {
    if (accumulate) {
      sc.assign(out.begin(), out.end());
    } else {
      sc.resize(out.size());
    }
    pc = sc.data();
  }
  Map C(pc, m, n);
  switch (layout) {
    case Layout::nn: {
      MapC A(pa, m, k), B(pb, k, n);
      if (accumulate) C.noalias() += A * B; else C.noalias() = A * B;
      break;
    }
    case Layout::tn: {
      MapC A(pa, k, m), B(pb, k, n);
      if (accumulate) C.noalias() += A.transpose() * B; else C.noalias() = A.transpose() * B;
      break;
    }
    case Layout::nt: {
      MapC A(pa, m, k), B(pb, n, k);
      if (accumulate) C.noalias() += A * B.transpose(); else C.noalias() = A * B.transpose();
      break;
    }
  }
  if (stage_out) std::copy(sc.begin(), sc.end(), out.begin());
}

}  // namespace

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> out,
          std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  product(a, b, out, m, k, n, accumulate, Layout::nn);
}

void gemm_at_b(std::span<const double> a, std::span<const double> b, std::span<double> out,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  product(a, b, out, m, k, n, accumulate, Layout::tn);
}

void gemm_a_bt(std::span<const double> a, std::span<const double> b, std::span<double> out,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  product(a, b, out, m, k, n, accumulate, Layout::nt);
}

void im2col(const double* image, const ConvGeometry& g, double* cols) {
  im2col_ld(image, g, cols, g.out_pixels());
}

void col2im(const double* cols, const ConvGeometry& g, double* image) {
  col2im_ld(cols, g, image, g.out_pixels());
}

void conv2d_forward(std::span<const double> input, std::span<const double> kernel,
                    const ConvGeometry& g, std::span<double> output, std::vector<double>& cols) {
  const std::size_t P = g.out_pixels(), K = g.patch(), N = g.batch, F = g.out_channels;
  const std::size_t ld = N * P;
  const std::size_t image = g.in_channels * g.in_h * g.in_w;
  cols.resize(K * ld);
#pragma omp parallel for if (N > 1)
  for (std::size_t n = 0; n < N; ++n) {
    im2col_ld(input.data() + n * image, g, cols.data() + n * P, ld);
  }
  std::vector<double> tmp(F * ld);
  gemm(kernel, cols, tmp, F, K, ld);
  scatter_rows(tmp.data(), N, F, P, output.data(), false);
}

void conv2d_backward_input(std::span<const double> grad_out, std::span<const double> kernel,
                           const ConvGeometry& g, std::span<double> grad_input) {
  const std::size_t P = g.out_pixels(), K = g.patch(), N = g.batch, F = g.out_channels;
  const std::size_t ld = N * P;
  const std::size_t image = g.in_channels * g.in_h * g.in_w;
  std::vector<double> gout(F * ld);
  gather_rows(grad_out.data(), N, F, P, gout.data());
  std::vector<double> dcols(K * ld);
  gemm_at_b(kernel, gout, dcols, K, F, ld);
#pragma omp parallel for if (N > 1)
  for (std::size_t n = 0; n < N; ++n) {
    col2im_ld(dcols.data() + n * P, g, grad_input.data() + n * image, ld);
  }
}

void conv2d_backward_kernel(std::span<const double> grad_out, const std::vector<double>& cols,
                            const ConvGeometry& g, std::span<double> grad_kernel) {
  const std::size_t P = g.out_pixels(), K = g.patch(), N = g.batch, F = g.out_channels;
  const std::size_t ld = N * P;
  std::vector<double> gout(F * ld);
  gather_rows(grad_out.data(), N, F, P, gout.data());
  gemm_a_bt(gout, cols, grad_kernel, F, ld, K, true);
}

bool prefer_direct(const ConvGeometry& g) { return g.stride == 1 && g.out_channels <= 4; }

namespace {

// Valid output column range [lo, hi) for kernel column kj.
std::pair<std::size_t, std::size_t> valid_cols(const ConvGeometry& g, std::size_t kj) {
  const std::size_t ow = g.out_w();
  const std::size_t lo = g.padding > kj ? g.padding - kj : 0;
  const std::size_t hi = std::min(ow, g.in_w + g.padding - kj);
  return {lo, std::max(lo, hi)};
}

}  // namespace

void conv2d_direct_forward(std::span<const double> input, std::span<const double> kernel,
                           const ConvGeometry& g, std::span<double> output) {
  const std::size_t oh = g.out_h(), ow = g.out_w(), kk = g.kernel_h * g.kernel_w;
  const std::size_t image = g.in_channels * g.in_h * g.in_w;
#pragma omp parallel for if (g.batch > 1)
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t f = 0; f < g.out_channels; ++f) {
      double* out = output.data() + (n * g.out_channels + f) * oh * ow;
      std::fill(out, out + oh * ow, 0.0);
      for (std::size_t c = 0; c < g.in_channels; ++c) {
        const double* in = input.data() + n * image + c * g.in_h * g.in_w;
        for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
          for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
            const double w = kernel[(f * g.in_channels + c) * kk + ki * g.kernel_w + kj];
            const auto [lo, hi] = valid_cols(g, kj);
            for (std::size_t oy = 0; oy < oh; ++oy) {
              const auto iy = static_cast<std::ptrdiff_t>(oy + ki) - static_cast<std::ptrdiff_t>(g.padding);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
              const double* src = in + static_cast<std::size_t>(iy) * g.in_w + (lo + kj - g.padding);
              double* dst = out + oy * ow + lo;
              for (std::size_t i = 0; i < hi - lo; ++i) dst[i] += w * src[i];
            }
          }
        }
      }
    }
  }
}

void conv2d_direct_backward_input(std::span<const double> grad_out, std::span<const double> kernel,
                                  const ConvGeometry& g, std::span<double> grad_input) {
  const std::size_t oh = g.out_h(), ow = g.out_w(), kk = g.kernel_h * g.kernel_w;
  const std::size_t image = g.in_channels * g.in_h * g.in_w;
#pragma omp parallel for if (g.batch > 1)
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t c = 0; c < g.in_channels; ++c) {
      double* gin = grad_input.data() + n * image + c * g.in_h * g.in_w;
      for (std::size_t f = 0; f < g.out_channels; ++f) {
        const double* gout = grad_out.data() + (n * g.out_channels + f) * oh * ow;
        for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
          for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
            const double w = kernel[(f * g.in_channels + c) * kk + ki * g.kernel_w + kj];
            const auto [lo, hi] = valid_cols(g, kj);
            for (std::size_t oy = 0; oy < oh; ++oy) {
              const auto iy = static_cast<std::ptrdiff_t>(oy + ki) - static_cast<std::ptrdiff_t>(g.padding);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
              double* dst = gin + static_cast<std::size_t>(iy) * g.in_w + (lo + kj - g.padding);
              const double* src = gout + oy * ow + lo;
              for (std::size_t i = 0; i < hi - lo; ++i) dst[i] += w * src[i];
            }
          }
        }
      }
    }
  }
}

void conv2d_direct_backward_kernel(std::span<const double> grad_out, std::span<const double> input,
                                   const ConvGeometry& g, std::span<double> grad_kernel) {
  const std::size_t oh = g.out_h(), ow = g.out_w(), kk = g.kernel_h * g.kernel_w;
  const std::size_t image = g.in_channels * g.in_h * g.in_w;
  for (std::size_t f = 0; f < g.out_channels; ++f) {
    for (std::size_t c = 0; c < g.in_channels; ++c) {
      for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
        for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
          const auto [lo, hi] = valid_cols(g, kj);
          double acc = 0.0;
          for (std::size_t n = 0; n < g.batch; ++n) {
            const double* in = input.data() + n * image + c * g.in_h * g.in_w;
            const double* gout = grad_out.data() + (n * g.out_channels + f) * oh * ow;
            for (std::size_t oy = 0; oy < oh; ++oy) {
              const auto iy = static_cast<std::ptrdiff_t>(oy + ki) - static_cast<std::ptrdiff_t>(g.padding);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
              const double* src = in + static_cast<std::size_t>(iy) * g.in_w + (lo + kj - g.padding);
              const double* gr = gout + oy * ow + lo;
              for (std::size_t i = 0; i < hi - lo; ++i) acc += gr[i] * src[i];
            }
          }
          grad_kernel[(f * g.in_channels + c) * kk + ki * g.kernel_w + kj] += acc;
        }
      }
    }
  }
}

void conv2d_transpose_forward(std::span<const double> input, std::span<const double> kernel,
                              const ConvGeometry& g, std::span<double> output) {
  const std::size_t P = g.out_pixels(), K = g.patch(), N = g.batch, F = g.out_channels;
  const std::size_t ld = N * P;
  const std::size_t image = g.in_channels * g.in_h * g.in_w;
  std::vector<double> x(F * ld);
  gather_rows(input.data(), N, F, P, x.data());
  std::vector<double> cols(K * ld);
  gemm_at_b(kernel, x, cols, K, F, ld);
  std::fill(output.begin(), output.end(), 0.0);
#pragma omp parallel for if (N > 1)
  for (std::size_t n = 0; n < N; ++n) {
    col2im_ld(cols.data() + n * P, g, output.data() + n * image, ld);
  }
}

void conv2d_transpose_backward(std::span<const double> input, std::span<const double> kernel,
                               std::span<const double> grad_out, const ConvGeometry& g,
                               std::span<double> grad_input, std::span<double> grad_kernel) {
  const std::size_t P = g.out_pixels(), K = g.patch(), N = g.batch, F = g.out_channels;
  const std::size_t ld = N * P;
  const std::size_t image = g.in_channels * g.in_h * g.in_w;
  std::vector<double> gcols(K * ld);
#pragma omp parallel for if (N > 1)
  for (std::size_t n = 0; n < N; ++n) {
    im2col_ld(grad_out.data() + n * image, g, gcols.data() + n * P, ld);
  }
  if (!grad_input.empty()) {
    std::vector<double> gx(F * ld);
    gemm(kernel, gcols, gx, F, K, ld);
    scatter_rows(gx.data(), N, F, P, grad_input.data(), true);
  }
  if (!grad_kernel.empty()) {
    std::vector<double> x(F * ld);
    gather_rows(input.data(), N, F, P, x.data());
    gemm_a_bt(x, gcols, grad_kernel, F, ld, K, true);
  }
}

void max_pool2x2_forward(std::span<const double> input, std::size_t planes, std::size_t h,
                         std::size_t w, std::span<double> output, std::span<std::size_t> argmax) {
  const std::size_t oh = h / 2, ow = w / 2;
#pragma omp parallel for if (planes > 1)
  for (std::size_t p = 0; p < planes; ++p) {
    const std::size_t base = p * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = base + (2 * oy) * w + 2 * ox;
        const std::size_t cand[3] = {best + 1, best + w, best + w + 1};
        for (std::size_t c : cand) {
          if (input[c] > input[best]) best = c;
        }
        const std::size_t o = (p * oh + oy) * ow + ox;
        output[o] = input[best];
        argmax[o] = best;
      }
    }
  }
}

}  // namespace saec::kernels
