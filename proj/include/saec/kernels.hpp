#pragma once

// Raw compute kernels behind the differentiable ops. Every routine here is
// deterministic: parallel loops only write disjoint outputs, and reductions
// run in a fixed order, so results are bit-identical for any thread count.
// The reference namespace holds naive serial loops kept for tests and the
// benchmark.

#include <cstddef>
#include <span>
#include <vector>

namespace saec::kernels {

/// Geometry of a 2-D cross-correlation from an [N,C,H,W] image batch to an
/// [N,F,out_h,out_w] batch with an [F,C,kh,kw] kernel.
struct ConvGeometry {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t in_h = 1;
  std::size_t in_w = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_h() const { return (in_h + 2 * padding - kernel_h) / stride + 1; }
  std::size_t out_w() const { return (in_w + 2 * padding - kernel_w) / stride + 1; }
  std::size_t patch() const { return in_channels * kernel_h * kernel_w; }
  std::size_t out_pixels() const { return out_h() * out_w(); }
  std::size_t in_size() const { return batch * in_channels * in_h * in_w; }
  std::size_t out_size() const { return batch * out_channels * out_pixels(); }
  std::size_t kernel_size() const { return out_channels * patch(); }
};

// Row-major matrix products. out is overwritten unless accumulate is set.
void gemm(std::span<const double> a, std::span<const double> b, std::span<double> out,
          std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);  // a[m,k] b[k,n]
void gemm_at_b(std::span<const double> a, std::span<const double> b, std::span<double> out,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);  // a[k,m]
void gemm_a_bt(std::span<const double> a, std::span<const double> b, std::span<double> out,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);  // b[n,k]

/// Unfolds one image [C,H,W] into columns [C*kh*kw, out_h*out_w].
void im2col(const double* image, const ConvGeometry& g, double* cols);
/// Adjoint of im2col: scatters columns back, accumulating into image.
void col2im(const double* cols, const ConvGeometry& g, double* image);

/// Forward convolution. cols receives the batch unfolding
/// [patch, batch*out_pixels] for reuse in the backward pass.
void conv2d_forward(std::span<const double> input, std::span<const double> kernel,
                    const ConvGeometry& g, std::span<double> output, std::vector<double>& cols);
void conv2d_backward_input(std::span<const double> grad_out, std::span<const double> kernel,
                           const ConvGeometry& g, std::span<double> grad_input);
void conv2d_backward_kernel(std::span<const double> grad_out, const std::vector<double>& cols,
                            const ConvGeometry& g, std::span<double> grad_kernel);

// Direct stride-1 convolution without an unfolding buffer; faster than the
// GEMM path when out_channels is small.
bool prefer_direct(const ConvGeometry& g);
void conv2d_direct_forward(std::span<const double> input, std::span<const double> kernel,
                           const ConvGeometry& g, std::span<double> output);
void conv2d_direct_backward_input(std::span<const double> grad_out, std::span<const double> kernel,
                                  const ConvGeometry& g, std::span<double> grad_input);
void conv2d_direct_backward_kernel(std::span<const double> grad_out, std::span<const double> input,
                                   const ConvGeometry& g, std::span<double> grad_kernel);

// Transposed convolution is expressed with the geometry of the conv it is the
// adjoint of: input is [N, out_channels, out_h, out_w], output is
// [N, in_channels, in_h, in_w], kernel is [out_channels, in_channels, kh, kw].
void conv2d_transpose_forward(std::span<const double> input, std::span<const double> kernel,
                              const ConvGeometry& g, std::span<double> output);
void conv2d_transpose_backward(std::span<const double> input, std::span<const double> kernel,
                               std::span<const double> grad_out, const ConvGeometry& g,
                               std::span<double> grad_input, std::span<double> grad_kernel);

/// 2x2 / stride-2 max pool; argmax receives flat input indices (first index
/// in row-major window order wins ties).
void max_pool2x2_forward(std::span<const double> input, std::size_t planes, std::size_t h,
                         std::size_t w, std::span<double> output, std::span<std::size_t> argmax);

namespace reference {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> out,
            std::size_t m, std::size_t k, std::size_t n);
void conv2d(std::span<const double> input, std::span<const double> kernel, const ConvGeometry& g,
            std::span<double> output);
void conv2d_transpose(std::span<const double> input, std::span<const double> kernel,
                      const ConvGeometry& g, std::span<double> output);
void max_pool2x2(std::span<const double> input, std::size_t planes, std::size_t h,
                 std::size_t w, std::span<double> output);

}  // namespace reference

}  // namespace saec::kernels
