#pragma once

#include "saec/tensor.hpp"

namespace saec {

inline constexpr double kPsnrCap = 100.0;
inline constexpr std::size_t kSsimWindow = 8;
inline constexpr std::size_t kSsimStride = 4;

/// Maps [-1, 1] network range to [0, 1] metric range.
inline double to_unit_range(double v) { return 0.5 * (v + 1.0); }

/// PSNR in dB of two equal-shape images given in [-1, 1]; evaluated on the
/// [0, 1] scale as 10 log10(1/MSE), capped at 100 dB when MSE < 1e-10.
double psnr(const Tensor& a, const Tensor& b);

/// Mean SSIM over 8x8 uniform windows at stride 4 with C1 = 0.01^2 and
/// C2 = 0.03^2 on the [0, 1] scale. Inputs are [C,H,W] (or [H,W]) in
/// [-1, 1]; multi-channel images are averaged to gray first.
double ssim(const Tensor& a, const Tensor& b);

}  // namespace saec
