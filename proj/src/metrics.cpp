#include "saec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace saec {

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

struct Gray {
  std::size_t h = 0, w = 0;
  std::vector<double> px;
};

Gray to_gray_unit(const Tensor& t) {
  std::size_t c = 1, h = 0, w = 0;
  if (t.rank() == 2) {
    h = t.dim(0), w = t.dim(1);
  } else if (t.rank() == 3) {
    c = t.dim(0), h = t.dim(1), w = t.dim(2);
  } else if (t.rank() == 4 && t.dim(0) == 1) {
    c = t.dim(1), h = t.dim(2), w = t.dim(3);
  } else {
    throw ShapeError("ssim: expected a single [C,H,W] image, got " + to_string(t.shape()));
  }
  Gray g{h, w, std::vector<double>(h * w, 0.0)};
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < h * w; ++i) g.px[i] += to_unit_range(t[ch * h * w + i]);
  }
  for (auto& v : g.px) v /= static_cast<double>(c);
  return g;
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b) {
  require_same(a, b, "psnr");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double d = to_unit_range(a[i]) - to_unit_range(b[i]);
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.numel());
  if (mse < 1e-10) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Tensor& a, const Tensor& b) {
  require_same(a, b, "ssim");
  const Gray x = to_gray_unit(a);
  const Gray y = to_gray_unit(b);
  if (x.h < kSsimWindow || x.w < kSsimWindow) {
    throw ShapeError("ssim: image " + to_string(a.shape()) + " smaller than the 8x8 window");
  }
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  constexpr double n = static_cast<double>(kSsimWindow * kSsimWindow);
  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t oy = 0; oy + kSsimWindow <= x.h; oy += kSsimStride) {
    for (std::size_t ox = 0; ox + kSsimWindow <= x.w; ox += kSsimStride) {
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < kSsimWindow; ++i) {
        for (std::size_t j = 0; j < kSsimWindow; ++j) {
          mx += x.px[(oy + i) * x.w + ox + j];
          my += y.px[(oy + i) * y.w + ox + j];
        }
      }
      mx /= n;
      my /= n;
      double vx = 0, vy = 0, cov = 0;
      for (std::size_t i = 0; i < kSsimWindow; ++i) {
        for (std::size_t j = 0; j < kSsimWindow; ++j) {
          const double dx = x.px[(oy + i) * x.w + ox + j] - mx;
          const double dy = y.px[(oy + i) * y.w + ox + j] - my;
          vx += dx * dx;
          vy += dy * dy;
          cov += dx * dy;
        }
      }
      vx /= n;
      vy /= n;
      cov /= n;
      total += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

}  // namespace saec
