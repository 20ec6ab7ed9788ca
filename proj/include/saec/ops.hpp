#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "saec/tensor.hpp"

namespace saec {

/// While alive, non-smooth primitives on this thread (abs, relu, leaky_relu,
/// clamp, minimum, max_pool2d) append a digest of their branch choices.
/// Finite-difference checks use it to spot stencils that cross a kink.
class BranchTrace {
 public:
  BranchTrace();
  ~BranchTrace();
  BranchTrace(const BranchTrace&) = delete;
  BranchTrace& operator=(const BranchTrace&) = delete;

  const std::vector<std::uint64_t>& digests() const { return digests_; }

 private:
  friend void record_branches(std::uint64_t digest);
  std::vector<std::uint64_t> digests_;
  BranchTrace* previous_;
};

void record_branches(std::uint64_t digest);
bool branch_trace_active();

enum class BinaryOp { add, sub, mul, div };

/// Elementwise arithmetic with singleton-dimension broadcasting. Ranks are
/// aligned from the right; each dimension pair must match or contain a 1.
Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b);
Shape broadcast_shape(const Shape& a, const Shape& b);

inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::add, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::sub, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::mul, a, b); }
inline Tensor div(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::div, a, b); }

Tensor scale(const Tensor& x, double factor);
Tensor shift(const Tensor& x, double offset);
Tensor neg(const Tensor& x);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& x) { return neg(x); }
inline Tensor operator*(const Tensor& x, double c) { return scale(x, c); }
inline Tensor operator*(double c, const Tensor& x) { return scale(x, c); }
inline Tensor operator+(const Tensor& x, double c) { return shift(x, c); }
inline Tensor operator+(double c, const Tensor& x) { return shift(x, c); }
inline Tensor operator-(const Tensor& x, double c) { return shift(x, -c); }
inline Tensor operator-(double c, const Tensor& x) { return shift(neg(x), c); }

Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor square(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope = 0.2);
// max(x,0) + log1p(exp(-|x|))
Tensor softplus(const Tensor& x);
// log(sigmoid(x)) = -softplus(-x)
Tensor log_sigmoid(const Tensor& x);
// Gradient is zero outside [lo, hi].
Tensor clamp(const Tensor& x, double lo, double hi);
// Elementwise minimum of equal-shape tensors; ties route to a.
Tensor minimum(const Tensor& a, const Tensor& b);

enum class Activation { relu, tanh, sigmoid, softplus, leaky_relu };
Tensor activation(Activation kind, const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Sums out one axis (the axis is removed from the shape).
Tensor sum_axis(const Tensor& x, std::size_t axis);

Tensor reshape(const Tensor& x, Shape shape);
/// [N, ...] -> [N, prod(...)]
Tensor flatten(const Tensor& x);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);

/// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
/// x[N,in] * weight[in,out] + bias[out]
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// input [N,C,H,W], kernel [F,C,kh,kw] -> [N,F,H',W'] with zero padding.
Tensor conv2d(const Tensor& input, const Tensor& kernel, std::size_t stride, std::size_t padding);
/// input [N,C,H,W], kernel [C,F,kh,kw] -> [N,F,(H-1)s-2p+kh,(W-1)s-2p+kw]; the
/// adjoint of conv2d with the same kernel.
Tensor conv2d_transpose(const Tensor& input, const Tensor& kernel, std::size_t stride,
                        std::size_t padding);
/// Adds a per-channel bias [F] to an [N,F,H,W] tensor.
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);
/// 2x2 window, stride 2.
Tensor max_pool2d(const Tensor& input);

}  // namespace saec
