#include "saec/ops.hpp"

#include <algorithm>
#include <cmath>

#include "saec/kernels.hpp"

namespace saec {

namespace {

// Accumulation target for an input that needs a gradient, or nullptr.
double* grad_of(Node& self, std::size_t i) {
  Node& in = *self.inputs[i];
  return in.requires_grad ? in.ensure_grad().data() : nullptr;
}

const std::vector<double>& data_of(Node& self, std::size_t i) { return self.inputs[i]->data; }

struct Broadcast {
  Shape out;
  std::vector<std::size_t> stride_a, stride_b;  // 0 on broadcast dims
  bool same = false;
};

Broadcast make_broadcast(const Shape& a, const Shape& b) {
  Broadcast bc;
  bc.out = broadcast_shape(a, b);
  bc.same = (a == b);
  const std::size_t r = bc.out.size();
  bc.stride_a.assign(r, 0);
  bc.stride_b.assign(r, 0);
  auto fill = [r](const Shape& s, std::vector<std::size_t>& st) {
    const std::size_t off = r - s.size();
    std::size_t acc = 1;
    for (std::size_t i = s.size(); i-- > 0;) {
      st[off + i] = (s[i] == 1) ? 0 : acc;
      acc *= s[i];
    }
  };
  fill(a, bc.stride_a);
  fill(b, bc.stride_b);
  return bc;
}

// Calls fn(out_index, a_index, b_index) in row-major output order.
template <typename Fn>
void for_each_broadcast(const Broadcast& bc, Fn&& fn) {
  const std::size_t total = numel(bc.out);
  if (bc.same) {
    for (std::size_t i = 0; i < total; ++i) fn(i, i, i);
    return;
  }
  const std::size_t r = bc.out.size();
  std::vector<std::size_t> idx(r, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i < total; ++i) {
    fn(i, ia, ib);
    for (std::size_t d = r; d-- > 0;) {
      ++idx[d];
      ia += bc.stride_a[d];
      ib += bc.stride_b[d];
      if (idx[d] < bc.out[d]) break;
      ia -= bc.stride_a[d] * idx[d];
      ib -= bc.stride_b[d] * idx[d];
      idx[d] = 0;
    }
  }
}

thread_local BranchTrace* g_trace = nullptr;

struct Digest {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void add(std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  }
};

// Side of each kink for every element.
void trace_kinks(std::span<const double> x, std::initializer_list<double> kinks) {
  if (!g_trace) return;
  Digest d;
  for (double v : x) {
    std::uint64_t side = 0;
    for (double k : kinks) side = side * 3 + (v < k ? 0 : (v > k ? 2 : 1));
    d.add(side);
  }
  record_branches(d.h);
}

// Elementwise unary op; df receives (x, y) and returns dy/dx.
template <typename F, typename DF>
Tensor unary(const Tensor& x, const char* name, F f, DF df) {
  std::vector<double> out(x.numel());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_result(x.shape(), std::move(out), {x}, name, [df](Node& self) {
    double* gx = grad_of(self, 0);
    const auto& xs = data_of(self, 0);
    for (std::size_t i = 0; i < self.data.size(); ++i) gx[i] += self.grad[i] * df(xs[i], self.data[i]);
  });
}

double softplus_value(double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); }
double sigmoid_value(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

BranchTrace::BranchTrace() : previous_(g_trace) { g_trace = this; }
BranchTrace::~BranchTrace() { g_trace = previous_; }

void record_branches(std::uint64_t digest) {
  if (g_trace) g_trace->digests_.push_back(digest);
}

bool branch_trace_active() { return g_trace != nullptr; }

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    const std::size_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError("shape mismatch: " + to_string(a) + " vs " + to_string(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b) {
  auto bc = make_broadcast(a.shape(), b.shape());
  std::vector<double> out(numel(bc.out));
  auto x = a.data();
  auto y = b.data();
  switch (op) {
    case BinaryOp::add:
      for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) { out[i] = x[ia] + y[ib]; });
      break;
    case BinaryOp::sub:
      for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) { out[i] = x[ia] - y[ib]; });
      break;
    case BinaryOp::mul:
      for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) { out[i] = x[ia] * y[ib]; });
      break;
    case BinaryOp::div:
      for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) { out[i] = x[ia] / y[ib]; });
      break;
  }
  static constexpr const char* names[] = {"add", "sub", "mul", "div"};
  return make_result(bc.out, std::move(out), {a, b}, names[static_cast<int>(op)],
                     [op, bc](Node& self) {
                       double* ga = grad_of(self, 0);
                       double* gb = grad_of(self, 1);
                       const auto& x = data_of(self, 0);
                       const auto& y = data_of(self, 1);
                       const auto& g = self.grad;
                       for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) {
                         switch (op) {
                           case BinaryOp::add:
                             if (ga) ga[ia] += g[i];
                             if (gb) gb[ib] += g[i];
                             break;
                           case BinaryOp::sub:
                             if (ga) ga[ia] += g[i];
                             if (gb) gb[ib] -= g[i];
                             break;
                           case BinaryOp::mul:
                             if (ga) ga[ia] += g[i] * y[ib];
                             if (gb) gb[ib] += g[i] * x[ia];
                             break;
                           case BinaryOp::div:
                             if (ga) ga[ia] += g[i] / y[ib];
                             if (gb) gb[ib] -= g[i] * x[ia] / (y[ib] * y[ib]);
                             break;
                         }
                       });
                     });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(x, "scale", [factor](double v) { return v * factor; },
               [factor](double, double) { return factor; });
}

Tensor shift(const Tensor& x, double offset) {
  return unary(x, "shift", [offset](double v) { return v + offset; }, [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& x) {
  return unary(x, "neg", [](double v) { return -v; }, [](double, double) { return -1.0; });
}

Tensor exp(const Tensor& x) {
  return unary(x, "exp", [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary(x, "log", [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor abs(const Tensor& x) {
  trace_kinks(x.data(), {0.0});
  return unary(x, "abs", [](double v) { return std::abs(v); },
               [](double v, double) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}

Tensor square(const Tensor& x) {
  return unary(x, "square", [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor tanh(const Tensor& x) {
  return unary(x, "tanh", [](double v) { return std::tanh(v); },
               [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(x, "sigmoid", sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& x) {
  trace_kinks(x.data(), {0.0});
  return unary(x, "relu", [](double v) { return v > 0 ? v : 0.0; },
               [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  trace_kinks(x.data(), {0.0});
  return unary(x, "leaky_relu", [slope](double v) { return v > 0 ? v : slope * v; },
               [slope](double v, double) { return v > 0 ? 1.0 : slope; });
}

Tensor softplus(const Tensor& x) {
  return unary(x, "softplus", softplus_value, [](double v, double) { return sigmoid_value(v); });
}

Tensor log_sigmoid(const Tensor& x) {
  return unary(x, "log_sigmoid", [](double v) { return -softplus_value(-v); },
               [](double v, double) { return sigmoid_value(-v); });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  trace_kinks(x.data(), {lo, hi});
  return unary(x, "clamp", [lo, hi](double v) { return std::clamp(v, lo, hi); },
               [lo, hi](double v, double) { return (v < lo || v > hi) ? 0.0 : 1.0; });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("minimum: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = b[i] < a[i] ? b[i] : a[i];
  if (g_trace) {
    Digest d;
    for (std::size_t i = 0; i < out.size(); ++i) d.add(b[i] < a[i] ? 1 : (b[i] == a[i] ? 2 : 0));
    record_branches(d.h);
  }
  return make_result(a.shape(), std::move(out), {a, b}, "minimum", [](Node& self) {
    double* ga = grad_of(self, 0);
    double* gb = grad_of(self, 1);
    const auto& x = data_of(self, 0);
    const auto& y = data_of(self, 1);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (y[i] < x[i]) {
        if (gb) gb[i] += self.grad[i];
      } else if (ga) {
        ga[i] += self.grad[i];
      }
    }
  });
}

Tensor activation(Activation kind, const Tensor& x) {
  switch (kind) {
    case Activation::relu: return relu(x);
    case Activation::tanh: return tanh(x);
    case Activation::sigmoid: return sigmoid(x);
    case Activation::softplus: return softplus(x);
    case Activation::leaky_relu: return leaky_relu(x);
  }
  return x;
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return make_result({}, {acc}, {x}, "sum", [](Node& self) {
    double* gx = grad_of(self, 0);
    const double g = self.grad[0];
    for (std::size_t i = 0; i < self.inputs[0]->data.size(); ++i) gx[i] += g;
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor sum_axis(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) throw ShapeError("sum_axis: axis out of range for " + to_string(x.shape()));
  const auto& s = x.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t n = s[axis];
  Shape out_shape;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != axis) out_shape.push_back(s[i]);
  }
  std::vector<double> out(outer * inner, 0.0);
  auto in = x.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += in[(o * n + k) * inner + i];
    }
  }
  return make_result(out_shape, std::move(out), {x}, "sum_axis", [outer, n, inner](Node& self) {
    double* gx = grad_of(self, 0);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < inner; ++i) gx[(o * n + k) * inner + i] += self.grad[o * inner + i];
      }
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_result(std::move(shape), std::move(out), {x}, "reshape", [](Node& self) {
    double* gx = grad_of(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
  });
}

Tensor flatten(const Tensor& x) {
  if (x.rank() < 1) throw ShapeError("flatten: scalar input");
  return reshape(x, {x.dim(0), x.numel() / x.dim(0)});
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw ShapeError("concat: axis out of range for " + to_string(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = (i == axis) || s[i] == first[i];
    if (!ok) throw ShapeError("concat: shape mismatch " + to_string(first) + " vs " + to_string(s));
    out_shape[axis] += s[axis];
    widths.push_back(s[axis]);
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
  for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];
  const std::size_t total = out_shape[axis];

  std::vector<double> out(numel(out_shape));
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    auto src = parts[p].data();
    const std::size_t block = widths[p] * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(src.begin() + o * block, block, out.begin() + (o * total + offset) * inner);
    }
    offset += widths[p];
  }
  return make_result(out_shape, std::move(out), parts, "concat", [widths, outer, inner, total](Node& self) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < widths.size(); ++p) {
      double* gx = grad_of(self, p);
      const std::size_t block = widths[p] * inner;
      if (gx) {
        for (std::size_t o = 0; o < outer; ++o) {
          const double* g = self.grad.data() + (o * total + offset) * inner;
          for (std::size_t i = 0; i < block; ++i) gx[o * block + i] += g[i];
        }
      }
      offset += widths[p];
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: inner dimensions disagree: " + to_string(a.shape()) + " x " +
                     to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n);
  kernels::gemm(a.data(), b.data(), out, m, k, n);
  return make_result({m, n}, std::move(out), {a, b}, "matmul", [m, k, n](Node& self) {
    double* ga = grad_of(self, 0);
    double* gb = grad_of(self, 1);
    if (ga) kernels::gemm_a_bt(self.grad, data_of(self, 1), {ga, m * k}, m, n, k, true);
    if (gb) kernels::gemm_at_b(data_of(self, 0), self.grad, {gb, k * n}, k, m, n, true);
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return add(matmul(x, weight), bias);
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::size_t stride, std::size_t padding) {
  if (input.rank() != 4 || kernel.rank() != 4) {
    throw ShapeError("conv2d: expected [N,C,H,W] input and [F,C,kh,kw] kernel, got " +
                     to_string(input.shape()) + " and " + to_string(kernel.shape()));
  }
  if (input.dim(1) != kernel.dim(1)) {
    throw ShapeError("conv2d: channel mismatch " + to_string(input.shape()) + " vs kernel " +
                     to_string(kernel.shape()));
  }
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  kernels::ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), input.dim(3),
                          kernel.dim(0), kernel.dim(2), kernel.dim(3), stride, padding};
  if (g.in_h + 2 * padding < g.kernel_h || g.in_w + 2 * padding < g.kernel_w) {
    throw ShapeError("conv2d: kernel " + to_string(kernel.shape()) + " larger than padded input " +
                     to_string(input.shape()));
  }
  std::vector<double> out(g.out_size());
  const Shape out_shape{g.batch, g.out_channels, g.out_h(), g.out_w()};
  if (kernels::prefer_direct(g)) {
    kernels::conv2d_direct_forward(input.data(), kernel.data(), g, out);
    return make_result(out_shape, std::move(out), {input, kernel}, "conv2d", [g](Node& self) {
      double* gx = grad_of(self, 0);
      double* gk = grad_of(self, 1);
      if (gx) kernels::conv2d_direct_backward_input(self.grad, data_of(self, 1), g, {gx, g.in_size()});
      if (gk) kernels::conv2d_direct_backward_kernel(self.grad, data_of(self, 0), g, {gk, g.kernel_size()});
    });
  }
  auto cols = std::make_shared<std::vector<double>>();
  kernels::conv2d_forward(input.data(), kernel.data(), g, out, *cols);
  const bool keep_cols = kernel.requires_grad() && !NoGradGuard::active();
  if (!keep_cols) cols.reset();
  return make_result(out_shape, std::move(out), {input, kernel}, "conv2d", [g, cols](Node& self) {
    double* gx = grad_of(self, 0);
    double* gk = grad_of(self, 1);
    if (gx) kernels::conv2d_backward_input(self.grad, data_of(self, 1), g, {gx, g.in_size()});
    if (gk) kernels::conv2d_backward_kernel(self.grad, *cols, g, {gk, g.kernel_size()});
  });
}

Tensor conv2d_transpose(const Tensor& input, const Tensor& kernel, std::size_t stride,
                        std::size_t padding) {
  if (input.rank() != 4 || kernel.rank() != 4) {
    throw ShapeError("conv2d_transpose: expected [N,C,H,W] input and [C,F,kh,kw] kernel, got " +
                     to_string(input.shape()) + " and " + to_string(kernel.shape()));
  }
  if (input.dim(1) != kernel.dim(0)) {
    throw ShapeError("conv2d_transpose: channel mismatch " + to_string(input.shape()) +
                     " vs kernel " + to_string(kernel.shape()));
  }
  if (stride == 0) throw ShapeError("conv2d_transpose: stride must be positive");
  const std::size_t h = input.dim(2), w = input.dim(3), kh = kernel.dim(2), kw = kernel.dim(3);
  if ((h - 1) * stride + kh <= 2 * padding || (w - 1) * stride + kw <= 2 * padding) {
    throw ShapeError("conv2d_transpose: padding " + std::to_string(padding) +
                     " leaves no output for input " + to_string(input.shape()));
  }
  const std::size_t oh = (h - 1) * stride + kh - 2 * padding;
  const std::size_t ow = (w - 1) * stride + kw - 2 * padding;
  // Geometry of the forward conv this op is the adjoint of.
  kernels::ConvGeometry g{input.dim(0), kernel.dim(1), oh, ow, kernel.dim(0), kh, kw, stride, padding};
  if (g.out_h() != h || g.out_w() != w) {
    throw ShapeError("conv2d_transpose: invalid geometry for input " + to_string(input.shape()));
  }
  std::vector<double> out(g.in_size());
  kernels::conv2d_transpose_forward(input.data(), kernel.data(), g, out);
  return make_result({g.batch, g.in_channels, oh, ow}, std::move(out), {input, kernel},
                     "conv2d_transpose", [g](Node& self) {
                       double* gx = grad_of(self, 0);
                       double* gk = grad_of(self, 1);
                       kernels::conv2d_transpose_backward(
                           data_of(self, 0), data_of(self, 1), self.grad, g,
                           gx ? std::span<double>(gx, g.out_size()) : std::span<double>(),
                           gk ? std::span<double>(gk, g.kernel_size()) : std::span<double>());
                     });
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
  if (x.rank() != 4 || bias.numel() != x.dim(1)) {
    throw ShapeError("add_channel_bias: " + to_string(x.shape()) + " with bias " + to_string(bias.shape()));
  }
  const std::size_t n = x.dim(0), c = x.dim(1), p = x.dim(2) * x.dim(3);
  std::vector<double> out(x.data().begin(), x.data().end());
  auto b = bias.data();
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      double* row = out.data() + (s * c + ch) * p;
      for (std::size_t i = 0; i < p; ++i) row[i] += b[ch];
    }
  }
  return make_result(x.shape(), std::move(out), {x, bias}, "add_channel_bias", [n, c, p](Node& self) {
    double* gx = grad_of(self, 0);
    double* gb = grad_of(self, 1);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double* g = self.grad.data() + (s * c + ch) * p;
        if (gx) {
          for (std::size_t i = 0; i < p; ++i) gx[(s * c + ch) * p + i] += g[i];
        }
        if (gb) {
          double acc = 0.0;
          for (std::size_t i = 0; i < p; ++i) acc += g[i];
          gb[ch] += acc;
        }
      }
    }
  });
}

Tensor max_pool2d(const Tensor& input) {
  if (input.rank() != 4) throw ShapeError("max_pool2d: expected [N,C,H,W], got " + to_string(input.shape()));
  const std::size_t h = input.dim(2), w = input.dim(3);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeError("max_pool2d: odd spatial dimension in " + to_string(input.shape()));
  }
  const std::size_t planes = input.dim(0) * input.dim(1);
  std::vector<double> out(planes * (h / 2) * (w / 2));
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  kernels::max_pool2x2_forward(input.data(), planes, h, w, out, *argmax);
  if (g_trace) {
    Digest d;
    for (auto i : *argmax) d.add(i);
    record_branches(d.h);
  }
  return make_result({input.dim(0), input.dim(1), h / 2, w / 2}, std::move(out), {input}, "max_pool2d",
                     [argmax](Node& self) {
                       double* gx = grad_of(self, 0);
                       for (std::size_t i = 0; i < self.grad.size(); ++i) gx[(*argmax)[i]] += self.grad[i];
                     });
}

}  // namespace saec
