#include "saec/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "saec/ops.hpp"

namespace saec {

namespace {
constexpr int kRetries = 3;
}  // namespace

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& point, double step) {
  Tensor leaf = point.clone(true);
  return grad_check_params([&] { return f(leaf); }, {leaf}, step).max_rel_error;
}

GradCheckResult grad_check_params(const std::function<Tensor()>& loss, std::vector<Tensor> params,
                                  double step, std::size_t max_coords_per_param, std::uint64_t seed) {
  for (auto& p : params) p.zero_grad();
  std::vector<std::uint64_t> base;
  {
    BranchTrace trace;
    Tensor l = loss();
    base = trace.digests();
    backward(l);
  }
  auto evaluate = [&](bool& same) {
    BranchTrace trace;
    const double v = loss().item();
    same = same && trace.digests() == base;
    return v;
  };
  std::vector<std::vector<double>> analytic;
  for (auto& p : params) {
    if (p.has_grad()) {
      analytic.emplace_back(p.grad().begin(), p.grad().end());
    } else {
      analytic.emplace_back(p.numel(), 0.0);
    }
  }

  GradCheckResult result;
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k].mutable_data();
    std::vector<std::size_t> coords(values.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (max_coords_per_param != 0 && coords.size() > max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_coords_per_param);
    }
    std::vector<std::pair<std::size_t, double>> numerics;
    for (std::size_t i : coords) {
      const double saved = values[i];
      // A stencil that crosses a kink is retried with shorter steps.
      double h = step;
      double up = 0.0, down = 0.0;
      bool same = false;
      for (int attempt = 0; attempt <= kRetries && !same; ++attempt, h *= 0.1) {
        same = true;
        values[i] = saved + h;
        up = evaluate(same);
        values[i] = saved - h;
        down = evaluate(same);
        values[i] = saved;
      }
      h *= 10.0;
      if (!same) {
        ++result.coords_skipped;
        continue;
      }
      if (h != step) ++result.coords_refined;
      const double numeric = (up - down) / (2.0 * h);
      numerics.emplace_back(i, numeric);
      const double err = relative_error(analytic[k][i], numeric);
      ++result.coords_checked;
      if (err > result.max_rel_error || result.coords_checked == 1) {
        result.max_rel_error = std::max(result.max_rel_error, err);
        result.worst_analytic = analytic[k][i];
        result.worst_numeric = numeric;
      }
    }
    double scale = 1e-8;
    for (double a : analytic[k]) scale = std::max(scale, std::abs(a));
    for (const auto& [_, n] : numerics) scale = std::max(scale, std::abs(n));
    for (const auto& [i, n] : numerics) {
      result.max_scaled_error = std::max(result.max_scaled_error, std::abs(analytic[k][i] - n) / scale);
    }
  }
  return result;
}

}  // namespace saec
