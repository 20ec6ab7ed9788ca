#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "saec/tensor.hpp"

namespace saec {

struct GradCheckResult {
  double max_rel_error = 0.0;
  // Worst |analytic - numeric| over the largest gradient magnitude of the
  // same parameter tensor.
  double max_scaled_error = 0.0;
  std::size_t coords_checked = 0;
  std::size_t coords_skipped = 0;  // stencil crossed a kink at every step size
  std::size_t coords_refined = 0;  // checked at a reduced step
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// |a - b| / max(|a|, |b|, 1e-8)
double relative_error(double a, double b);

/// Compares backward() against central differences (f(x+h)-f(x-h))/2h on
/// every coordinate of point. Returns the largest relative error.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& point, double step);

/// Same comparison for a loss that closes over parameter tensors. Each
/// parameter is perturbed in place and restored. When max_coords_per_param
/// is nonzero, a seeded subset of coordinates is checked per tensor.
/// When the +-step evaluations take a different branch of a non-smooth
/// primitive than the base point, the coordinate is retried at step/10,
/// step/100 and step/1000, and skipped if every stencil crosses a kink.
GradCheckResult grad_check_params(const std::function<Tensor()>& loss, std::vector<Tensor> params,
                                  double step, std::size_t max_coords_per_param = 0,
                                  std::uint64_t seed = 0);

}  // namespace saec
