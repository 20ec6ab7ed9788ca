#pragma once

// Finite-difference cases shared by the unit tests and the acceptance
// binary. Each case builds its inputs from a seed and returns the checker
// result at the given step.

#include <algorithm>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "saec/agent.hpp"
#include "saec/grad_check.hpp"
#include "saec/losses.hpp"
#include "saec/ops.hpp"
#include "test_util.hpp"

namespace saec::testing {

struct GradCase {
  std::string name;
  std::function<GradCheckResult(std::uint64_t seed, double step)> run;
};

inline void PrintTo(const GradCase& c, std::ostream* os) { *os << c.name; }

namespace detail {

// Random contraction so every output coordinate matters with O(1) weight.
inline Tensor contract(const Tensor& y, std::uint64_t seed) {
  return sum(y * uniform(y.shape(), seed ^ 0xabcdef, 0.5, 1.5));
}

inline Tensor leaf(Tensor t) { return t.clone(true); }

inline GradCheckResult check(const std::function<Tensor()>& f, std::vector<Tensor> params, double step) {
  return grad_check_params(f, std::move(params), step);
}

using Unary = Tensor (*)(const Tensor&);

inline GradCase unary_case(std::string name, std::function<Tensor(const Tensor&)> op,
                           std::function<Tensor(std::uint64_t)> make) {
  return {name, [op, make](std::uint64_t seed, double step) {
            Tensor x = leaf(make(seed));
            return check([&] { return contract(op(x), seed); }, {x}, step);
          }};
}

inline GradCase binary_case(std::string name, std::function<Tensor(const Tensor&, const Tensor&)> op,
                            std::function<Tensor(std::uint64_t)> make_a,
                            std::function<Tensor(std::uint64_t)> make_b) {
  return {name, [op, make_a, make_b](std::uint64_t seed, double step) {
            Tensor a = leaf(make_a(seed));
            Tensor b = leaf(make_b(seed + 1000));
            return check([&] { return contract(op(a, b), seed); }, {a, b}, step);
          }};
}

// Distinct values on a 0.01 grid so no 2x2 window is within a step of a tie.
inline Tensor well_separated(const Shape& shape, std::uint64_t seed) {
  std::vector<double> v(numel(shape));
  std::iota(v.begin(), v.end(), 0.0);
  std::mt19937_64 rng(seed);
  std::shuffle(v.begin(), v.end(), rng);
  for (auto& x : v) x = 0.01 * x - 0.005 * static_cast<double>(v.size());
  return Tensor::from(shape, std::move(v));
}

// Values at least 0.05 away from both clamp bounds.
inline Tensor clamp_safe(const Shape& shape, std::uint64_t seed) {
  Tensor t = uniform(shape, seed, -1.0, 1.0);
  std::vector<double> v = values(t);
  for (auto& x : v) {
    if (std::abs(std::abs(x) - 0.5) < 0.05) x += x > 0 ? 0.1 : -0.1;
  }
  return Tensor::from(shape, std::move(v));
}

}  // namespace detail

inline std::vector<GradCase> primitive_cases() {
  using namespace detail;
  auto u = [](Shape s, double lo = -1.0, double hi = 1.0) {
    return [s, lo, hi](std::uint64_t seed) { return uniform(s, seed, lo, hi); };
  };
  auto nz = [](Shape s) { return [s](std::uint64_t seed) { return away_from_zero(s, seed); }; };
  std::vector<GradCase> c;
  c.push_back(binary_case("add", add, u({3, 4}), u({3, 4})));
  c.push_back(binary_case("add_broadcast", add, u({2, 3, 4}), u({3, 1})));
  c.push_back(binary_case("sub", sub, u({3, 4}), u({4})));
  c.push_back(binary_case("mul", mul, u({3, 4}), u({3, 4})));
  c.push_back(binary_case("mul_broadcast", mul, u({2, 1, 4}), u({3, 1})));
  c.push_back(binary_case("div", div, u({3, 4}), u({3, 4}, 0.5, 1.5)));
  c.push_back(unary_case("scale", [](const Tensor& x) { return scale(x, -1.7); }, u({5})));
  c.push_back(unary_case("shift", [](const Tensor& x) { return shift(x, 0.3); }, u({5})));
  c.push_back(unary_case("neg", [](const Tensor& x) { return neg(x); }, u({5})));
  c.push_back(unary_case("exp", [](const Tensor& x) { return exp(x); }, u({6})));
  c.push_back(unary_case("log", [](const Tensor& x) { return log(x); }, u({6}, 0.5, 2.0)));
  c.push_back(unary_case("abs", [](const Tensor& x) { return abs(x); }, nz({6})));
  c.push_back(unary_case("square", [](const Tensor& x) { return square(x); }, u({6})));
  c.push_back(unary_case("tanh", [](const Tensor& x) { return tanh(x); }, u({6}, -2.0, 2.0)));
  c.push_back(unary_case("sigmoid", [](const Tensor& x) { return sigmoid(x); }, u({6}, -3.0, 3.0)));
  c.push_back(unary_case("relu", [](const Tensor& x) { return relu(x); }, nz({6})));
  c.push_back(unary_case("leaky_relu", [](const Tensor& x) { return leaky_relu(x); }, nz({6})));
  c.push_back(unary_case("softplus", [](const Tensor& x) { return softplus(x); }, u({6}, -4.0, 4.0)));
  c.push_back(unary_case("log_sigmoid", [](const Tensor& x) { return log_sigmoid(x); }, u({6}, -4.0, 4.0)));
  c.push_back(unary_case("clamp", [](const Tensor& x) { return clamp(x, -0.5, 0.5); },
                         [](std::uint64_t s) { return clamp_safe({8}, s); }));
  c.push_back({"minimum", [](std::uint64_t seed, double step) {
                 Tensor a = leaf(uniform({6}, seed));
                 Tensor off = away_from_zero({6}, seed + 7, 0.05);
                 Tensor b = leaf(Tensor::from({6}, values(a.detach() + off)));
                 return check([&] { return contract(minimum(a, b), seed); }, {a, b}, step);
               }});
  c.push_back(unary_case("sum", [](const Tensor& x) { return sum(x); }, u({3, 4})));
  c.push_back(unary_case("mean", [](const Tensor& x) { return mean(x); }, u({3, 4})));
  c.push_back(unary_case("sum_axis", [](const Tensor& x) { return sum_axis(x, 1); }, u({2, 3, 4})));
  c.push_back(unary_case("reshape", [](const Tensor& x) { return reshape(x, {4, 3}); }, u({3, 4})));
  c.push_back(unary_case("flatten", [](const Tensor& x) { return flatten(x); }, u({2, 3, 2})));
  c.push_back(binary_case("concat", [](const Tensor& a, const Tensor& b) { return concat({a, b}, 1); },
                          u({2, 3, 2, 2}), u({2, 1, 2, 2})));
  c.push_back(binary_case("matmul", matmul, u({3, 5}), u({5, 4})));
  c.push_back({"linear", [](std::uint64_t seed, double step) {
                 Tensor x = leaf(uniform({3, 5}, seed));
                 Tensor w = leaf(uniform({5, 4}, seed + 1));
                 Tensor b = leaf(uniform({4}, seed + 2));
                 return check([&] { return contract(linear(x, w, b), seed); }, {x, w, b}, step);
               }});
  auto conv = [](std::string name, Shape in, Shape ker, std::size_t stride, std::size_t pad) {
    return GradCase{name, [=](std::uint64_t seed, double step) {
                      Tensor x = leaf(uniform(in, seed));
                      Tensor w = leaf(uniform(ker, seed + 1));
                      return check([&] { return contract(conv2d(x, w, stride, pad), seed); }, {x, w}, step);
                    }};
  };
  c.push_back(conv("conv2d_s1p1", {2, 3, 6, 6}, {5, 3, 3, 3}, 1, 1));
  c.push_back(conv("conv2d_direct", {2, 4, 6, 6}, {2, 4, 3, 3}, 1, 1));
  c.push_back(conv("conv2d_s2p1_k4", {2, 2, 8, 8}, {3, 2, 4, 4}, 2, 1));
  c.push_back({"conv2d_transpose", [](std::uint64_t seed, double step) {
                 Tensor x = leaf(uniform({2, 3, 3, 3}, seed));
                 Tensor w = leaf(uniform({3, 2, 2, 2}, seed + 1));
                 return check([&] { return contract(conv2d_transpose(x, w, 2, 0), seed); }, {x, w}, step);
               }});
  c.push_back({"conv2d_transpose_padded", [](std::uint64_t seed, double step) {
                 Tensor x = leaf(uniform({1, 2, 3, 3}, seed));
                 Tensor w = leaf(uniform({2, 3, 4, 4}, seed + 1));
                 return check([&] { return contract(conv2d_transpose(x, w, 2, 1), seed); }, {x, w}, step);
               }});
  c.push_back(binary_case("add_channel_bias", add_channel_bias, u({2, 3, 2, 2}), u({3})));
  c.push_back(unary_case("max_pool2d", [](const Tensor& x) { return max_pool2d(x); },
                         [](std::uint64_t s) { return well_separated({2, 2, 4, 6}, s); }));
  return c;
}

/// Small network geometry for composite checks: smooth activation, 8x8
/// single-channel images, two levels.
inline AgentConfig tiny_agent_config() {
  AgentConfig a;
  a.channels = 1;
  a.height = 8;
  a.width = 8;
  a.levels = 2;
  a.widths = {2, 3};
  a.z_dim = 2;
  a.critic_hidden = 4;
  a.activation = Activation::tanh;
  return a;
}

/// Replayed batch whose masked targets sit at +-1.5, outside the executor's
/// (-1, 1) range, so |composed - y| never reaches its kink.
inline TransitionBatch tiny_batch(const AgentConfig& a, std::size_t n, std::uint64_t seed) {
  const Shape img{n, a.channels, a.height, a.width};
  TransitionBatch b;
  b.x = uniform(img, seed + 1, -0.8, 0.8);
  b.x_next = uniform(img, seed + 2, -0.8, 0.8);
  b.z = uniform({n, a.z_dim}, seed + 3, -0.9, 0.9);
  b.reward = uniform({n}, seed + 4, 0.0, 2.0);
  std::vector<double> done(n, 0.0);
  done.back() = 1.0;
  b.done = Tensor::from({n}, done);
  std::vector<double> m(n * a.height * a.width, 0.0);
  std::vector<double> y = values(b.x);
  std::mt19937_64 rng(seed + 5);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t r = a.height / 4; r < a.height / 4 + a.height / 2; ++r) {
      for (std::size_t col = a.width / 4; col < a.width / 4 + a.width / 2; ++col) {
        m[(k * a.height + r) * a.width + col] = 1.0;
        for (std::size_t ch = 0; ch < a.channels; ++ch) {
          y[((k * a.channels + ch) * a.height + r) * a.width + col] = rng() % 2 ? 1.5 : -1.5;
        }
      }
    }
  }
  b.mask = Tensor::from({n, 1, a.height, a.width}, m);
  b.y = Tensor::from(img, y);
  return b;
}

inline std::vector<Tensor> tensors_of(const ParamSet& p) {
  std::vector<Tensor> out;
  for (const auto& [_, t] : p) out.push_back(t);
  return out;
}

inline std::vector<Tensor> join(std::vector<Tensor> a, const std::vector<Tensor>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline std::vector<GradCase> composite_cases() {
  std::vector<GradCase> c;
  const std::size_t n = 3;
  c.push_back({"reconstruction_l1", [n](std::uint64_t seed, double step) {
                 const AgentConfig a = tiny_agent_config();
                 Agent agent = Agent::create(a, seed);
                 TransitionBatch b = tiny_batch(a, n, seed);
                 Tensor noise = gaussian_noise({n, a.z_dim}, seed + 9);
                 return grad_check_params([&] { return dl_loss(b, agent, noise, 1.0, 0.0).rec; },
                                          join(tensors_of(agent.actor), tensors_of(agent.executor)), step);
               }});
  c.push_back({"generator_objective", [n](std::uint64_t seed, double step) {
                 const AgentConfig a = tiny_agent_config();
                 Agent agent = Agent::create(a, seed);
                 TransitionBatch b = tiny_batch(a, n, seed);
                 Tensor noise = gaussian_noise({n, a.z_dim}, seed + 9);
                 return grad_check_params([&] { return dl_loss(b, agent, noise, 10.0, 1.0).total; },
                                          join(tensors_of(agent.actor), tensors_of(agent.executor)), step);
               }});
  c.push_back({"discriminator_objective", [n](std::uint64_t seed, double step) {
                 const AgentConfig a = tiny_agent_config();
                 Agent agent = Agent::create(a, seed);
                 TransitionBatch b = tiny_batch(a, n, seed);
                 Tensor fake = uniform(b.y.shape(), seed + 11, -0.9, 0.9);
                 return grad_check_params([&] { return discriminator_loss(agent.discriminator, a, b.y, fake); },
                                          tensors_of(agent.discriminator), step);
               }});
  c.push_back({"soft_bellman_residual", [n](std::uint64_t seed, double step) {
                 const AgentConfig a = tiny_agent_config();
                 Agent agent = Agent::create(a, seed);
                 TransitionBatch b = tiny_batch(a, n, seed);
                 Tensor noise = gaussian_noise({n, a.z_dim}, seed + 9);
                 return grad_check_params(
                     [&] {
                       CriticTerms t = critic_loss(b, agent, 0.3, 0.99, noise);
                       return t.j_q1 + t.j_q2;
                     },
                     join(tensors_of(agent.critic1), tensors_of(agent.critic2)), step);
               }});
  c.push_back({"policy_objective", [n](std::uint64_t seed, double step) {
                 const AgentConfig a = tiny_agent_config();
                 Agent agent = Agent::create(a, seed);
                 TransitionBatch b = tiny_batch(a, n, seed);
                 Tensor noise = gaussian_noise({n, a.z_dim}, seed + 9);
                 return grad_check_params([&] { return actor_loss(b, agent, 0.3, noise).j_pi; },
                                          tensors_of(agent.actor), step);
               }});
  c.push_back({"temperature_objective", [](std::uint64_t seed, double step) {
                 Temperature t = Temperature::create(16, uniform({1}, seed, -1.0, 1.0)[0]);
                 Tensor logp = uniform({8}, seed + 1, -30.0, 10.0);
                 return grad_check_params([&] { return alpha_loss(logp, t); }, {t.log_alpha}, step);
               }});
  return c;
}

}  // namespace saec::testing
