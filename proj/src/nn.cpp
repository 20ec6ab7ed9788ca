#include "saec/nn.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace saec {

void ParamSet::add(std::string name, Tensor tensor) {
  if (index_.contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  index_.emplace(name, entries_.size());
  entries_.emplace_back(std::move(name), std::move(tensor));
}

bool ParamSet::contains(std::string_view name) const { return index_.contains(std::string(name)); }

const Tensor& ParamSet::at(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + std::string(name));
  return entries_[it->second].second;
}

Tensor& ParamSet::at(std::string_view name) {
  return const_cast<Tensor&>(static_cast<const ParamSet&>(*this).at(name));
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.numel();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& [_, t] : entries_) t.zero_grad();
}

void ParamSet::ensure_grads() {
  for (auto& [_, t] : entries_) t.mutable_grad();
}

ParamSet ParamSet::clone() const {
  ParamSet out;
  for (const auto& [name, t] : entries_) out.add(name, t.clone(true));
  return out;
}

ParamSet ParamSet::detached() const {
  ParamSet out;
  for (const auto& [name, t] : entries_) out.add(name, t.detach());
  return out;
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].first != other.entries_[i].first) return false;
    if (entries_[i].second.shape() != other.entries_[i].second.shape()) return false;
  }
  return true;
}

ParamSet init_params(const ArchitectureSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParamSet params;
  for (const auto& p : spec) {
    if (p.is_bias) {
      params.add(p.name, Tensor::zeros(p.shape, true));
      continue;
    }
    if (p.fan_in == 0) throw std::invalid_argument("zero fan-in for parameter " + p.name);
    const double bound = std::sqrt(1.0 / static_cast<double>(p.fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> values(numel(p.shape));
    for (auto& v : values) v = dist(rng);
    params.add(p.name, Tensor::from(p.shape, std::move(values), true));
  }
  return params;
}

OptimizerState make_optimizer_state(const ParamSet& params, const OptimizerConfig& config) {
  OptimizerState state;
  state.config = config;
  for (const auto& [_, t] : params) {
    state.first_moment.emplace_back(t.numel(), 0.0);
    state.second_moment.emplace_back(t.numel(), 0.0);
  }
  return state;
}

void optimizer_step(ParamSet& params, OptimizerState& state) {
  if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("optimizer state does not match parameter set");
  }
  for (const auto& [name, t] : params) {
    if (!t.has_grad()) throw GradError("parameter " + name + " has no gradient");
  }
  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  std::size_t k = 0;
  for (auto& [_, param] : params) {
    auto p = param.mutable_data();
    auto g = param.grad();
    if (c.kind == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= c.lr * g[i];
    } else {
      auto& m = state.first_moment[k];
      auto& v = state.second_moment[k];
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        p[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
      }
    }
    ++k;
  }
}

void ema_update(ParamSet& target, const ParamSet& online, double tau) {
  if (!target.same_layout(online)) throw std::invalid_argument("ema_update: parameter sets differ");
  auto src = online.begin();
  for (auto& [_, t] : target) {
    auto dst = t.mutable_data();
    auto on = src->second.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = tau * on[i] + (1.0 - tau) * dst[i];
    ++src;
  }
}

}  // namespace saec
