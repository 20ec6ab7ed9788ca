#include "saec/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string_view>
#include <vector>

namespace saec {

ConfigError::ConfigError(std::size_t line, const std::string& message)
    : std::invalid_argument(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

EnvConfig RunConfig::env() const {
  EnvConfig e;
  e.horizon = horizon;
  e.reward = reward;
  e.mode = reward_mode;
  e.fill_value = fill_value;
  return e;
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::stripes: return "stripes";
    case DatasetKind::blobs: return "blobs";
    case DatasetKind::gradients: return "gradients";
    case DatasetKind::directory: return "directory";
  }
  return "?";
}
std::string to_string(RewardKind kind) { return kind == RewardKind::psnr ? "psnr" : "ssim"; }
std::string to_string(RewardMode mode) { return mode == RewardMode::absolute ? "absolute" : "delta"; }
std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "sgd"; }
std::string to_string(ResizeMode mode) { return mode == ResizeMode::nearest ? "nearest" : "bilinear"; }
std::string to_string(Activation kind) {
  switch (kind) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softplus: return "softplus";
    case Activation::leaky_relu: return "leaky_relu";
  }
  return "?";
}

namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct Parser {
  std::size_t line = 0;
  std::string key;

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(line, key + ": " + what); }

  double real(std::string_view v) const {
    double out = 0.0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out)) {
      fail("expected a finite number, got '" + std::string(v) + "'");
    }
    return out;
  }

  std::uint64_t integer(std::string_view v) const {
    std::uint64_t out = 0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size()) {
      fail("expected a non-negative integer, got '" + std::string(v) + "'");
    }
    return out;
  }

  bool boolean(std::string_view v) const {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail("expected true or false, got '" + std::string(v) + "'");
  }

  template <typename E>
  E choice(std::string_view v, std::initializer_list<std::pair<const char*, E>> options) const {
    std::string names;
    for (const auto& [name, value] : options) {
      if (v == name) return value;
      names += names.empty() ? name : std::string("|") + name;
    }
    fail("expected one of " + names + ", got '" + std::string(v) + "'");
  }
};

using Setter = std::function<void(RunConfig&, const Parser&, std::string_view)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Field {
  const char* key;
  Setter set;
  Getter get;
};

#define REAL_FIELD(name, member)                                                               \
  Field {                                                                                      \
    name, [](RunConfig& c, const Parser& p, std::string_view v) { c.member = p.real(v); },     \
        [](const RunConfig& c) { return format_double(c.member); }                             \
  }
#define SIZE_FIELD(name, member)                                                               \
  Field {                                                                                      \
    name, [](RunConfig& c, const Parser& p, std::string_view v) { c.member = p.integer(v); },  \
        [](const RunConfig& c) { return std::to_string(c.member); }                            \
  }
#define BOOL_FIELD(name, member)                                                               \
  Field {                                                                                      \
    name, [](RunConfig& c, const Parser& p, std::string_view v) { c.member = p.boolean(v); },  \
        [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }            \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      SIZE_FIELD("channels", agent.channels),
      SIZE_FIELD("height", agent.height),
      SIZE_FIELD("width", agent.width),
      SIZE_FIELD("levels", agent.levels),
      {"widths",
       [](RunConfig& c, const Parser& p, std::string_view v) {
         c.agent.widths.clear();
         while (true) {
           const auto comma = v.find(',');
           c.agent.widths.push_back(p.integer(trim(v.substr(0, comma))));
           if (comma == std::string_view::npos) break;
           v.remove_prefix(comma + 1);
         }
       },
       [](const RunConfig& c) {
         std::string s;
         for (auto w : c.agent.widths) s += (s.empty() ? "" : ",") + std::to_string(w);
         return s;
       }},
      SIZE_FIELD("z_dim", agent.z_dim),
      SIZE_FIELD("critic_hidden", agent.critic_hidden),
      BOOL_FIELD("skips", agent.skips),
      {"activation",
       [](RunConfig& c, const Parser& p, std::string_view v) {
         c.agent.activation = p.choice<Activation>(v, {{"relu", Activation::relu},
                                                       {"tanh", Activation::tanh},
                                                       {"sigmoid", Activation::sigmoid},
                                                       {"softplus", Activation::softplus},
                                                       {"leaky_relu", Activation::leaky_relu}});
       },
       [](const RunConfig& c) { return to_string(c.agent.activation); }},
      SIZE_FIELD("horizon", horizon),
      REAL_FIELD("gamma", gamma),
      REAL_FIELD("tau", tau),
      REAL_FIELD("lr_dl", lr_dl),
      REAL_FIELD("lr_q", lr_q),
      REAL_FIELD("lr_pi", lr_pi),
      REAL_FIELD("lr_alpha", lr_alpha),
      REAL_FIELD("lr_disc", lr_disc),
      REAL_FIELD("lambda_rec", lambda_rec),
      REAL_FIELD("lambda_adv", lambda_adv),
      SIZE_FIELD("batch", batch),
      SIZE_FIELD("buffer_capacity", buffer_capacity),
      SIZE_FIELD("min_buffer", min_buffer),
      SIZE_FIELD("gradient_steps", gradient_steps),
      {"optimizer",
       [](RunConfig& c, const Parser& p, std::string_view v) {
         c.optimizer = p.choice<OptimizerKind>(v, {{"adam", OptimizerKind::adam}, {"sgd", OptimizerKind::sgd}});
       },
       [](const RunConfig& c) { return to_string(c.optimizer); }},
      REAL_FIELD("initial_log_alpha", initial_log_alpha),
      {"reward",
       [](RunConfig& c, const Parser& p, std::string_view v) {
         c.reward = p.choice<RewardKind>(v, {{"psnr", RewardKind::psnr}, {"ssim", RewardKind::ssim}});
       },
       [](const RunConfig& c) { return to_string(c.reward); }},
      {"reward_mode",
       [](RunConfig& c, const Parser& p, std::string_view v) {
         c.reward_mode = p.choice<RewardMode>(v, {{"absolute", RewardMode::absolute}, {"delta", RewardMode::delta}});
       },
       [](const RunConfig& c) { return to_string(c.reward_mode); }},
      REAL_FIELD("reward_scale", reward_scale),
      REAL_FIELD("fill_value", fill_value),
      {"dataset",
       [](RunConfig& c, const Parser& p, std::string_view v) {
         c.dataset = p.choice<DatasetKind>(v, {{"stripes", DatasetKind::stripes},
                                                {"blobs", DatasetKind::blobs},
                                                {"gradients", DatasetKind::gradients},
                                                {"directory", DatasetKind::directory}});
       },
       [](const RunConfig& c) { return to_string(c.dataset); }},
      {"data_dir", [](RunConfig& c, const Parser&, std::string_view v) { c.data_dir = std::string(v); },
       [](const RunConfig& c) { return c.data_dir; }},
      {"resize",
       [](RunConfig& c, const Parser& p, std::string_view v) {
         c.resize = p.choice<ResizeMode>(v, {{"nearest", ResizeMode::nearest}, {"bilinear", ResizeMode::bilinear}});
       },
       [](const RunConfig& c) { return to_string(c.resize); }},
      REAL_FIELD("split_fraction", split_fraction),
      SIZE_FIELD("eval_samples", eval_samples),
      SIZE_FIELD("iterations", iterations),
      SIZE_FIELD("seed", seed),
      {"output_dir", [](RunConfig& c, const Parser&, std::string_view v) { c.output_dir = std::string(v); },
       [](const RunConfig& c) { return c.output_dir; }},
      SIZE_FIELD("checkpoint_interval", checkpoint_interval),
      BOOL_FIELD("checkpoint_replay", checkpoint_replay),
      SIZE_FIELD("grid_samples", grid_samples),
  };
  return table;
}

#undef REAL_FIELD
#undef SIZE_FIELD
#undef BOOL_FIELD

// Single-key range checks, reported against the line that set the key.
void check_key(const RunConfig& c, const std::string& key, std::size_t line) {
  auto need = [&](bool ok, const char* invariant) {
    if (!ok) throw ConfigError(line, key + " violates " + invariant);
  };
  if (key == "gamma") need(c.gamma >= 0.0 && c.gamma <= 1.0, "0 <= gamma <= 1");
  if (key == "tau") need(c.tau >= 0.0 && c.tau <= 1.0, "0 <= tau <= 1");
  if (key == "lr_dl") need(c.lr_dl >= 0.0, "lr_dl >= 0");
  if (key == "lr_q") need(c.lr_q >= 0.0, "lr_q >= 0");
  if (key == "lr_disc") need(c.lr_disc >= 0.0, "lr_disc >= 0");
  if (key == "lr_pi") need(c.lr_pi >= 0.0, "lr_pi >= 0");
  if (key == "lr_alpha") need(c.lr_alpha >= 0.0, "lr_alpha >= 0");
  if (key == "lambda_rec") need(c.lambda_rec >= 0.0, "lambda_rec >= 0");
  if (key == "lambda_adv") need(c.lambda_adv >= 0.0, "lambda_adv >= 0");
  if (key == "horizon") need(c.horizon >= 1, "horizon >= 1");
  if (key == "batch") need(c.batch >= 1, "batch >= 1");
  if (key == "buffer_capacity") need(c.buffer_capacity >= 1, "buffer_capacity >= 1");
  if (key == "split_fraction") need(c.split_fraction > 0.0 && c.split_fraction < 1.0, "0 < split_fraction < 1");
  if (key == "channels") need(c.agent.channels == 1 || c.agent.channels == 3, "channels in {1, 3}");
}

}  // namespace

void validate_config(const RunConfig& c) {
  for (const auto& f : fields()) check_key(c, f.key, 0);
  try {
    c.agent.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, e.what());
  }
  if (c.min_buffer > c.buffer_capacity) throw ConfigError(0, "min_buffer violates min_buffer <= buffer_capacity");
  if (c.dataset == DatasetKind::directory && c.data_dir.empty()) {
    throw ConfigError(0, "dataset=directory requires data_dir");
  }
  if (c.output_dir.empty()) throw ConfigError(0, "output_dir must not be empty");
}

RunConfig parse_config(const std::string& text) {
  std::map<std::string, const Field*> by_key;
  for (const auto& f : fields()) by_key.emplace(f.key, &f);

  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  Parser p;
  while (std::getline(in, raw)) {
    ++p.line;
    std::string_view line = raw;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(p.line, "expected key=value, got '" + std::string(line) + "'");
    p.key = std::string(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    auto it = by_key.find(p.key);
    if (it == by_key.end()) throw ConfigError(p.line, "unknown key '" + p.key + "'");
    if (!seen.insert(p.key).second) throw ConfigError(p.line, "duplicate key '" + p.key + "'");
    it->second->set(cfg, p, value);
    check_key(cfg, p.key, p.line);
  }
  validate_config(cfg);
  return cfg;
}

std::string format_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + "=" + f.get(cfg) + "\n";
  return out;
}

}  // namespace saec
