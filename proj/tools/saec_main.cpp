// saec train|eval|export-samples [--config PATH] [--checkpoint PATH] [--out DIR] [--seed N]

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "saec/config.hpp"
#include "saec/run.hpp"

namespace {

std::optional<saec::RunConfig> load_config(const std::string& path, int& status) {
  std::string text;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) {
      std::cerr << "cannot read config " << path << '\n';
      status = saec::kExitIo;
      return std::nullopt;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  try {
    return saec::parse_config(text);
  } catch (const saec::ConfigError& e) {
    std::cerr << (path.empty() ? std::string("<defaults>") : path) << ": " << e.what() << '\n';
    status = saec::kExitConfig;
    return std::nullopt;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic actor-executor-critic image translation"};
  app.require_subcommand(1);

  std::string config_path, checkpoint, out;
  std::optional<std::uint64_t> seed;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key=value configuration file");
    cmd->add_option("--checkpoint", checkpoint, "checkpoint to resume from or evaluate");
    cmd->add_option("--out", out, "output directory (overrides output_dir)");
    cmd->add_option("--seed", seed, "master seed (overrides seed)");
  };
  auto* train = app.add_subcommand("train", "run training");
  auto* eval = app.add_subcommand("eval", "evaluate the deterministic policy on the held-out split");
  auto* exp = app.add_subcommand("export-samples", "write per-sample rollout grids");
  for (auto* cmd : {train, eval, exp}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : saec::kExitUsage;
  }

  int status = saec::kExitOk;
  auto cfg = load_config(config_path, status);
  if (!cfg) return status;
  if (!out.empty()) cfg->output_dir = out;
  if (seed) cfg->seed = *seed;

  std::optional<std::filesystem::path> ckpt;
  if (!checkpoint.empty()) ckpt = checkpoint;

  if (train->parsed()) return saec::run_train(*cfg, ckpt, std::cout);
  if (eval->parsed()) return saec::run_eval(*cfg, ckpt, std::cout);
  return saec::run_export(*cfg, ckpt, std::cout);
}
