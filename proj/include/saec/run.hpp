#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "saec/config.hpp"
#include "saec/trainer.hpp"

namespace saec {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitNumeric = 3,
  kExitIo = 4,
  kExitCheckpoint = 5,
};

/// Environment variable that, when set, prefixes relative output dirs.
inline constexpr const char* kOutputRootEnv = "SAEC_OUTPUT_ROOT";

std::filesystem::path resolve_output_dir(const std::string& output_dir);

inline constexpr const char* kMetricsHeader =
    "step,episode,reward_mean,psnr,ssim,l_rec,l_adv,j_q1,j_q2,j_pi,alpha,mean_logprob";

/// One CSV row; loss fields are left empty when no update ran.
std::string metrics_row(const IterationReport& r, std::size_t horizon);

/// Exclusive ownership of an output directory for the life of the object.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path path_;
};

struct EvalSummary {
  std::size_t samples = 0;
  double psnr_mean = 0.0;
  double psnr_std = 0.0;
  double ssim_mean = 0.0;
  double ssim_std = 0.0;
  std::vector<double> psnr;
  std::vector<double> ssim;
};

/// Deterministic-policy rollouts over the held-out split.
EvalSummary evaluate(const Agent& agent, const DataSource& source, const EnvConfig& env);

/// input | state after each step | target, one row per sample, [0, 1] range.
Tensor episode_grid(const std::vector<Episode>& episodes);

int run_train(const RunConfig& cfg, const std::optional<std::filesystem::path>& resume, std::ostream& log);
int run_eval(const RunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint, std::ostream& log);
int run_export(const RunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint, std::ostream& log);

}  // namespace saec
