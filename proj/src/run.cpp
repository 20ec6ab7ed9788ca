#include "saec/run.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "saec/checkpoint.hpp"
#include "saec/image_io.hpp"
#include "saec/metrics.hpp"

namespace saec {

namespace fs = std::filesystem;

namespace {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

Tensor to_unit(const Tensor& t) {
  std::vector<double> v(t.data().begin(), t.data().end());
  for (auto& x : v) x = to_unit_range(x);
  return Tensor::from(t.shape(), std::move(v));
}

std::vector<Episode> grid_episodes(const Agent& agent, const DataSource& source, const EnvConfig& env,
                                   std::size_t count) {
  std::vector<Episode> eps;
  for (std::size_t i = 0; i < std::min(count, source.test_count()); ++i) {
    eps.push_back(run_episode(agent, source.test_sample(i), env, std::nullopt));
  }
  return eps;
}

void write_grid(const fs::path& path, const Agent& agent, const DataSource& source, const RunConfig& cfg) {
  auto eps = grid_episodes(agent, source, cfg.env(), cfg.grid_samples);
  if (eps.empty()) return;
  write_pnm(path, episode_grid(eps));
}

std::string image_ext(const RunConfig& cfg) { return cfg.agent.channels == 1 ? ".pgm" : ".ppm"; }

Trainer make_trainer(const RunConfig& cfg) { return Trainer(cfg, make_data_source(cfg)); }

template <typename Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    log << "numeric abort: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const CheckpointError& e) {
    log << "checkpoint error: " << e.what() << '\n';
    return kExitCheckpoint;
  } catch (const IoError& e) {
    log << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ImageIoError& e) {
    log << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    log << "i/o error: " << e.what() << '\n';
    return kExitIo;
  }
}

fs::path prepare_output(const RunConfig& cfg) {
  fs::path dir = resolve_output_dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

}  // namespace

fs::path resolve_output_dir(const std::string& output_dir) {
  fs::path dir(output_dir);
  const char* root = std::getenv(kOutputRootEnv);
  if (root && *root && dir.is_relative()) dir = fs::path(root) / dir;
  return dir;
}

std::string metrics_row(const IterationReport& r, std::size_t horizon) {
  std::string row = std::to_string((r.iteration + 1) * horizon) + "," + std::to_string(r.iteration) + "," +
                    num(r.reward_mean) + "," + num(r.psnr) + "," + num(r.ssim);
  if (r.gradient_steps > 0) {
    const LossReport& l = r.losses;
    for (double v : {l.l_rec, l.l_adv, l.j_q1, l.j_q2, l.j_pi, l.alpha_value, l.mean_logprob}) row += "," + num(v);
  } else {
    row += ",,,,,,,";
  }
  return row;
}

DirectoryLock::DirectoryLock(const fs::path& dir) : path_(dir / ".lock") {
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f) throw IoError("output directory " + dir.string() + " is locked by another run (" + path_.string() + ")");
  std::fclose(f);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

EvalSummary evaluate(const Agent& agent, const DataSource& source, const EnvConfig& env) {
  EvalSummary s;
  s.samples = source.test_count();
  for (std::size_t i = 0; i < s.samples; ++i) {
    Episode ep = run_episode(agent, source.test_sample(i), env, std::nullopt);
    s.psnr.push_back(ep.final_psnr);
    s.ssim.push_back(ep.final_ssim);
  }
  auto stats = [](const std::vector<double>& v, double& m, double& sd) {
    if (v.empty()) return;
    m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    sd = std::sqrt(ss / static_cast<double>(v.size()));
  };
  stats(s.psnr, s.psnr_mean, s.psnr_std);
  stats(s.ssim, s.ssim_mean, s.ssim_std);
  return s;
}

Tensor episode_grid(const std::vector<Episode>& episodes) {
  std::vector<Tensor> panels;
  const std::size_t cols = episodes.front().states.size() + 1;
  for (const auto& ep : episodes) {
    for (const auto& s : ep.states) panels.push_back(to_unit(s));
    panels.push_back(to_unit(ep.target));
  }
  return tile_images(panels, cols);
}

int run_train(const RunConfig& cfg, const std::optional<fs::path>& resume, std::ostream& log) {
  return guarded(log, [&] {
    validate_config(cfg);
    const fs::path dir = prepare_output(cfg);
    DirectoryLock lock(dir);
    write_text(dir / "config.resolved", format_config(cfg));

    Trainer trainer = make_trainer(cfg);
    if (resume) {
      load_checkpoint(*resume, trainer);
      log << "resumed from " << resume->string() << " at iteration " << trainer.iteration() << '\n';
    }

    const fs::path csv_path = dir / "metrics.csv";
    const bool append = resume && fs::exists(csv_path);
    std::ofstream csv(csv_path, append ? std::ios::app : std::ios::trunc);
    if (!csv) throw IoError("cannot open " + csv_path.string());
    if (!append) csv << kMetricsHeader << '\n';
    csv.flush();

    fs::create_directories(dir / "checkpoints");
    fs::create_directories(dir / "grids");
    auto checkpoint = [&](const std::string& name) {
      save_checkpoint(dir / "checkpoints" / (name + ".saec"), trainer, cfg.checkpoint_replay);
      write_grid(dir / "grids" / (name + image_ext(cfg)), trainer.agent, trainer.source(), cfg);
    };

    while (trainer.iteration() < cfg.iterations) {
      IterationReport r = trainer.train_iteration();
      csv << metrics_row(r, cfg.horizon) << '\n';
      if (!csv) throw IoError("cannot append to " + csv_path.string());
      const std::uint64_t done = trainer.iteration();
      if (done % 50 == 0) {
        log << "iteration " << done << " psnr " << r.psnr << " ssim " << r.ssim << '\n';
      }
      if (cfg.checkpoint_interval > 0 && done % cfg.checkpoint_interval == 0) {
        char name[32];
        std::snprintf(name, sizeof name, "iter_%06llu", static_cast<unsigned long long>(done));
        csv.flush();
        checkpoint(name);
      }
    }
    csv.flush();
    checkpoint("final");
    return static_cast<int>(kExitOk);
  });
}

int run_eval(const RunConfig& cfg, const std::optional<fs::path>& checkpoint, std::ostream& log) {
  return guarded(log, [&] {
    validate_config(cfg);
    const fs::path dir = prepare_output(cfg);
    DirectoryLock lock(dir);
    Trainer trainer = make_trainer(cfg);
    if (checkpoint) load_checkpoint(*checkpoint, trainer);

    EvalSummary s = evaluate(trainer.agent, trainer.source(), cfg.env());
    std::string csv = "sample,psnr,ssim\n";
    for (std::size_t i = 0; i < s.samples; ++i) csv += std::to_string(i) + "," + num(s.psnr[i]) + "," + num(s.ssim[i]) + "\n";
    write_text(dir / "eval.csv", csv);
    const std::string summary = "samples=" + std::to_string(s.samples) + "\npsnr_mean=" + num(s.psnr_mean) +
                                "\npsnr_std=" + num(s.psnr_std) + "\nssim_mean=" + num(s.ssim_mean) +
                                "\nssim_std=" + num(s.ssim_std) + "\n";
    write_text(dir / "eval_summary.txt", summary);
    write_grid(dir / ("eval_grid" + image_ext(cfg)), trainer.agent, trainer.source(), cfg);
    log << summary;
    return static_cast<int>(kExitOk);
  });
}

int run_export(const RunConfig& cfg, const std::optional<fs::path>& checkpoint, std::ostream& log) {
  return guarded(log, [&] {
    validate_config(cfg);
    const fs::path dir = prepare_output(cfg);
    DirectoryLock lock(dir);
    Trainer trainer = make_trainer(cfg);
    if (checkpoint) load_checkpoint(*checkpoint, trainer);
    fs::create_directories(dir / "samples");
    auto eps = grid_episodes(trainer.agent, trainer.source(), cfg.env(), cfg.grid_samples);
    for (std::size_t i = 0; i < eps.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "sample_%04zu", i);
      write_pnm(dir / "samples" / (name + image_ext(cfg)),
                episode_grid({eps[i]}));
    }
    log << "wrote " << eps.size() << " sample grids to " << (dir / "samples").string() << '\n';
    return static_cast<int>(kExitOk);
  });
}

}  // namespace saec
