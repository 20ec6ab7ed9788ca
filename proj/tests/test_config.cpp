#include <gtest/gtest.h>

#include <string>

#include "saec/config.hpp"
#include "saec/losses.hpp"

using namespace saec;

namespace {

std::string message_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::size_t line_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST(Config, EmptyTextGivesDefaults) {
  RunConfig c = parse_config("");
  EXPECT_EQ(c, RunConfig{});
  EXPECT_EQ(c.lambda_rec, 10.0);
  EXPECT_EQ(c.lambda_adv, 1.0);
  EXPECT_EQ(c.gamma, 0.99);
  EXPECT_EQ(c.tau, 0.005);
  EXPECT_EQ(c.lr_dl, 3e-4);
  EXPECT_EQ(c.lr_q, 3e-4);
  EXPECT_EQ(c.lr_pi, 3e-4);
  EXPECT_EQ(c.lr_alpha, 3e-4);
  EXPECT_EQ(c.batch, 32u);
  EXPECT_EQ(c.gradient_steps, 2u);
  EXPECT_EQ(c.initial_log_alpha, 0.0);
}

TEST(Config, CommentsAndWhitespace) {
  RunConfig c = parse_config("# header\n\n  gamma = 0.5   # trailing\nskips=false\n");
  EXPECT_EQ(c.gamma, 0.5);
  EXPECT_FALSE(c.agent.skips);
}

TEST(Config, InvariantViolationNamesKeyAndLine) {
  const std::string text = "seed=3\ngamma=1.5\n";
  const std::string msg = message_of(text);
  EXPECT_NE(msg.find("gamma"), std::string::npos) << msg;
  EXPECT_NE(msg.find("0 <= gamma <= 1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  EXPECT_EQ(line_of(text), 2u);
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW(parse_config("nonsense=1\n"), ConfigError);
  EXPECT_THROW(parse_config("seed=1\nseed=2\n"), ConfigError);
  EXPECT_THROW(parse_config("gamma=abc\n"), ConfigError);
  EXPECT_THROW(parse_config("gamma=nan\n"), ConfigError);
  EXPECT_THROW(parse_config("batch=-3\n"), ConfigError);
  EXPECT_THROW(parse_config("batch\n"), ConfigError);
  EXPECT_THROW(parse_config("reward=mse\n"), ConfigError);
  EXPECT_THROW(parse_config("skips=maybe\n"), ConfigError);
  EXPECT_THROW(parse_config("tau=-0.1\n"), ConfigError);
  EXPECT_THROW(parse_config("horizon=0\n"), ConfigError);
  EXPECT_THROW(parse_config("channels=2\n"), ConfigError);
  EXPECT_THROW(parse_config("split_fraction=1\n"), ConfigError);
  EXPECT_EQ(line_of("seed=1\n\nseed=2\n"), 3u);
  EXPECT_EQ(line_of("# c\nbogus=1\n"), 2u);
}

TEST(Config, CrossFieldChecks) {
  EXPECT_THROW(parse_config("buffer_capacity=10\nmin_buffer=11\n"), ConfigError);
  EXPECT_THROW(parse_config("dataset=directory\n"), ConfigError);
  EXPECT_THROW(parse_config("height=30\n"), ConfigError);  // not divisible by 2^levels
  EXPECT_THROW(parse_config("widths=8,16\n"), ConfigError);  // levels=3
  EXPECT_NO_THROW(parse_config("levels=2\nwidths=8,16\n"));
  EXPECT_EQ(line_of("buffer_capacity=10\nmin_buffer=11\n"), 0u);
}

TEST(Config, FormatRoundTrips) {
  RunConfig c;
  c.gamma = 0.1 + 0.2;  // not exactly representable in short decimal form
  c.tau = 1.0 / 3.0;
  c.agent.widths = {4, 8, 12};
  c.agent.skips = false;
  c.agent.activation = Activation::tanh;
  c.reward = RewardKind::ssim;
  c.reward_mode = RewardMode::delta;
  c.dataset = DatasetKind::blobs;
  c.optimizer = OptimizerKind::sgd;
  c.resize = ResizeMode::nearest;
  c.seed = 0xffffffffffffffffULL;
  c.output_dir = "some/dir";
  const std::string text = format_config(c);
  RunConfig back = parse_config(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(format_config(back), text);
}

TEST(Config, TargetEntropyFollowsLatentSize) {
  RunConfig c = parse_config("z_dim=16\n");
  EXPECT_EQ(Temperature::create(c.agent.z_dim, c.initial_log_alpha).target_entropy, -16.0);
}

TEST(Config, EnvViewCopiesEnvironmentFields) {
  RunConfig c = parse_config("horizon=5\nreward=ssim\nreward_mode=delta\nfill_value=-1\n");
  EnvConfig e = c.env();
  EXPECT_EQ(e.horizon, 5u);
  EXPECT_EQ(e.reward, RewardKind::ssim);
  EXPECT_EQ(e.mode, RewardMode::delta);
  EXPECT_EQ(e.fill_value, -1.0);
}
