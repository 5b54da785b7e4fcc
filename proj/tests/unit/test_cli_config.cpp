#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "cli/config.hpp"
#include "cli/csv.hpp"

using namespace wspec;
using namespace wspec::cli;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto dir = std::filesystem::temp_directory_path() / "wspec_cli_config_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << text;
  return path;
}

AnalysisConfig base(const std::string& command) {
  AnalysisConfig c;
  c.command = command;
  return c;
}

}  // namespace

TEST(ConfigFile, ParsesKnownKeysAndComments) {
  const auto cfg = parse_config_text(
      "# comment\nmethod = DV\ngrid.K = 16\ngrid.J=8\nlevel = 0.9  # trailing\ntheta = 1, 2, 3, 4\nfast = true\n");
  EXPECT_EQ(cfg.method.value(), "DV");
  EXPECT_EQ(cfg.K.value(), 16u);
  EXPECT_EQ(cfg.J.value(), 8u);
  EXPECT_DOUBLE_EQ(cfg.level.value(), 0.9);
  EXPECT_EQ(cfg.theta.value()[3], 4.0);
  EXPECT_TRUE(cfg.fast.value());
}

TEST(ConfigFile, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_config_text("colour = red\n"), UsageError);
  EXPECT_THROW(parse_config_text("grid.K = many\n"), UsageError);
  EXPECT_THROW(parse_config_text("no equals sign\n"), UsageError);
  EXPECT_THROW(parse_config_text("theta = 1,2\n"), UsageError);
  EXPECT_THROW(parse_config_file("/nonexistent/config.txt"), UsageError);
}

TEST(ConfigFile, FlagsWinOverFile) {
  AnalysisConfig file = parse_config_text("method = DV\nlevel = 0.8\n");
  AnalysisConfig flags;
  flags.method = "LS";
  const AnalysisConfig merged = merge(file, flags);
  EXPECT_EQ(merged.method.value(), "LS");
  EXPECT_DOUBLE_EQ(merged.level.value(), 0.8);
}

TEST(Resolve, DefaultsAndValidation) {
  const auto input = write_temp("x.csv", "1\n2\n3\n");
  AnalysisConfig c = base("estimate");
  c.inputs = {input.string()};
  c.out_dir = "somewhere";
  const Settings s = resolve(c);
  EXPECT_EQ(s.method, Method::kDM);
  EXPECT_DOUBLE_EQ(s.level, 0.95);
  EXPECT_EQ(s.out_dir, "somewhere");

  auto bad = c;
  bad.method = "XX";
  EXPECT_THROW(resolve(bad), UsageError);
  bad = c;
  bad.level = 1.0;
  EXPECT_THROW(resolve(bad), UsageError);
  bad = c;
  bad.inputs = {"/nonexistent.csv"};
  EXPECT_THROW(resolve(bad), UsageError);
  bad = c;
  bad.lambda = -1.0;
  EXPECT_THROW(resolve(bad), UsageError);
  bad = base("frobnicate");
  EXPECT_THROW(resolve(bad), UsageError);
}

TEST(Resolve, TimeVaryingRules) {
  const auto input = write_temp("y.csv", "1\n2\n");
  AnalysisConfig c = base("estimate-tv");
  c.inputs = {input.string()};
  c.J = 1;
  EXPECT_THROW(resolve(c), UsageError);
  c.J = 8;
  c.method = "PO";
  EXPECT_THROW(resolve(c), UsageError);
  c.method = "DM";
  c.grid_preset = "eeg";
  EXPECT_THROW(resolve(c), UsageError);  // preset plus explicit J
  c.J.reset();
  EXPECT_NO_THROW(resolve(c));
  c.lambda = 1e-3;
  EXPECT_EQ(resolve(c).theta.value()[0], 1.0);
}

TEST(Resolve, StationarityTestAndSimulateRules) {
  const auto input = write_temp("z.csv", "1\n2\n");
  AnalysisConfig t = base("test-stationarity");
  t.inputs = {input.string()};
  t.n_perm = 10;
  EXPECT_THROW(resolve(t), UsageError);
  t.n_perm = 99;
  EXPECT_NO_THROW(resolve(t));

  AnalysisConfig s = base("simulate");
  s.reps = 0;
  EXPECT_THROW(resolve(s), UsageError);
  s.reps = 2;
  s.process = "LS1";
  s.T = 1024;
  s.methods = std::vector<std::string>{"DM", "PO"};
  EXPECT_THROW(resolve(s), UsageError);
  s.methods = std::vector<std::string>{"DM", "LS"};
  EXPECT_EQ(resolve(s).methods.size(), 2u);
  s.inputs = {input.string()};
  EXPECT_THROW(resolve(s), UsageError);
}

TEST(Resolve, OutputDirectoryFromEnvironment) {
  const auto input = write_temp("w.csv", "1\n2\n");
  AnalysisConfig c = base("estimate");
  c.inputs = {input.string()};
  ::setenv(kOutDirEnv, "from-env", 1);
  EXPECT_EQ(resolve(c).out_dir, "from-env");
  c.out_dir = "explicit";
  EXPECT_EQ(resolve(c).out_dir, "explicit");
  ::unsetenv(kOutDirEnv);
}

TEST(Resolve, EchoReplaysThroughConfigParser) {
  const auto input = write_temp("v.csv", "1\n2\n");
  AnalysisConfig c = base("estimate-tv");
  c.inputs = {input.string()};
  c.method = "DV";
  c.K = 12;
  c.J = 6;
  c.level = 0.9;
  const Settings s = resolve(c);
  std::string text;
  for (const auto& [k, v] : echo(s)) text += k + " = " + v + "\n";
  AnalysisConfig again = parse_config_text(text);
  again.command = "estimate-tv";
  const Settings s2 = resolve(again);
  EXPECT_EQ(echo(s2), echo(s));
}

TEST(Csv, HeaderDetectionAndChannels) {
  const auto path = write_temp("t.csv", "a,b\n1,2\n3,4\n5,6\n");
  const ChannelTable t = read_channels(path, 200.0);
  ASSERT_EQ(t.channels.size(), 2u);
  EXPECT_EQ(t.names[1], "b");
  EXPECT_EQ(t.channels[1].values, (std::vector<double>{2, 4, 6}));
  EXPECT_DOUBLE_EQ(t.channels[0].sampling_rate_hz, 200.0);
  const ChannelTable u = read_channels(write_temp("u.csv", "1.5\n-2e-3\n"));
  EXPECT_EQ(u.names[0], "ch0");
  EXPECT_DOUBLE_EQ(u.channels[0].values[1], -2e-3);
}

TEST(Csv, RejectsMalformedInput) {
  EXPECT_THROW(read_channels(write_temp("r.csv", "1,2\n3\n")), UsageError);
  EXPECT_THROW(read_channels(write_temp("n.csv", "1\nabc\n")), UsageError);
  EXPECT_THROW(read_channels(write_temp("e.csv", "")), UsageError);
  EXPECT_THROW(read_channels(write_temp("i.csv", "1\ninf\n")), UsageError);
}

TEST(Csv, Formatting) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(csv_text({"a", "b"}, {{"1", "2"}}), "a,b\n1,2\n");
}
