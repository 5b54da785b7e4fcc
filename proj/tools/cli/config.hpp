#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <wspec/kernels.hpp>
#include <wspec/selection.hpp>

namespace wspec::cli {

/// Raised for any usage or validation problem; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Settings as given; unset fields fall back to defaults in resolve().
struct AnalysisConfig {
  std::string command;
  std::vector<std::string> inputs;
  std::optional<std::string> method;
  std::optional<std::size_t> K;
  std::optional<std::size_t> J;
  std::optional<std::vector<double>> grid_freqs;
  std::optional<std::vector<std::size_t>> grid_blocks;
  std::optional<std::string> grid_preset;
  std::optional<std::size_t> n_perm;
  std::optional<double> level;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<double> lambda;
  std::optional<Theta> theta;
  std::optional<double> sampling_rate;
  std::optional<std::size_t> column;
  std::optional<bool> fast;
  std::optional<std::string> process;
  std::optional<std::size_t> T;
  std::optional<std::size_t> reps;
  std::optional<std::vector<std::string>> methods;
};

/// Fully resolved and validated settings for one command.
struct Settings {
  std::string command;
  std::vector<std::filesystem::path> inputs;
  Method method = Method::kDM;
  std::size_t K = 0;  // 0 = automatic
  std::size_t J = 0;
  std::vector<double> grid_freqs;
  std::vector<std::size_t> grid_blocks;
  std::string grid_preset;
  std::size_t n_perm = 199;
  double level = 0.95;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir;
  std::optional<double> lambda;
  std::optional<Theta> theta;
  double sampling_rate = 1.0;
  std::size_t column = 0;
  bool fast = false;
  std::string process = "AR3";
  std::size_t T = 128;
  std::size_t reps = 20;
  std::vector<Method> methods;
};

/// Reads a flat `key = value` file; '#' starts a comment. Unknown keys are rejected.
AnalysisConfig parse_config_file(const std::filesystem::path& path);
AnalysisConfig parse_config_text(const std::string& text, const std::string& origin = "config");

/// Fields set in `flags` win over `file`.
AnalysisConfig merge(const AnalysisConfig& file, const AnalysisConfig& flags);

/// Applies defaults, the output-directory environment variable and all checks.
Settings resolve(const AnalysisConfig& cfg);

/// key -> value strings describing the resolved settings, for bundle metadata.
std::map<std::string, std::string> echo(const Settings& s);

inline constexpr const char* kOutDirEnv = "WSPEC_OUT_DIR";
inline constexpr const char* kDefaultOutDir = "wspec-output";

}  // namespace wspec::cli
