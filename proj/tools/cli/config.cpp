#include "cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <wspec/error.hpp>
#include <wspec/simulation.hpp>

namespace wspec::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw UsageError("invalid value '" + text + "' for " + key);
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw UsageError("invalid boolean '" + text + "' for " + key);
}

using Setter = std::function<void(AnalysisConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"input", [](AnalysisConfig& c, const std::string&, const std::string& v) {
         c.inputs = split(v, ',');
       }},
      {"method", [](AnalysisConfig& c, const std::string&, const std::string& v) { c.method = v; }},
      {"grid.K", [](AnalysisConfig& c, const std::string& k, const std::string& v) {
         c.K = parse_number<std::size_t>(k, v);
       }},
      {"grid.J", [](AnalysisConfig& c, const std::string& k, const std::string& v) {
         c.J = parse_number<std::size_t>(k, v);
       }},
      {"grid.freqs", [](AnalysisConfig& c, const std::string& k, const std::string& v) {
         std::vector<double> f;
         for (const auto& s : split(v, ',')) f.push_back(parse_number<double>(k, s));
         c.grid_freqs = f;
       }},
      {"grid.blocks", [](AnalysisConfig& c, const std::string& k, const std::string& v) {
         std::vector<std::size_t> b;
         for (const auto& s : split(v, ',')) b.push_back(parse_number<std::size_t>(k, s));
         c.grid_blocks = b;
       }},
      {"grid.preset", [](AnalysisConfig& c, const std::string&, const std::string& v) {
         c.grid_preset = v;
       }},
      {"n_perm", [](AnalysisConfig& c, const std::string& k, const std::string& v) {
         c.n_perm = parse_number<std::size_t>(k, v);
       }},
      {"level", [](AnalysisConfig& c, const std::string& k, const std::string& v) {
         c.level = parse_number<double>(k, v);
       }},
      {"seed", [](AnalysisConfig& c, const std::string& k, const std::string& v) {
         c.seed = parse_number<std::uint64_t>(k, v);
       }},
      {"out", [](AnalysisConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }},
      {"lambda", [](AnalysisConfig& c, const std::string& k, const std::string& v) {
         c.lambda = parse_number<double>(k, v);
       }},
      {"theta", [](AnalysisConfig& c, const std::string& k, const std::string& v) {
         const auto parts = split(v, ',');
         if (parts.size() != 4) throw UsageError("theta needs four comma-separated values");
         Theta t{};
         for (std::size_t i = 0; i < 4; ++i) t[i] = parse_number<double>(k, parts[i]);
         c.theta = t;
       }},
      {"sampling_rate", [](AnalysisConfig& c, const std::string& k, const std::string& v) {
         c.sampling_rate = parse_number<double>(k, v);
       }},
      {"column", [](AnalysisConfig& c, const std::string& k, const std::string& v) {
         c.column = parse_number<std::size_t>(k, v);
       }},
      {"fast", [](AnalysisConfig& c, const std::string& k, const std::string& v) {
         c.fast = parse_bool(k, v);
       }},
      {"process", [](AnalysisConfig& c, const std::string&, const std::string& v) { c.process = v; }},
      {"T", [](AnalysisConfig& c, const std::string& k, const std::string& v) {
         c.T = parse_number<std::size_t>(k, v);
       }},
      {"reps", [](AnalysisConfig& c, const std::string& k, const std::string& v) {
         c.reps = parse_number<std::size_t>(k, v);
       }},
      {"methods", [](AnalysisConfig& c, const std::string&, const std::string& v) {
         c.methods = split(v, ',');
       }},
  };
  return table;
}

template <class T>
void take(std::optional<T>& dst, const std::optional<T>& flag) {
  if (flag) dst = flag;
}

Method checked_method(const std::string& name) {
  try {
    return parse_method(name);
  } catch (const InvalidInput&) {
    throw UsageError("unknown method '" + name + "' (expected LS, IM, DM, DV or PO)");
  }
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

std::string fmt(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

}  // namespace

AnalysisConfig parse_config_text(const std::string& text, const std::string& origin) {
  AnalysisConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw UsageError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    it->second(cfg, key, value);
  }
  return cfg;
}

AnalysisConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

AnalysisConfig merge(const AnalysisConfig& file, const AnalysisConfig& flags) {
  AnalysisConfig c = file;
  c.command = flags.command.empty() ? file.command : flags.command;
  if (!flags.inputs.empty()) c.inputs = flags.inputs;
  take(c.method, flags.method);
  take(c.K, flags.K);
  take(c.J, flags.J);
  take(c.grid_freqs, flags.grid_freqs);
  take(c.grid_blocks, flags.grid_blocks);
  take(c.grid_preset, flags.grid_preset);
  take(c.n_perm, flags.n_perm);
  take(c.level, flags.level);
  take(c.seed, flags.seed);
  take(c.out_dir, flags.out_dir);
  take(c.lambda, flags.lambda);
  take(c.theta, flags.theta);
  take(c.sampling_rate, flags.sampling_rate);
  take(c.column, flags.column);
  take(c.fast, flags.fast);
  take(c.process, flags.process);
  take(c.T, flags.T);
  take(c.reps, flags.reps);
  take(c.methods, flags.methods);
  return c;
}

Settings resolve(const AnalysisConfig& cfg) {
  Settings s;
  s.command = cfg.command;
  static const std::vector<std::string> commands = {"estimate", "estimate-tv", "test-stationarity",
                                                    "compare", "simulate"};
  if (std::find(commands.begin(), commands.end(), s.command) == commands.end()) {
    throw UsageError("unknown command '" + s.command + "'");
  }

  const std::size_t want_inputs = s.command == "simulate" ? 0 : (s.command == "compare" ? 2 : 1);
  if (cfg.inputs.size() != want_inputs) {
    throw UsageError(s.command + " expects " + std::to_string(want_inputs) + " input file(s), got " +
                     std::to_string(cfg.inputs.size()));
  }
  for (const auto& in : cfg.inputs) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(in, ec)) throw UsageError("cannot read input file " + in);
    s.inputs.emplace_back(in);
  }

  if (cfg.method) s.method = checked_method(*cfg.method);
  const bool tv = s.command == "estimate-tv" || s.command == "compare" ||
                  s.command == "test-stationarity";
  if (tv && s.method == Method::kPO) {
    throw UsageError("method PO is only available for stationary estimation");
  }
  if (s.command == "test-stationarity" && s.method != Method::kDM && s.method != Method::kDV) {
    throw UsageError("the stationarity test selects smoothing by DM or DV only");
  }

  if (cfg.grid_preset) {
    if (*cfg.grid_preset != "eeg") throw UsageError("unknown grid preset '" + *cfg.grid_preset + "'");
    if (cfg.K || cfg.J || cfg.grid_freqs || cfg.grid_blocks) {
      throw UsageError("grid preset cannot be combined with explicit grid settings");
    }
    s.grid_preset = *cfg.grid_preset;
  }
  s.K = cfg.K.value_or(0);
  s.J = cfg.J.value_or(0);
  if (cfg.K && *cfg.K == 0) throw UsageError("grid.K must be positive");
  if (cfg.J && *cfg.J == 0) throw UsageError("grid.J must be positive");
  if (cfg.grid_freqs) s.grid_freqs = *cfg.grid_freqs;
  if (cfg.grid_blocks) s.grid_blocks = *cfg.grid_blocks;
  if (tv) {
    std::size_t J = s.J;
    if (!s.grid_blocks.empty()) J = s.grid_blocks.size() - 1;
    if (!s.grid_preset.empty()) J = 64;
    if (J != 0 && J < 4) {
      throw UsageError("locally stationary estimation needs at least 4 time blocks, got " +
                       std::to_string(J));
    }
  }

  s.n_perm = cfg.n_perm.value_or(s.n_perm);
  if (s.n_perm < 99) throw UsageError("n_perm must be at least 99");
  s.level = cfg.level.value_or(s.level);
  if (!(s.level > 0.0 && s.level < 1.0)) throw UsageError("level must lie strictly between 0 and 1");
  s.seed = cfg.seed.value_or(s.seed);

  if (cfg.lambda) {
    if (!(*cfg.lambda > 0.0) || !std::isfinite(*cfg.lambda)) throw UsageError("lambda must be positive");
    if (s.method != Method::kDM && s.method != Method::kDV) {
      throw UsageError("a fixed lambda applies to methods DM and DV only");
    }
    s.lambda = cfg.lambda;
  }
  if (cfg.theta) {
    if (!cfg.lambda) throw UsageError("theta override requires lambda");
    for (double t : *cfg.theta) {
      if (!(t >= 0.0) || !std::isfinite(t)) throw UsageError("theta entries must be non-negative");
    }
    s.theta = cfg.theta;
  }
  if (tv && s.lambda && !s.theta) s.theta = Theta{1.0, 1.0, 1.0, 1.0};

  s.sampling_rate = cfg.sampling_rate.value_or(s.sampling_rate);
  if (!(s.sampling_rate > 0.0) || !std::isfinite(s.sampling_rate)) {
    throw UsageError("sampling_rate must be positive");
  }
  s.column = cfg.column.value_or(0);
  s.fast = cfg.fast.value_or(false);

  if (cfg.process) s.process = *cfg.process;
  s.T = cfg.T.value_or(s.T);
  s.reps = cfg.reps.value_or(s.reps);
  if (s.command == "simulate") {
    try {
      (void)process_by_name(s.process, 16, 0);
    } catch (const InvalidInput&) {
      throw UsageError("unknown process '" + s.process + "'");
    }
    if (s.reps == 0) throw UsageError("reps must be at least 1");
    if (s.T < kMinStationaryLength) throw UsageError("T must be at least 8");
    const bool ls = s.process == "LS1" || s.process == "LS2";
    if (ls && s.T < kMinLocallyStationaryLength) {
      throw UsageError("locally stationary processes need T >= " +
                       std::to_string(kMinLocallyStationaryLength));
    }
    if (ls) {
      GridOptions g;
      g.num_freqs = s.K;
      g.num_blocks = s.J;
      try {
        (void)resolve_grid(s.T, g);
      } catch (const InvalidInput& e) {
        throw UsageError(e.what());
      }
    }
    if (cfg.methods) {
      for (const auto& m : *cfg.methods) s.methods.push_back(checked_method(m));
    } else {
      s.methods = {Method::kLS, Method::kIM, Method::kDM, Method::kDV, Method::kPO};
    }
    if (ls) {
      for (Method m : s.methods) {
        if (m == Method::kPO) throw UsageError("method PO is not available for locally stationary processes");
      }
    }
  }

  if (cfg.out_dir) {
    s.out_dir = *cfg.out_dir;
  } else if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') {
    s.out_dir = env;
  } else {
    s.out_dir = kDefaultOutDir;
  }
  std::error_code ec;
  if (std::filesystem::exists(s.out_dir, ec) && !std::filesystem::is_directory(s.out_dir, ec)) {
    throw UsageError("output path " + s.out_dir.string() + " exists and is not a directory");
  }
  return s;
}

std::map<std::string, std::string> echo(const Settings& s) {
  std::map<std::string, std::string> m;
  std::vector<std::string> inputs;
  for (const auto& p : s.inputs) inputs.push_back(p.string());
  if (!inputs.empty()) m["input"] = join(inputs);
  m["seed"] = std::to_string(s.seed);
  if (s.command == "simulate") {
    m["process"] = s.process;
    m["T"] = std::to_string(s.T);
    m["reps"] = std::to_string(s.reps);
    std::vector<std::string> names;
    for (Method x : s.methods) names.emplace_back(method_name(x));
    m["methods"] = join(names);
    if (s.K) m["grid.K"] = std::to_string(s.K);
    if (s.J) m["grid.J"] = std::to_string(s.J);
    return m;
  }
  m["method"] = std::string(method_name(s.method));
  m["level"] = fmt(s.level);
  m["sampling_rate"] = fmt(s.sampling_rate);
  m["column"] = std::to_string(s.column);
  if (s.lambda) m["lambda"] = fmt(*s.lambda);
  if (s.theta) {
    const auto& t = *s.theta;
    m["theta"] = fmt(t[0]) + "," + fmt(t[1]) + "," + fmt(t[2]) + "," + fmt(t[3]);
  }
  if (s.command != "estimate") {
    if (!s.grid_preset.empty()) m["grid.preset"] = s.grid_preset;
    if (s.K) m["grid.K"] = std::to_string(s.K);
    if (s.J) m["grid.J"] = std::to_string(s.J);
    if (!s.grid_freqs.empty()) {
      std::vector<std::string> f;
      for (double w : s.grid_freqs) f.push_back(fmt(w));
      m["grid.freqs"] = join(f);
    }
    if (!s.grid_blocks.empty()) {
      std::vector<std::string> b;
      for (std::size_t x : s.grid_blocks) b.push_back(std::to_string(x));
      m["grid.blocks"] = join(b);
    }
  }
  if (s.command == "test-stationarity") {
    m["n_perm"] = std::to_string(s.n_perm);
    m["fast"] = s.fast ? "true" : "false";
  }
  return m;
}

}  // namespace wspec::cli
