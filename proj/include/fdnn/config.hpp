#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fdnn/evaluate.hpp"
#include "fdnn/simulate.hpp"
#include "fdnn/spectrum.hpp"
#include "fdnn/train.hpp"

namespace fdnn {

/// Data-generating settings. The kernel dimension follows dims.
struct SimulateSettings {
  std::string mean = "case2-2d";
  std::vector<std::size_t> dims{15, 15};
  std::size_t n = 50;
  double sigma = 1.0;
  std::string kernel = "cosine";  ///< cosine | bernoulli | zero
  double xi_var = 1.0;
  bool normalize_by_d = false;
  double varrho = 2.0;
  std::size_t k_max = 1'000'000;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

KernelSpec make_kernel(const SimulateSettings& settings, std::size_t d);
NoiseSpec make_noise(double sigma);

struct ExperimentSettings {
  std::string name = "custom";
  std::vector<double> sigmas{1.0};
  std::vector<std::vector<std::size_t>> dims{{15, 15}};
  std::vector<std::size_t> ns{50};
  std::size_t reps = 20;
  std::uint64_t seed = 2024;
  std::size_t jobs = 1;
};

/// Every tunable, one INI section per module:
/// [simulate] [network] [train] [experiment].
struct RunConfig {
  SimulateSettings simulate;
  ArchitectureSettings network;
  TrainConfig train;
  ExperimentSettings experiment;
};

/// All "section.key" names, in echo order.
std::vector<std::string> config_keys();

/// Assigns one "section.key". Throws ConfigError naming the key on an unknown
/// key or unparseable value.
void set_value(RunConfig& config, const std::string& key, const std::string& value);
/// "section.key=value"
void apply_override(RunConfig& config, const std::string& assignment);
std::string get_value(const RunConfig& config, const std::string& key);

/// Reads an INI file on top of `config`. Unreadable files throw IoError,
/// syntax errors and unknown keys ConfigError.
void load_ini(RunConfig& config, const std::filesystem::path& path);

/// Every key with its resolved value, readable by load_ini.
std::string to_ini(const RunConfig& config);

/// Range checks; messages name the offending key. The [experiment] section
/// is only checked when `sweep` is set.
void validate(const RunConfig& config, bool sweep = true);

/// The simulation-study designs: "case1-2d", "case2-2d", "case3d".
std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
RunConfig preset(const std::string& name);

}  // namespace fdnn
