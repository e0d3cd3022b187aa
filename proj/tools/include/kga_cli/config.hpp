#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kga/embedding.hpp"
#include "kga/error.hpp"
#include "kga/trainer.hpp"

namespace kga::cli {

/// Raised for bad config keys or values; the CLI treats it as a usage error.
class ConfigError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

enum class Supervision { Unsupervised, Weak, Supervised };

std::string to_string(Supervision mode);
Supervision parse_supervision(const std::string& name);

struct SynthConfig {
  std::size_t entities = 200;
  std::size_t relations = 20;
  std::size_t triplets = 3000;
  double overlap = 0.9;
  double seed_fraction = 0.05;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  Supervision mode = Supervision::Weak;

  std::filesystem::path source;
  std::filesystem::path target;
  std::filesystem::path seeds;
  std::filesystem::path test;
  std::filesystem::path source_embedding;
  std::filesystem::path target_embedding;
  std::filesystem::path checkpoint;
  std::filesystem::path out_dir = ".";
  double validation_fraction = 0.0;
  std::size_t top = 100;

  EmbedConfig embed;
  TrainConfig train;
  SynthConfig synth;
};

/// Key → value text, as read from a config file, the environment, or flags.
using KeyValues = std::map<std::string, std::string>;

/// Every recognised key, in the order `render_config` writes them.
const std::vector<std::string>& config_keys();

/// Flat "key = value" lines; '#' starts a comment. Unknown keys are rejected.
KeyValues parse_config_text(const std::string& text, const std::string& origin);
KeyValues read_config_file(const std::filesystem::path& path);

/// KGA_<KEY> variables (key upper-cased) from the given environment block.
KeyValues env_overrides(char** environ_block);

/// Later layers win.
KeyValues merge(std::initializer_list<const KeyValues*> layers);

RunConfig build_config(const KeyValues& values);

/// Every key with its effective value; parses back to the same RunConfig.
std::string render_config(const RunConfig& config);

/// The named-stream seeds each stage draws from the root seed.
std::uint64_t stage_seed(const RunConfig& config, const char* stage);

}  // namespace kga::cli
