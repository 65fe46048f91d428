#pragma once

// Run configuration: line-oriented "key = value" files with '#' comments.

#include "gaplap/train.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace gaplap {

struct RunConfig {
  TrainConfig train;
  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string embeddings_path;
  std::string model_path = "model.gaplap";
  std::string log_path;  // defaults to model_path + ".log"
  double labeled_fraction = 0.1;
  int min_freq = 2;
};

/// Applies one setting. Throws ConfigError on unknown keys or bad values.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Reads settings from a stream. Relative paths are resolved against base_dir.
void apply_config(RunConfig& config, std::istream& in, const std::string& base_dir = "");
RunConfig load_config_file(const std::string& path);

/// "key = value" dump of every setting, in apply_setting's vocabulary.
std::string describe(const RunConfig& config);

}  // namespace gaplap
