#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "textalpha/classifiers.hpp"
#include "textalpha/splits.hpp"

namespace textalpha {

struct EncoderSize {
  std::string name;
  std::size_t d_model = 64;
  std::size_t n_layers = 1;
  std::size_t n_heads = 2;
  std::size_t d_ff = 256;
};

/// Everything a run needs. Loaded from JSON; relative paths resolve against
/// the config file's directory.
struct ExperimentConfig {
  std::filesystem::path documents;
  std::filesystem::path prices;
  std::filesystem::path output_dir = "out";
  std::string source = "news";  // news | blogs | report | any

  int from_year = 2012;
  int to_year = 2019;
  std::size_t top_n = 250;
  std::size_t min_items = 170;
  std::size_t paragraph_min_chars = 200;

  SplitConfig split;
  ModelKind model = ModelKind::Transformer;
  ClassifierSettings classifier;
  std::string encoder_preset = "paper";
  std::vector<int> sweep_epochs = {1, 2, 3, 4};
  std::vector<EncoderSize> sweep_sizes;
  std::size_t k = 10;
  std::uint64_t seed = 42;

  /// Throws UsageError on invalid values.
  void validate() const;
  /// Canonical JSON of the effective settings (output_dir excluded).
  std::string canonical_json() const;
  std::string hash() const;
};

/// Parses a config document; `base_dir` anchors relative paths.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Runs one CLI invocation (argv[0] is the program name) and returns the exit
/// status: 0 ok, 1 usage/config error, 2 data error, 3 validation failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace textalpha
