#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "structmap/structeval.hpp"
#include "structmap/synthgen.hpp"
#include "structmap/trainer.hpp"

namespace structmap::cli {

/// Resolved settings for one invocation: config file first, flags on top.
struct RunConfig {
  std::uint64_t seed = 7;
  SynthConfig synth;
  TrainConfig train;
  EvalConfig eval;
  std::filesystem::path dataset;
  std::filesystem::path model;
  std::filesystem::path out;
  std::size_t threads = 0;

  /// Propagates the global seed into every section.
  void apply_seed();
};

/// Merges a JSON config document into cfg. Unknown keys raise InvalidConfig
/// naming the dotted key path.
void merge_config(RunConfig& cfg, const nlohmann::json& doc);
void merge_config_file(RunConfig& cfg, const std::filesystem::path& path);

nlohmann::ordered_json to_json(const RunConfig& cfg);

}  // namespace structmap::cli
