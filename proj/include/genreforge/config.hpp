/// @file config.hpp
/// @brief Run configuration: defaults, flat key=value files and overrides.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "genreforge/classifier.hpp"
#include "genreforge/eval.hpp"
#include "genreforge/features.hpp"

namespace genreforge {

struct RunConfig {
  std::string dataset_dir;
  std::string csv;
  std::string features;  // feature cache path
  std::string out = "genreforge-out";
  std::uint64_t seed = 42;
  std::vector<ModelKind> models = {ModelKind::Mlp, ModelKind::Knn, ModelKind::Cnn, ModelKind::Forest};
  FeatureConfig pipeline;
  ModelSettings settings;
  eval::SplitSpec split;
  std::vector<std::size_t> k_values = {1, 3, 5, 7, 9, 11, 15, 21};
  std::size_t folds = 5;
  std::size_t top = 3;

  /// Throws InvalidArgument when a count is zero or a fraction is out of range.
  void validate() const;
};

/// Parses `key = value` lines; `#` starts a comment, blank lines are ignored.
/// Later duplicates win. Throws InvalidArgument on a line without '='.
std::map<std::string, std::string> parse_key_values(std::string_view text);

/// Throws InvalidArgument for an unknown key or an unparsable value.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Every key with its current value, sorted by key. Applying the snapshot to
/// a default RunConfig reproduces `cfg`.
std::vector<std::pair<std::string, std::string>> snapshot(const RunConfig& cfg);
std::string snapshot_text(const RunConfig& cfg);

/// Known keys, sorted.
std::vector<std::string> known_keys();

}  // namespace genreforge
