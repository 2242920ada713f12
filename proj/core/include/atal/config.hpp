#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "atal/adversary.hpp"
#include "atal/dataset.hpp"
#include "atal/superpixel.hpp"
#include "atal/trajectory.hpp"

namespace atal {

/// Every tunable of an AL experiment. Serialised as a flat `key = value`
/// text file; see README for the key list.
struct ExperimentConfig {
  // data.*
  std::filesystem::path train_manifest;  // empty: generate in memory
  std::filesystem::path test_manifest;
  std::uint64_t generator_seed = 7;
  int image_size = 32;
  int train_count = 24;
  int test_count = 24;
  GeneratorParams generator;

  std::string architecture = "grid16";

  AttackConfig attack;
  double margin_threshold = 0.5;

  CclsConfig ccls{0.003, 0.0003, 1000, 5};
  double constant_lr = 0.00165;  // schedule of the no-CCLS ablation

  double momentum = 0.9;
  int batch_images = 1;
  bool fine_tune = false;
  double grad_clip = 0.0;

  int den_members = 5;
  double den_lr = 0.00165;

  double k_percent = 3.0;
  int cover_ratio = 4;
  int candidate_cap = 512;

  SlicParams superpixel{96, 10.0, 10};

  int initial_points = 2;
  int points_per_round = 2;
  int max_budget = 20;
  int target_budget = 10;

  int full_iterations = 2000;
  /// Score the snapshot ensemble of the round's trajectory instead of its
  /// final model.
  bool eval_ensemble = true;
  int probe_count = 8;

  std::vector<std::uint64_t> seeds{1, 2, 3};

  bool save_trajectories = false;
  bool dump_maps = false;

  /// Throws InvalidInput on inconsistent values.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Applies `key = value` pairs on top of `base`. Unknown keys throw.
ExperimentConfig apply_overrides(ExperimentConfig base, const std::map<std::string, std::string>& kv);

/// Parses the text format: one `key = value` per line, '#' starts a comment.
std::map<std::string, std::string> parse_key_values(const std::string& text);

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig read_config(const std::filesystem::path& path);
/// Full dump of every key; parse_config(to_text(c)) == c.
std::string to_text(const ExperimentConfig& config);
void write_config(const std::filesystem::path& path, const ExperimentConfig& config);

}  // namespace atal
