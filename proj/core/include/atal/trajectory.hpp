#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "atal/gridnet.hpp"

namespace atal {

/// Cyclic cosine learning-rate schedule.
struct CclsConfig {
  double eta_max = 0.1;
  double eta_min = 0.001;
  int iterations = 500;  // I
  int cycles = 5;        // L

  /// floor(I / L)
  int cycle_length() const { return iterations / cycles; }
  /// Throws InvalidInput unless eta_max >= eta_min >= 0 and I >= L >= 1.
  void validate() const;
  friend bool operator==(const CclsConfig&, const CclsConfig&) = default;
};

/// eta_min + (eta_max - eta_min) / 2 * (1 + cos(pi * ((i - 1) mod C) / C)) for
/// 1 <= i <= I. Starts every cycle at eta_max and ends it just above eta_min.
double ccls_lr(int iteration, const CclsConfig& cfg);

/// Learning rate per iteration. The constant variant keeps the CCLS
/// iteration count and snapshot positions so trajectories stay comparable.
struct Schedule {
  enum class Kind { cyclic_cosine, constant };
  Kind kind = Kind::cyclic_cosine;
  CclsConfig ccls;
  double constant_lr = 0.01;

  static Schedule cyclic(const CclsConfig& cfg) { return {Kind::cyclic_cosine, cfg, 0.0}; }
  static Schedule constant(const CclsConfig& cfg, double lr) { return {Kind::constant, cfg, lr}; }

  double lr(int iteration) const;
};

/// One training image with its supervised pixels.
struct TrainExample {
  const Image* image = nullptr;
  std::vector<PixelTarget> targets;
};

struct TrainOptions {
  double momentum = 0.9;
  int batch_images = 1;
  std::uint64_t shuffle_seed = 0;
  /// Rescales the batch gradient to this L2 norm when it is larger; 0 disables.
  double grad_clip = 0.0;
};

struct Trajectory {
  /// Value copies of the model at the last iteration of each cycle.
  std::vector<GridNet> snapshots;
  std::vector<int> snapshot_iterations;
  /// Per-image weight updates spent producing this trajectory.
  std::uint64_t update_count = 0;
  /// schedule_trace[i - 1] is the learning rate used at iteration i.
  std::vector<double> schedule_trace;
  /// Mean batch loss per iteration.
  std::vector<double> loss_trace;
  /// Live model after the final iteration.
  GridNet final_model;
};

/// Runs schedule.ccls.iterations SGD steps (warm restarts, weights never
/// re-initialised) and snapshots at iterations C, 2C, ..., L*C. Examples
/// without supervised pixels are skipped; throws InvalidInput if none remain.
Trajectory train_with_snapshots(GridNet model, std::span<const TrainExample> examples,
                                const Schedule& schedule, const TrainOptions& options);

/// Arithmetic mean of the members' probability maps.
ProbMap ensemble_predict(std::span<const GridNet> members, const Image& image);

/// Mean over probes and over consecutive pairs in `window` of the mean
/// absolute per-pixel output change. Needs at least two snapshots.
double homogenization(std::span<const GridNet> window, std::span<const Image> probes);
/// Same, restricted to the last `tau + 1` snapshots of the trajectory.
double homogenization(const Trajectory& trajectory, int tau, std::span<const Image> probes);

/// Deep-ensemble baseline: independently initialised, independently shuffled
/// members trained with a constant learning rate.
struct EnsembleBaseline {
  std::vector<GridNet> members;
  std::uint64_t update_count = 0;
};

/// Throws InvalidInput for fewer than two seeds or duplicate seeds.
EnsembleBaseline train_den(std::span<const std::uint64_t> seeds, const std::string& architecture_id,
                           int in_channels, std::span<const TrainExample> examples, int iterations,
                           double lr, const TrainOptions& options);

/// One checkpoint per snapshot (snapshot_<k>.gridnet) plus index.tsv with
/// `cycle<TAB>iteration<TAB>eta` lines.
void save_trajectory(const std::filesystem::path& dir, const Trajectory& trajectory);
Trajectory load_trajectory(const std::filesystem::path& dir);

}  // namespace atal
