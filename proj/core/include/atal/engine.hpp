#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "atal/config.hpp"
#include "atal/dataset.hpp"
#include "atal/metrics.hpp"
#include "atal/oracle.hpp"
#include "atal/superpixel.hpp"

namespace atal {

enum class StrategyKind { atal, random_points, entropy_topk, den_atal, atal_no_rds, atal_no_sp, atal_no_ccls };

std::string_view to_string(StrategyKind s);
StrategyKind parse_strategy(std::string_view text);
const std::vector<StrategyKind>& all_strategies();

/// Raised when a round is requested after the target budget was reached.
class BudgetExhausted : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when the engine is asked to train while queries are unanswered.
class AnswersPending : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class UnknownQuery : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class AlreadyAnswered : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RoundMetrics {
  int round = 0;
  int budget = 0;
  double max_f = 0.0;
  double avg_f = 0.0;
  double mae = 0.0;
  double full_sup_ratio = 0.0;
  /// Weight updates spent by the selection ensemble this round.
  std::uint64_t update_count = 0;
  friend bool operator==(const RoundMetrics&, const RoundMetrics&) = default;
};

/// The resumable unit of an AL run.
struct ExperimentState {
  StrategyKind strategy = StrategyKind::atal;
  std::uint64_t seed = 0;
  /// Completed train/evaluate rounds; equals metric_history.size().
  int round = 0;
  /// Annotated points per image.
  int budget_spent = 0;
  bool finished = false;
  ExperimentConfig config;
  std::vector<SparseLabels> labels;
  std::vector<RoundMetrics> metric_history;
  std::uint64_t rng_state = 0;
  std::optional<double> full_sup_max_f;
  /// Outstanding batch, in issue order, and the answers received for it.
  std::vector<LabelQuery> pending;
  std::vector<LabelAnswer> received;
  std::vector<std::string> trajectory_refs;
  /// Previous round's model, kept only in fine-tune mode.
  std::optional<GridNet> warm_start;

  std::size_t remaining() const { return pending.size() - received.size(); }
  friend bool operator==(const ExperimentState&, const ExperimentState&) = default;
};

/// Training and test images plus their superpixel partitions, computed once
/// per experiment.
struct ExperimentData {
  std::vector<Sample> train;
  std::vector<Sample> test;
  std::vector<SuperpixelPartition> partitions;
  /// Held-out images used for homogenization measurements.
  std::vector<Image> probes;

  std::size_t index_of(const std::string& image_id) const;
};

/// Generator seed of a synthetic split ("train" or "test").
std::uint64_t split_seed(std::uint64_t generator_seed, const std::string& split);

ExperimentData load_data(const ExperimentConfig& config);

/// Files kept in an experiment directory.
struct ExperimentPaths {
  std::filesystem::path root;
  std::filesystem::path config() const { return root / "config.txt"; }
  std::filesystem::path state() const { return root / "state.json"; }
  std::filesystem::path queries() const { return root / "queries.jsonl"; }
  std::filesystem::path answers() const { return root / "answers.jsonl"; }
  std::filesystem::path metrics() const { return root / "metrics.tsv"; }
  std::filesystem::path selections() const { return root / "selected_points.tsv"; }
  /// Human answers that disagree with the ground-truth mask.
  std::filesystem::path divergence() const { return root / "divergence.tsv"; }
  std::filesystem::path lock() const { return root / "experiment.lock"; }
  std::filesystem::path trajectories() const { return root / "trajectories"; }
  std::filesystem::path maps() const { return root / "maps"; }
};

/// Exclusive ownership of an experiment directory, released on destruction.
class ExperimentLock {
 public:
  /// Throws LockConflict when another holder exists.
  explicit ExperimentLock(const std::filesystem::path& dir);
  ~ExperimentLock();
  ExperimentLock(const ExperimentLock&) = delete;
  ExperimentLock& operator=(const ExperimentLock&) = delete;

 private:
  std::filesystem::path path_;
};

class LockConflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checksummed state file: a header line `ATALSTATE 1 <fnv1a-hex> <bytes>`
/// followed by a JSON document. Doubles round-trip exactly.
void save_state(const std::filesystem::path& path, const ExperimentState& state);
/// Throws CorruptState when the checksum or structure does not match.
ExperimentState load_state(const std::filesystem::path& path);

class CorruptState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string state_to_json(const ExperimentState& state);
ExperimentState state_from_json(const std::string& text);

struct FullSupervisionResult {
  Trajectory trajectory;
  EvalResult train;
  EvalResult test;
};

/// Same trainer as the AL loop with every pixel supervised.
FullSupervisionResult train_fully_supervised(const std::string& architecture_id, const ExperimentData& data,
                                             const ExperimentConfig& config, std::uint64_t seed);

/// Scores a trained trajectory the way the AL loop does: the snapshot
/// ensemble when config.eval_ensemble is set, else the final model.
EvalResult evaluate_trained(const Trajectory& trajectory, const ExperimentConfig& config,
                            std::span<const Sample> samples);

/// Trains `architecture_id` from scratch on a labeled set with the AL
/// trainer (the round-0 seeds of `seed`).
Trajectory train_on_labels(const std::string& architecture_id, const ExperimentData& data,
                           std::span<const SparseLabels> labels, const ExperimentConfig& config,
                           std::uint64_t seed);
/// Same, with an explicit learning-rate schedule.
Trajectory train_on_labels(const std::string& architecture_id, const ExperimentData& data,
                           std::span<const SparseLabels> labels, const ExperimentConfig& config,
                           std::uint64_t seed, const Schedule& schedule);

/// Drives one AL run. With a directory attached, every transition is
/// persisted (state, query/answer logs, metric and selection tables).
class Engine {
 public:
  using Logger = std::function<void(const std::string&)>;

  Engine(std::shared_ptr<const ExperimentData> data, std::optional<ExperimentPaths> paths = {},
         Logger log = {});

  /// Fresh state whose pending batch holds the initial random points.
  ExperimentState init(const ExperimentConfig& config, StrategyKind strategy, std::uint64_t seed) const;

  /// Records one answer; applies the whole batch once the last one arrives.
  /// Human answers are kept verbatim; with a directory attached, those that
  /// contradict the mask are also listed in divergence.tsv. Returns the
  /// number of still-unanswered queries.
  std::size_t submit(ExperimentState& state, const LabelAnswer& answer) const;
  /// Re-applies answers found in the directory's answer log that the saved
  /// state has not seen yet (a crash between logging and saving).
  void recover(ExperimentState& state) const;
  /// Answers every outstanding query from the ground-truth masks.
  void answer_from_ground_truth(ExperimentState& state) const;

  /// Trains on the current labels, evaluates, then either finishes (target
  /// budget reached) or issues the next batch of queries.
  void run_round(ExperimentState& state) const;

  /// init + ground-truth answers + rounds until finished.
  ExperimentState run(const ExperimentConfig& config, StrategyKind strategy, std::uint64_t seed) const;
  /// Continues a state with ground-truth answers until finished.
  void run_to_completion(ExperimentState& state) const;

  void persist(const ExperimentState& state) const;
  const ExperimentData& data() const { return *data_; }

 private:
  void apply_answers(ExperimentState& state) const;
  std::vector<LabelQuery> select(ExperimentState& state, const GridNet& eval_model,
                                 std::span<const GridNet> ensemble) const;
  void log(const std::string& message) const;

  std::shared_ptr<const ExperimentData> data_;
  std::optional<ExperimentPaths> paths_;
  Logger log_;
};

/// Full-supervision maxF on the test split for the state's seed, computed
/// once and cached in the state.
double ensure_full_supervision(ExperimentState& state, const ExperimentData& data);

struct RunSummary {
  StrategyKind strategy = StrategyKind::atal;
  std::uint64_t seed = 0;
  RoundMetrics final;
  std::vector<RoundMetrics> history;
};

/// Metric row at the given budget, or nullopt if the run never evaluated it.
std::optional<RoundMetrics> metrics_at_budget(std::span<const RoundMetrics> history, int budget);

/// One run per (strategy, seed); writes ablation.tsv into `out_dir` when
/// non-empty.
std::vector<RunSummary> ablate(const Engine& engine, const ExperimentConfig& config,
                               std::span<const StrategyKind> strategies, std::span<const std::uint64_t> seeds,
                               const std::filesystem::path& out_dir = {});

struct BudgetPoint {
  int budget = 0;
  double mean_max_f = 0.0;
  std::vector<double> per_seed_max_f;
};

/// ATAL runs to the largest budget; a run's history at budget b is the run
/// that stops at b, so one run per seed covers every budget.
std::vector<BudgetPoint> budget_sweep(const Engine& engine, const ExperimentConfig& config,
                                      std::span<const int> budgets, std::span<const std::uint64_t> seeds,
                                      const std::filesystem::path& out_dir = {});

std::string metrics_table(std::span<const RoundMetrics> history);

}  // namespace atal
