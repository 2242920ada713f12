#include "atal/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>

#include "atal/adversary.hpp"
#include "atal/pnm.hpp"
#include "atal/rng.hpp"
#include "atal/sampling.hpp"
#include "atal/trajectory.hpp"
#include "atal/uncertainty.hpp"

namespace atal {
namespace {

// Stream tags for derive_seed.
const std::uint64_t kTagInit = fnv1a("init");
const std::uint64_t kTagShuffle = fnv1a("shuffle");
const std::uint64_t kTagDen = fnv1a("den");
const std::uint64_t kTagRandom = fnv1a("random");
const std::uint64_t kTagFull = fnv1a("full");

struct StrategyName {
  StrategyKind kind;
  const char* name;
};

constexpr StrategyName kStrategyNames[] = {
    {StrategyKind::atal, "atal"},
    {StrategyKind::random_points, "random_points"},
    {StrategyKind::entropy_topk, "entropy_topk"},
    {StrategyKind::den_atal, "den_atal"},
    {StrategyKind::atal_no_rds, "atal_no_rds"},
    {StrategyKind::atal_no_sp, "atal_no_sp"},
    {StrategyKind::atal_no_ccls, "atal_no_ccls"},
};

std::vector<TrainExample> make_examples(const ExperimentData& data, std::span<const SparseLabels> labels) {
  if (labels.size() != data.train.size()) throw InvalidInput("one label set per training image expected");
  std::vector<TrainExample> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out.push_back({&data.train[i].image, labels[i].targets()});
  return out;
}

TrainOptions train_options(const ExperimentConfig& cfg, std::uint64_t shuffle_seed) {
  return {cfg.momentum, cfg.batch_images, shuffle_seed, cfg.grad_clip};
}

double binary_entropy(double p) {
  const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return -(q * std::log(q) + (1.0 - q) * std::log(1.0 - q));
}

// Unlabeled pixels ordered by ascending key, ties row-major.
std::vector<std::size_t> rank_unlabeled(const SparseLabels& labels, const std::vector<char>& excluded,
                                        const std::function<double(std::size_t)>& key) {
  std::vector<std::size_t> idx;
  const int w = labels.width();
  for (std::size_t i = 0; i < excluded.size(); ++i) {
    if (!excluded[i] && !labels.contains(static_cast<int>(i / w), static_cast<int>(i % w))) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  return idx;
}

// Only the data, model and trainer settings reach the full-supervision run.
std::string full_sup_key(const ExperimentConfig& cfg, std::uint64_t seed) {
  ExperimentConfig k;
  k.train_manifest = cfg.train_manifest;
  k.test_manifest = cfg.test_manifest;
  k.generator_seed = cfg.generator_seed;
  k.image_size = cfg.image_size;
  k.train_count = cfg.train_count;
  k.test_count = cfg.test_count;
  k.generator = cfg.generator;
  k.architecture = cfg.architecture;
  k.ccls = cfg.ccls;
  k.momentum = cfg.momentum;
  k.batch_images = cfg.batch_images;
  k.grad_clip = cfg.grad_clip;
  k.full_iterations = cfg.full_iterations;
  k.eval_ensemble = cfg.eval_ensemble;
  return std::to_string(seed) + "\n" + to_text(k);
}

std::mutex& full_sup_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, double>& full_sup_cache() {
  static std::map<std::string, double> cache;
  return cache;
}

}  // namespace

std::string_view to_string(StrategyKind s) {
  for (const auto& n : kStrategyNames) {
    if (n.kind == s) return n.name;
  }
  return "atal";
}

StrategyKind parse_strategy(std::string_view text) {
  for (const auto& n : kStrategyNames) {
    if (text == n.name) return n.kind;
  }
  throw InvalidInput("unknown strategy '" + std::string(text) + "'");
}

const std::vector<StrategyKind>& all_strategies() {
  static const std::vector<StrategyKind> all = [] {
    std::vector<StrategyKind> v;
    for (const auto& n : kStrategyNames) v.push_back(n.kind);
    return v;
  }();
  return all;
}

std::size_t ExperimentData::index_of(const std::string& image_id) const {
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].id == image_id) return i;
  }
  throw InvalidInput("unknown image id '" + image_id + "'");
}

std::uint64_t split_seed(std::uint64_t generator_seed, const std::string& split) {
  return derive_seed(generator_seed, fnv1a(split));
}

ExperimentData load_data(const ExperimentConfig& config) {
  config.validate();
  ExperimentData data;
  if (config.train_manifest.empty()) {
    data.train = generate_samples(split_seed(config.generator_seed, "train"), config.train_count,
                                  config.image_size, config.generator, "train");
    data.test = generate_samples(split_seed(config.generator_seed, "test"), config.test_count,
                                 config.image_size, config.generator, "test");
  } else {
    data.train = load_samples(read_manifest(config.train_manifest));
    data.test = load_samples(read_manifest(config.test_manifest));
  }
  if (data.train.empty() || data.test.empty()) throw InvalidInput("both splits need at least one image");
  std::set<std::string> ids;
  for (const auto& s : data.train) {
    if (!ids.insert(s.id).second) throw InvalidInput("duplicate training image id '" + s.id + "'");
    data.partitions.push_back(segment(s.image, config.superpixel));
  }
  const std::size_t probes = std::min<std::size_t>(config.probe_count, data.test.size());
  for (std::size_t i = 0; i < probes; ++i) data.probes.push_back(data.test[i].image);
  return data;
}

EvalResult evaluate_trained(const Trajectory& trajectory, const ExperimentConfig& config,
                            std::span<const Sample> samples) {
  if (config.eval_ensemble) return evaluate(std::span<const GridNet>(trajectory.snapshots), samples);
  return evaluate(trajectory.final_model, samples);
}

Trajectory train_on_labels(const std::string& architecture_id, const ExperimentData& data,
                           std::span<const SparseLabels> labels, const ExperimentConfig& config,
                           std::uint64_t seed) {
  return train_on_labels(architecture_id, data, labels, config, seed, Schedule::cyclic(config.ccls));
}

Trajectory train_on_labels(const std::string& architecture_id, const ExperimentData& data,
                           std::span<const SparseLabels> labels, const ExperimentConfig& config,
                           std::uint64_t seed, const Schedule& schedule) {
  const auto examples = make_examples(data, labels);
  GridNet model =
      GridNet::create(architecture_id, data.train.front().image.channels(), derive_seed(seed, kTagInit, 0));
  return train_with_snapshots(std::move(model), examples, schedule,
                              train_options(config, derive_seed(seed, kTagShuffle, 0)));
}

FullSupervisionResult train_fully_supervised(const std::string& architecture_id, const ExperimentData& data,
                                             const ExperimentConfig& config, std::uint64_t seed) {
  std::vector<TrainExample> examples;
  for (const auto& s : data.train) examples.push_back({&s.image, dense_targets(s.mask)});
  CclsConfig ccls = config.ccls;
  ccls.iterations = config.full_iterations;
  ccls.cycles = std::min(ccls.cycles, ccls.iterations);
  GridNet model = GridNet::create(architecture_id, data.train.front().image.channels(),
                                  derive_seed(seed, kTagFull, kTagInit));
  Trajectory traj = train_with_snapshots(std::move(model), examples, Schedule::cyclic(ccls),
                                         train_options(config, derive_seed(seed, kTagFull, kTagShuffle)));
  FullSupervisionResult out{std::move(traj), {}, {}};
  out.train = evaluate_trained(out.trajectory, config, data.train);
  out.test = evaluate_trained(out.trajectory, config, data.test);
  return out;
}

double ensure_full_supervision(ExperimentState& state, const ExperimentData& data) {
  if (state.full_sup_max_f) return *state.full_sup_max_f;
  const std::string key = full_sup_key(state.config, state.seed);
  {
    std::lock_guard lock(full_sup_mutex());
    if (auto it = full_sup_cache().find(key); it != full_sup_cache().end()) {
      state.full_sup_max_f = it->second;
      return it->second;
    }
  }
  const double value =
      train_fully_supervised(state.config.architecture, data, state.config, state.seed).test.max_f;
  std::lock_guard lock(full_sup_mutex());
  full_sup_cache()[key] = value;
  state.full_sup_max_f = value;
  return value;
}

Engine::Engine(std::shared_ptr<const ExperimentData> data, std::optional<ExperimentPaths> paths, Logger log)
    : data_(std::move(data)), paths_(std::move(paths)), log_(std::move(log)) {
  if (!data_) throw InvalidInput("engine needs experiment data");
  if (paths_) std::filesystem::create_directories(paths_->root);
}

void Engine::log(const std::string& message) const {
  if (log_) log_(message);
}

ExperimentState Engine::init(const ExperimentConfig& config, StrategyKind strategy, std::uint64_t seed) const {
  config.validate();
  ExperimentState s;
  s.strategy = strategy;
  s.seed = seed;
  s.config = config;
  s.rng_state = derive_seed(seed, kTagRandom);
  for (std::size_t i = 0; i < data_->train.size(); ++i) {
    const Sample& sample = data_->train[i];
    s.labels.emplace_back(sample.id, sample.image.height(), sample.image.width());
    for (auto& q : initial_points(sample.id, seed, config.initial_points, sample.image.height(),
                                  sample.image.width())) {
      q.superpixel_id = data_->partitions[i].at(q.row, q.col);
      s.pending.push_back(std::move(q));
    }
  }
  if (paths_) {
    write_config(paths_->config(), config);
    for (const auto& q : s.pending) append_jsonl(paths_->queries(), q);
  }
  persist(s);
  return s;
}

std::size_t Engine::submit(ExperimentState& state, const LabelAnswer& answer) const {
  const auto q = std::find_if(state.pending.begin(), state.pending.end(),
                              [&](const LabelQuery& p) { return p.query_id == answer.query_id; });
  if (q == state.pending.end()) throw UnknownQuery("no pending query '" + answer.query_id + "'");
  const bool seen = std::any_of(state.received.begin(), state.received.end(),
                                [&](const LabelAnswer& a) { return a.query_id == answer.query_id; });
  if (seen) throw AlreadyAnswered("query '" + answer.query_id + "' is already answered");
  if (paths_) {
    append_jsonl(paths_->answers(), answer);
    if (answer.source == AnswerSource::human) {
      const LabelAnswer truth = gt_answer(data_->train[data_->index_of(q->image_id)].mask, *q);
      if (truth.cls != answer.cls) {
        std::ofstream div(paths_->divergence(), std::ios::app);
        div << q->round << '\t' << q->query_id << '\t' << q->image_id << '\t' << q->row << '\t' << q->col << '\t'
            << to_string(answer.cls) << '\t' << to_string(truth.cls) << '\n';
      }
    }
  }
  state.received.push_back(answer);
  if (state.remaining() == 0) apply_answers(state);
  return state.remaining();
}

void Engine::recover(ExperimentState& state) const {
  if (!paths_ || state.pending.empty()) return;
  for (const auto& record : read_jsonl(paths_->answers())) {
    const LabelAnswer a = record.get<LabelAnswer>();
    const bool pending = std::any_of(state.pending.begin(), state.pending.end(),
                                     [&](const LabelQuery& q) { return q.query_id == a.query_id; });
    const bool seen = std::any_of(state.received.begin(), state.received.end(),
                                  [&](const LabelAnswer& r) { return r.query_id == a.query_id; });
    if (!pending || seen) continue;
    state.received.push_back(a);
    if (state.remaining() == 0) {
      apply_answers(state);
      return;
    }
  }
}

void Engine::answer_from_ground_truth(ExperimentState& state) const {
  const std::vector<LabelQuery> batch = state.pending;
  for (const auto& q : batch) {
    const bool seen = std::any_of(state.received.begin(), state.received.end(),
                                  [&](const LabelAnswer& a) { return a.query_id == q.query_id; });
    if (seen) continue;
    submit(state, gt_answer(data_->train[data_->index_of(q.image_id)].mask, q));
  }
}

void Engine::apply_answers(ExperimentState& state) const {
  std::map<std::string, const LabelAnswer*> by_id;
  for (const auto& a : state.received) by_id[a.query_id] = &a;
  std::vector<int> per_image(data_->train.size(), 0);
  for (const auto& q : state.pending) {
    const std::size_t i = data_->index_of(q.image_id);
    const PixelClass cls = by_id.at(q.query_id)->cls;
    SparseLabels& labels = state.labels[i];
    labels.add_point(q.row, q.col, cls, q.round == 0 ? LabelSource::seed : LabelSource::queried, q.round);
    if (state.strategy != StrategyKind::atal_no_sp) {
      apply_propagation(labels, propagate(q.row, q.col, cls, data_->partitions[i]), q.round);
    }
    ++per_image[i];
  }
  const auto [lo, hi] = std::minmax_element(per_image.begin(), per_image.end());
  if (*lo != *hi) throw InvalidInput("query batch is uneven across images");
  state.budget_spent += *lo;
  state.pending.clear();
  state.received.clear();
  persist(state);
}

void Engine::run_round(ExperimentState& state) const {
  if (state.finished) throw BudgetExhausted("target budget reached; the experiment is finished");
  if (!state.pending.empty()) {
    throw AnswersPending(std::to_string(state.remaining()) + " queries are still unanswered");
  }
  const ExperimentConfig& cfg = state.config;
  const int r = state.round;
  const int channels = data_->train.front().image.channels();
  const auto examples = make_examples(*data_, state.labels);
  const TrainOptions options = train_options(cfg, derive_seed(state.seed, kTagShuffle, r));

  GridNet init = cfg.fine_tune && state.warm_start
                     ? *state.warm_start
                     : GridNet::create(cfg.architecture, channels, derive_seed(state.seed, kTagInit, r));
  Trajectory traj = train_with_snapshots(init, examples, Schedule::cyclic(cfg.ccls), options);

  std::vector<GridNet> ensemble;
  std::uint64_t selection_updates = traj.update_count;
  switch (state.strategy) {
    case StrategyKind::atal:
    case StrategyKind::atal_no_rds:
    case StrategyKind::atal_no_sp:
      ensemble = traj.snapshots;
      break;
    case StrategyKind::atal_no_ccls: {
      Trajectory flat = train_with_snapshots(init, examples, Schedule::constant(cfg.ccls, cfg.constant_lr), options);
      ensemble = std::move(flat.snapshots);
      selection_updates = flat.update_count;
      break;
    }
    case StrategyKind::den_atal: {
      std::vector<std::uint64_t> seeds;
      for (int m = 0; m < cfg.den_members; ++m) seeds.push_back(derive_seed(state.seed, kTagDen, r * 1000 + m));
      EnsembleBaseline den = train_den(seeds, cfg.architecture, channels, examples, cfg.ccls.iterations,
                                       cfg.den_lr, options);
      ensemble = std::move(den.members);
      selection_updates = den.update_count;
      break;
    }
    case StrategyKind::random_points:
    case StrategyKind::entropy_topk:
      break;
  }

  const EvalResult eval = evaluate_trained(traj, cfg, data_->test);
  const double reference = ensure_full_supervision(state, *data_);
  RoundMetrics m{r, state.budget_spent, eval.max_f, eval.avg_f, eval.mae,
                 reference > 0.0 ? eval.max_f / reference : 0.0, selection_updates};
  state.metric_history.push_back(m);
  state.round = r + 1;
  std::ostringstream msg;
  msg.precision(4);
  msg << to_string(state.strategy) << " seed " << state.seed << " round " << r << " budget "
      << state.budget_spent << ": maxF " << m.max_f << " avgF " << m.avg_f << " MAE " << m.mae;
  log(msg.str());

  if (paths_ && cfg.save_trajectories) {
    const auto dir = paths_->trajectories() / ("round_" + std::to_string(r));
    save_trajectory(dir, traj);
    state.trajectory_refs.push_back(std::filesystem::relative(dir, paths_->root).string());
  }
  if (cfg.fine_tune) state.warm_start = traj.final_model;

  if (state.budget_spent >= cfg.target_budget || state.budget_spent >= cfg.max_budget) {
    state.finished = true;
    persist(state);
    return;
  }
  state.pending = select(state, traj.final_model, ensemble);
  if (paths_) {
    std::ofstream sel(paths_->selections(), std::ios::app);
    sel.precision(17);
    for (const auto& q : state.pending) {
      append_jsonl(paths_->queries(), q);
      sel << q.round << '\t' << q.image_id << '\t' << q.row << '\t' << q.col << '\t' << q.score << '\t'
          << q.phi << '\n';
    }
  }
  persist(state);
}

std::vector<LabelQuery> Engine::select(ExperimentState& state, const GridNet& eval_model,
                                       std::span<const GridNet> ensemble) const {
  const ExperimentConfig& cfg = state.config;
  const int k = std::min({cfg.points_per_round, cfg.target_budget - state.budget_spent,
                          cfg.max_budget - state.budget_spent});
  const int round = state.round;
  std::vector<LabelQuery> out;
  SplitMix64 rng(state.rng_state);

  for (std::size_t i = 0; i < data_->train.size(); ++i) {
    const Sample& sample = data_->train[i];
    const SparseLabels& labels = state.labels[i];
    const int h = sample.image.height(), w = sample.image.width();
    const std::size_t n = static_cast<std::size_t>(h) * w;
    std::vector<char> chosen(n, 0);
    std::vector<LabelQuery> picks;
    auto take = [&](std::size_t idx, double score, double phi) {
      LabelQuery q;
      q.image_id = sample.id;
      q.row = static_cast<int>(idx / w);
      q.col = static_cast<int>(idx % w);
      q.round = round;
      q.superpixel_id = data_->partitions[i].at(q.row, q.col);
      q.score = score;
      q.phi = phi;
      q.query_id = "r" + std::to_string(round) + "_" + sample.id + "_" + std::to_string(picks.size());
      chosen[idx] = 1;
      picks.push_back(std::move(q));
    };
    auto labeled = [&](std::size_t idx) { return labels.contains(static_cast<int>(idx / w), static_cast<int>(idx % w)); };

    if (state.strategy == StrategyKind::random_points) {
      std::size_t free = 0;
      for (std::size_t idx = 0; idx < n; ++idx) free += !labeled(idx);
      while (static_cast<int>(picks.size()) < k && picks.size() < free) {
        const std::size_t idx = static_cast<std::size_t>(rng.below(n));
        if (!labeled(idx) && !chosen[idx]) take(idx, 0.0, 0.0);
      }
    } else if (state.strategy == StrategyKind::entropy_topk) {
      const ProbMap p = forward(eval_model, sample.image);
      for (std::size_t idx : rank_unlabeled(labels, chosen, [&](std::size_t a) { return -binary_entropy(p[a]); })) {
        if (static_cast<int>(picks.size()) >= k) break;
        take(idx, binary_entropy(p[idx]), 0.0);
      }
    } else {
      const ProbMap clean = ensemble_predict(ensemble, sample.image);
      const Image adv = pgd_attack(ensemble, sample.image, make_pseudo_labels(clean), cfg.attack);
      UncertaintyMap umap = uncertainty_map(clean, ensemble_predict(ensemble, adv), cfg.margin_threshold, round);
      for (std::size_t idx = 0; idx < n; ++idx) {
        if (labeled(idx)) umap.scores[idx] = 0.0;
      }
      if (paths_ && cfg.dump_maps) {
        std::filesystem::create_directories(paths_->maps());
        const std::string stem = "r" + std::to_string(round) + "_" + sample.id;
        write_uncertainty(paths_->maps() / (stem + "_scores.pgm"), paths_->maps() / (stem + "_regions.pgm"), umap);
      }
      std::vector<CandidatePoint> cands = candidate_set(umap, cfg.k_percent, cfg.candidate_cap);
      attach_descriptors(cands, sample.image, clean);
      std::vector<std::vector<double>> labeled_desc;
      for (const auto& e : labels.entries()) {
        if (e.source != LabelSource::propagated) labeled_desc.push_back(pixel_descriptor(sample.image, clean, e.row, e.col));
      }
      if (!cands.empty()) {
        if (state.strategy == StrategyKind::atal_no_rds) {
          for (std::size_t j = 0; j < cands.size() && static_cast<int>(picks.size()) < k; ++j) {
            take(static_cast<std::size_t>(cands[j].row) * w + cands[j].col, cands[j].score,
                 similarity_phi(cands[j].descriptor, labeled_desc));
          }
        } else {
          const CoverSet cover = greedy_cover(cands, cfg.cover_ratio * k, highest_score_index(cands), w);
          if (static_cast<int>(cover.points.size()) < k) {
            log("image " + sample.id + ": cover holds " + std::to_string(cover.points.size()) +
                " points for a batch of " + std::to_string(k));
          }
          for (const auto& s : select_batch(cover, labeled_desc, k)) {
            take(static_cast<std::size_t>(s.point.row) * w + s.point.col, s.point.score, s.phi);
          }
        }
      }
      if (static_cast<int>(picks.size()) < k) {
        log("image " + sample.id + ": " + std::to_string(cands.size()) +
            " adversarial candidates; filling with lowest-margin pixels");
        for (std::size_t idx : rank_unlabeled(labels, chosen, [&](std::size_t a) { return bvsb(clean[a]); })) {
          if (static_cast<int>(picks.size()) >= k) break;
          take(idx, 0.0, similarity_phi(pixel_descriptor(sample.image, clean, static_cast<int>(idx / w),
                                                         static_cast<int>(idx % w)),
                                        labeled_desc));
        }
      }
    }
    if (static_cast<int>(picks.size()) < k) {
      // Every unknown pixel is taken; re-ask propagated ones in row-major order.
      for (const auto& e : labels.entries()) {
        if (static_cast<int>(picks.size()) >= k) break;
        const std::size_t idx = static_cast<std::size_t>(e.row) * w + e.col;
        if (e.source == LabelSource::propagated && !chosen[idx]) take(idx, 0.0, 0.0);
      }
      if (static_cast<int>(picks.size()) < k) {
        throw InvalidInput("image " + sample.id + " has no pixel left to query");
      }
      log("image " + sample.id + ": no unlabeled pixel left; re-querying propagated labels");
    }
    for (auto& q : picks) out.push_back(std::move(q));
  }
  state.rng_state = rng.state();
  return out;
}

void Engine::persist(const ExperimentState& state) const {
  if (!paths_) return;
  save_state(paths_->state(), state);
  std::ofstream out(paths_->metrics(), std::ios::trunc);
  out << metrics_table(state.metric_history);
}

ExperimentState Engine::run(const ExperimentConfig& config, StrategyKind strategy, std::uint64_t seed) const {
  ExperimentState state = init(config, strategy, seed);
  run_to_completion(state);
  return state;
}

void Engine::run_to_completion(ExperimentState& state) const {
  while (!state.finished) {
    if (!state.pending.empty()) answer_from_ground_truth(state);
    run_round(state);
  }
}

std::string metrics_table(std::span<const RoundMetrics> history) {
  std::ostringstream out;
  out.precision(17);
  out << "round\tbudget\tmax_f\tavg_f\tmae\tfull_sup_ratio\tupdate_count\n";
  for (const auto& m : history) {
    out << m.round << '\t' << m.budget << '\t' << m.max_f << '\t' << m.avg_f << '\t' << m.mae << '\t'
        << m.full_sup_ratio << '\t' << m.update_count << '\n';
  }
  return out.str();
}

std::optional<RoundMetrics> metrics_at_budget(std::span<const RoundMetrics> history, int budget) {
  for (const auto& m : history) {
    if (m.budget == budget) return m;
  }
  return std::nullopt;
}

namespace {

void mean_and_spread(std::span<const double> v, double& mean, double& sd) {
  mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
}

}  // namespace

std::vector<RunSummary> ablate(const Engine& engine, const ExperimentConfig& config,
                               std::span<const StrategyKind> strategies, std::span<const std::uint64_t> seeds,
                               const std::filesystem::path& out_dir) {
  std::vector<RunSummary> rows;
  for (StrategyKind s : strategies) {
    for (std::uint64_t seed : seeds) {
      ExperimentState st = engine.run(config, s, seed);
      rows.push_back({s, seed, st.metric_history.back(), st.metric_history});
    }
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir / "ablation.tsv", std::ios::trunc);
    out.precision(6);
    out << "strategy\tseed\tbudget\tmax_f\tavg_f\tmae\tfull_sup_ratio\tupdate_count\n";
    for (const auto& r : rows) {
      out << to_string(r.strategy) << '\t' << r.seed << '\t' << r.final.budget << '\t' << r.final.max_f << '\t'
          << r.final.avg_f << '\t' << r.final.mae << '\t' << r.final.full_sup_ratio << '\t'
          << r.final.update_count << '\n';
    }
    std::ofstream summary(out_dir / "ablation_summary.tsv", std::ios::trunc);
    summary.precision(6);
    summary << "strategy\truns\tmean_max_f\tsd_max_f\tmean_mae\tsd_mae\n";
    for (StrategyKind s : strategies) {
      std::vector<double> f, mae;
      for (const auto& r : rows) {
        if (r.strategy == s) f.push_back(r.final.max_f), mae.push_back(r.final.mae);
      }
      double fm, fs, mm, ms;
      mean_and_spread(f, fm, fs);
      mean_and_spread(mae, mm, ms);
      summary << to_string(s) << '\t' << f.size() << '\t' << fm << '\t' << fs << '\t' << mm << '\t' << ms << '\n';
    }
  }
  return rows;
}

std::vector<BudgetPoint> budget_sweep(const Engine& engine, const ExperimentConfig& config,
                                      std::span<const int> budgets, std::span<const std::uint64_t> seeds,
                                      const std::filesystem::path& out_dir) {
  if (budgets.empty()) throw InvalidInput("budget sweep needs at least one budget");
  ExperimentConfig cfg = config;
  cfg.target_budget = *std::max_element(budgets.begin(), budgets.end());
  cfg.validate();
  std::vector<BudgetPoint> points;
  for (int b : budgets) points.push_back({b, 0.0, {}});
  for (std::uint64_t seed : seeds) {
    const ExperimentState st = engine.run(cfg, StrategyKind::atal, seed);
    for (auto& p : points) {
      const auto m = metrics_at_budget(st.metric_history, p.budget);
      if (!m) throw InvalidInput("budget " + std::to_string(p.budget) + " is not reachable with this schedule");
      p.per_seed_max_f.push_back(m->max_f);
    }
  }
  for (auto& p : points) {
    p.mean_max_f = std::accumulate(p.per_seed_max_f.begin(), p.per_seed_max_f.end(), 0.0) /
                   static_cast<double>(p.per_seed_max_f.size());
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir / "budget_sweep.tsv", std::ios::trunc);
    out.precision(6);
    out << "budget\tmean_max_f";
    for (std::uint64_t s : seeds) out << "\tseed_" << s;
    out << '\n';
    for (const auto& p : points) {
      out << p.budget << '\t' << p.mean_max_f;
      for (double f : p.per_seed_max_f) out << '\t' << f;
      out << '\n';
    }
  }
  return points;
}

}  // namespace atal
