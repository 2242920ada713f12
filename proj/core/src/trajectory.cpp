#include "atal/trajectory.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "atal/rng.hpp"

namespace atal {

void CclsConfig::validate() const {
  if (!(eta_min >= 0.0) || !(eta_max >= eta_min)) {
    throw InvalidInput("CCLS needs eta_max >= eta_min >= 0");
  }
  if (cycles < 1) throw InvalidInput("CCLS needs at least one cycle");
  if (iterations < cycles) throw InvalidInput("CCLS needs iterations >= cycles");
}

double ccls_lr(int iteration, const CclsConfig& cfg) {
  cfg.validate();
  if (iteration < 1 || iteration > cfg.iterations) {
    throw InvalidInput("iteration " + std::to_string(iteration) + " outside [1, " +
                       std::to_string(cfg.iterations) + "]");
  }
  const int c = cfg.cycle_length();
  const double phase = static_cast<double>((iteration - 1) % c) / c;
  return cfg.eta_min + 0.5 * (cfg.eta_max - cfg.eta_min) * (1.0 + std::cos(std::numbers::pi * phase));
}

double Schedule::lr(int iteration) const {
  if (kind == Kind::cyclic_cosine) return ccls_lr(iteration, ccls);
  if (iteration < 1 || iteration > ccls.iterations) throw InvalidInput("iteration out of range");
  return constant_lr;
}

Trajectory train_with_snapshots(GridNet model, std::span<const TrainExample> examples,
                                const Schedule& schedule, const TrainOptions& options) {
  schedule.ccls.validate();
  if (options.batch_images < 1) throw InvalidInput("batch must hold at least one image");
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].image == nullptr) throw InvalidInput("training example without image");
    if (!examples[i].targets.empty()) active.push_back(i);
  }
  if (active.empty()) throw InvalidInput("training needs at least one labeled pixel");

  const int iterations = schedule.ccls.iterations;
  const int cycle = schedule.ccls.cycle_length();
  const int batch = std::min<int>(options.batch_images, static_cast<int>(active.size()));
  SplitMix64 rng(options.shuffle_seed);
  std::vector<std::size_t> order = active;
  std::size_t cursor = order.size();

  Trajectory traj;
  traj.schedule_trace.reserve(iterations);
  traj.loss_trace.reserve(iterations);
  SgdMomentum sgd(model.param_count());
  const std::uint64_t start_updates = model.update_count();
  std::vector<double> grads(model.param_count());

  for (int it = 1; it <= iterations; ++it) {
    const double lr = schedule.lr(it);
    std::fill(grads.begin(), grads.end(), 0.0);
    double loss = 0.0;
    for (int b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        shuffle(std::span<std::size_t>(order), rng);
        cursor = 0;
      }
      const TrainExample& ex = examples[order[cursor++]];
      const Gradients g = backward(model, *ex.image, ex.targets, GradientParts::weights);
      for (std::size_t k = 0; k < grads.size(); ++k) grads[k] += g.weights[k];
      loss += g.loss;
    }
    const double inv = 1.0 / batch;
    for (double& g : grads) g *= inv;
    if (options.grad_clip > 0.0) {
      double norm2 = 0.0;
      for (double g : grads) norm2 += g * g;
      const double norm = std::sqrt(norm2);
      if (norm > options.grad_clip) {
        for (double& g : grads) g *= options.grad_clip / norm;
      }
    }
    sgd.step(model, grads, lr, options.momentum, static_cast<std::uint64_t>(batch));
    traj.schedule_trace.push_back(lr);
    traj.loss_trace.push_back(loss * inv);
    if (it % cycle == 0 && it / cycle <= schedule.ccls.cycles) {
      traj.snapshots.push_back(model);
      traj.snapshot_iterations.push_back(it);
    }
  }
  traj.update_count = model.update_count() - start_updates;
  traj.final_model = std::move(model);
  return traj;
}

ProbMap ensemble_predict(std::span<const GridNet> members, const Image& image) {
  if (members.empty()) throw InvalidInput("ensemble_predict needs at least one model");
  ProbMap mean = forward(members.front(), image);
  for (std::size_t m = 1; m < members.size(); ++m) {
    const ProbMap p = forward(members[m], image);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += p[i];
  }
  if (members.size() > 1) {
    const double inv = 1.0 / static_cast<double>(members.size());
    for (double& v : mean.values()) v *= inv;
  }
  return mean;
}

double homogenization(std::span<const GridNet> window, std::span<const Image> probes) {
  if (window.size() < 2) throw InvalidInput("homogenization needs at least two snapshots");
  if (probes.empty()) throw InvalidInput("homogenization needs at least one probe image");
  const std::size_t tau = window.size() - 1;
  double total = 0.0;
  for (const Image& x : probes) {
    ProbMap prev = forward(window[0], x);
    double per_probe = 0.0;
    for (std::size_t t = 1; t < window.size(); ++t) {
      ProbMap next = forward(window[t], x);
      double diff = 0.0;
      for (std::size_t i = 0; i < next.size(); ++i) diff += std::abs(next[i] - prev[i]);
      per_probe += diff / static_cast<double>(next.size());
      prev = std::move(next);
    }
    total += per_probe / static_cast<double>(tau);
  }
  return total / static_cast<double>(probes.size());
}

double homogenization(const Trajectory& trajectory, int tau, std::span<const Image> probes) {
  if (tau < 1 || static_cast<std::size_t>(tau) + 1 > trajectory.snapshots.size()) {
    throw InvalidInput("homogenization window larger than the trajectory");
  }
  std::span<const GridNet> all(trajectory.snapshots);
  return homogenization(all.last(static_cast<std::size_t>(tau) + 1), probes);
}

EnsembleBaseline train_den(std::span<const std::uint64_t> seeds, const std::string& architecture_id,
                           int in_channels, std::span<const TrainExample> examples, int iterations,
                           double lr, const TrainOptions& options) {
  if (seeds.size() < 2) throw InvalidInput("a deep ensemble needs at least two members");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw InvalidInput("deep ensemble seeds must be distinct");
  }
  EnsembleBaseline den;
  for (std::uint64_t seed : seeds) {
    GridNet member = GridNet::create(architecture_id, in_channels, seed);
    if (iterations > 0) {
      CclsConfig cfg;
      cfg.iterations = iterations;
      cfg.cycles = 1;
      cfg.eta_max = cfg.eta_min = lr;
      TrainOptions opts = options;
      opts.shuffle_seed = derive_seed(options.shuffle_seed, seed);
      Trajectory t = train_with_snapshots(std::move(member), examples, Schedule::constant(cfg, lr), opts);
      den.update_count += t.update_count;
      member = std::move(t.final_model);
    }
    den.members.push_back(std::move(member));
  }
  return den;
}

void save_trajectory(const std::filesystem::path& dir, const Trajectory& trajectory) {
  std::filesystem::create_directories(dir);
  std::ofstream index(dir / "index.tsv", std::ios::trunc);
  if (!index) throw std::runtime_error("cannot write trajectory index in " + dir.string());
  index.precision(17);
  for (std::size_t k = 0; k < trajectory.snapshots.size(); ++k) {
    const int it = trajectory.snapshot_iterations[k];
    const double eta = it >= 1 && static_cast<std::size_t>(it) <= trajectory.schedule_trace.size()
                           ? trajectory.schedule_trace[it - 1]
                           : 0.0;
    index << k + 1 << '\t' << it << '\t' << eta << '\n';
    save_checkpoint(trajectory.snapshots[k], dir / ("snapshot_" + std::to_string(k + 1) + ".gridnet"));
  }
}

Trajectory load_trajectory(const std::filesystem::path& dir) {
  std::ifstream index(dir / "index.tsv");
  if (!index) throw std::runtime_error("missing trajectory index in " + dir.string());
  Trajectory t;
  std::string line;
  while (std::getline(index, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    int cycle = 0, it = 0;
    double eta = 0.0;
    if (!(ss >> cycle >> it >> eta)) throw InvalidInput("malformed trajectory index line: " + line);
    t.snapshots.push_back(load_checkpoint(dir / ("snapshot_" + std::to_string(cycle) + ".gridnet")));
    t.snapshot_iterations.push_back(it);
  }
  if (!t.snapshots.empty()) t.final_model = t.snapshots.back();
  return t;
}

}  // namespace atal
