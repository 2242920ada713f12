#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "atal/trajectory.hpp"
#include "test_support.hpp"

namespace atal {
namespace {

// Zero weights and bias logit(p): the model outputs p everywhere.
GridNet constant_model(double p) {
  GridNet m("const", {{1, 1, false}}, 1);
  for (double& w : m.params()) w = 0.0;
  m.params()[m.bias_offset(0)] = std::log(p / (1.0 - p));
  return m;
}

struct ToyTask {
  std::vector<Image> images;
  std::vector<TrainExample> examples;

  ToyTask(int n, int points, std::uint64_t seed) {
    for (int i = 0; i < n; ++i) images.push_back(test::random_image(8, 8, 1, seed + static_cast<std::uint64_t>(i)));
    // Target: is the pixel brighter than 0.5. A single linear layer can learn it.
    for (int i = 0; i < n; ++i) {
      auto targets = test::random_targets(8, 8, points, seed * 7 + static_cast<std::uint64_t>(i));
      for (auto& t : targets) t.target = images[static_cast<std::size_t>(i)][t.index] > 0.5 ? 1.0 : 0.0;
      examples.push_back({&images[static_cast<std::size_t>(i)], std::move(targets)});
    }
  }
};

TEST(Ccls, ReferenceValues) {
  CclsConfig cfg{0.1, 0.001, 100, 10};
  EXPECT_DOUBLE_EQ(ccls_lr(1, cfg), 0.1);
  EXPECT_NEAR(ccls_lr(6, cfg), (0.1 + 0.001) / 2, 1e-15);
  EXPECT_NEAR(ccls_lr(10, cfg), 0.001 + 0.0495 * (1 + std::cos(0.9 * std::numbers::pi)), 1e-15);
  EXPECT_NEAR(ccls_lr(10, cfg), 0.003424, 1.5e-6);  // published to four figures
  EXPECT_DOUBLE_EQ(ccls_lr(11, cfg), 0.1);
}

TEST(Ccls, RangeAndValidation) {
  const CclsConfig cfg{0.05, 0.002, 97, 4};
  for (int i = 1; i <= cfg.iterations; ++i) {
    const double lr = ccls_lr(i, cfg);
    EXPECT_GE(lr, cfg.eta_min);
    EXPECT_LE(lr, cfg.eta_max);
  }
  EXPECT_THROW(ccls_lr(0, cfg), InvalidInput);
  EXPECT_THROW(ccls_lr(98, cfg), InvalidInput);
  EXPECT_THROW(ccls_lr(1, CclsConfig{0.001, 0.01, 10, 2}), InvalidInput);
  EXPECT_THROW(ccls_lr(1, CclsConfig{0.1, 0.01, 3, 4}), InvalidInput);
  EXPECT_THROW(ccls_lr(1, CclsConfig{0.1, 0.01, 3, 0}), InvalidInput);
}

TEST(Training, SnapshotsAtCycleEnds) {
  ToyTask task(3, 5, 1);
  const CclsConfig cfg{0.1, 0.001, 500, 5};
  const Trajectory t = train_with_snapshots(GridNet("s", {{1, 2, true}, {2, 1, false}}, 3), task.examples,
                                            Schedule::cyclic(cfg), TrainOptions{});
  EXPECT_EQ(t.snapshot_iterations, (std::vector<int>{100, 200, 300, 400, 500}));
  ASSERT_EQ(t.schedule_trace.size(), 500u);
  EXPECT_EQ(t.schedule_trace[0], cfg.eta_max);
  for (int it : t.snapshot_iterations) EXPECT_NEAR(t.schedule_trace[it - 1], cfg.eta_min, 3e-5);
  EXPECT_EQ(t.update_count, 500u);
  EXPECT_EQ(t.snapshots.back(), t.final_model);
  EXPECT_NE(t.snapshots[0], t.snapshots[1]);
}

TEST(Training, SingleCycleAndUnitCycles) {
  ToyTask task(2, 4, 2);
  TrainOptions opts;
  opts.batch_images = 2;
  const Trajectory one = train_with_snapshots(GridNet("s", {{1, 1, false}}, 1), task.examples,
                                              Schedule::cyclic({0.05, 0.001, 30, 1}), opts);
  ASSERT_EQ(one.snapshots.size(), 1u);
  EXPECT_EQ(one.snapshots[0], one.final_model);
  EXPECT_EQ(one.update_count, 60u);
  const Trajectory unit = train_with_snapshots(GridNet("s", {{1, 1, false}}, 1), task.examples,
                                               Schedule::cyclic({0.05, 0.001, 4, 4}), opts);
  EXPECT_EQ(unit.snapshot_iterations, (std::vector<int>{1, 2, 3, 4}));
  for (double lr : unit.schedule_trace) EXPECT_EQ(lr, 0.05);
}

TEST(Training, WarmRestartsKeepTheWeights) {
  ToyTask task(2, 6, 3);
  const GridNet init("s", {{1, 1, false}}, 5);
  const Trajectory full = train_with_snapshots(init, task.examples, Schedule::cyclic({0.05, 0.001, 40, 4}),
                                               TrainOptions{});
  // Training is deterministic: the same call reproduces every snapshot.
  const Trajectory again = train_with_snapshots(init, task.examples, Schedule::cyclic({0.05, 0.001, 40, 4}),
                                                TrainOptions{});
  EXPECT_EQ(full.snapshots, again.snapshots);
  // The first cycle is a plain 10-iteration run; later cycles continue from it.
  const Trajectory first = train_with_snapshots(init, task.examples, Schedule::cyclic({0.05, 0.001, 10, 1}),
                                                TrainOptions{});
  EXPECT_EQ(full.snapshots[0], first.final_model);
  double early = 0.0, late = 0.0;
  for (int i = 0; i < 10; ++i) {
    early += full.loss_trace[static_cast<std::size_t>(i)];
    late += full.loss_trace[static_cast<std::size_t>(30 + i)];
  }
  EXPECT_LT(late, early);
}

TEST(Training, ConstantScheduleAndEmptyLabels) {
  ToyTask task(2, 3, 4);
  const Trajectory t = train_with_snapshots(GridNet("s", {{1, 1, false}}, 1), task.examples,
                                            Schedule::constant({0.1, 0.001, 20, 5}, 0.004), TrainOptions{});
  for (double lr : t.schedule_trace) EXPECT_EQ(lr, 0.004);
  EXPECT_EQ(t.snapshot_iterations, (std::vector<int>{4, 8, 12, 16, 20}));
  std::vector<TrainExample> empty{{&task.images[0], {}}};
  EXPECT_THROW(train_with_snapshots(GridNet("s", {{1, 1, false}}, 1), empty, Schedule::cyclic({0.1, 0.01, 5, 1}),
                                    TrainOptions{}),
               InvalidInput);
}

TEST(Ensemble, MeanOfMembers) {
  const Image x = test::random_image(4, 4, 1, 1);
  const std::vector<GridNet> members{constant_model(0.2), constant_model(0.6)};
  const ProbMap mean = ensemble_predict(members, x);
  for (double v : mean.values()) EXPECT_NEAR(v, 0.4, 1e-12);
  EXPECT_EQ(ensemble_predict(std::span(members).first(1), x), forward(members[0], x));
  EXPECT_THROW(ensemble_predict(std::span<const GridNet>{}, x), InvalidInput);
}

TEST(Homogenization, HandCases) {
  const std::vector<Image> probes{test::random_image(3, 3, 1, 1), test::random_image(5, 2, 1, 2)};
  const std::vector<GridNet> same{constant_model(0.3), constant_model(0.3)};
  EXPECT_EQ(homogenization(same, probes), 0.0);
  const std::vector<GridNet> pair{constant_model(0.3), constant_model(0.7)};
  EXPECT_NEAR(homogenization(pair, probes), 0.4, 1e-12);
  Trajectory t;
  t.snapshots = {constant_model(0.9), constant_model(0.1), constant_model(0.4), constant_model(0.5)};
  EXPECT_NEAR(homogenization(t, 2, probes), 0.2, 1e-12);
  EXPECT_NEAR(homogenization(t, 3, probes), (0.8 + 0.3 + 0.1) / 3, 1e-12);
  EXPECT_THROW(homogenization(t, 4, probes), InvalidInput);
  EXPECT_THROW(homogenization(std::span(same).first(1), probes), InvalidInput);
  EXPECT_THROW(homogenization(same, std::span<const Image>{}), InvalidInput);
}

TEST(Den, ZeroIterationsGivesDistinctInits) {
  ToyTask task(2, 3, 5);
  const std::vector<std::uint64_t> seeds{11, 12};
  const EnsembleBaseline den = train_den(seeds, "grid16", 1, task.examples, 0, 0.01, TrainOptions{});
  ASSERT_EQ(den.members.size(), 2u);
  EXPECT_NE(den.members[0], den.members[1]);
  EXPECT_EQ(den.update_count, 0u);
  EXPECT_EQ(den.members[0], GridNet::create("grid16", 1, 11));
}

TEST(Den, CountsEveryMemberUpdate) {
  ToyTask task(3, 3, 6);
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  TrainOptions opts;
  opts.batch_images = 2;
  const EnsembleBaseline den = train_den(seeds, "grid16", 1, task.examples, 7, 0.01, opts);
  EXPECT_EQ(den.update_count, 3u * 7u * 2u);
  for (const auto& m : den.members) EXPECT_EQ(m.update_count(), 14u);
}

TEST(Den, RejectsDegenerateSeedLists) {
  ToyTask task(1, 3, 7);
  const std::vector<std::uint64_t> dup{4, 4}, single{4};
  EXPECT_THROW(train_den(dup, "grid16", 1, task.examples, 1, 0.01, TrainOptions{}), InvalidInput);
  EXPECT_THROW(train_den(single, "grid16", 1, task.examples, 1, 0.01, TrainOptions{}), InvalidInput);
}

TEST(TrajectoryFiles, RoundTrip) {
  ToyTask task(2, 4, 8);
  const Trajectory t = train_with_snapshots(GridNet("s", {{1, 2, true}, {2, 1, false}}, 9), task.examples,
                                            Schedule::cyclic({0.05, 0.001, 30, 3}), TrainOptions{});
  const auto dir = test::temp_dir("trajectory");
  save_trajectory(dir, t);
  const std::string index = test::read_text(dir / "index.tsv");
  EXPECT_EQ(index.substr(0, 5), "1\t10\t");
  const Trajectory back = load_trajectory(dir);
  EXPECT_EQ(back.snapshots, t.snapshots);
  EXPECT_EQ(back.snapshot_iterations, t.snapshot_iterations);
  EXPECT_THROW(load_trajectory(dir / "missing"), std::runtime_error);
}

}  // namespace
}  // namespace atal
