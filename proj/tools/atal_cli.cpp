// atal: command-line front end for data generation, training, AL runs and
// the annotation server.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "atal/engine.hpp"
#include "atal/service.hpp"

namespace {

using namespace atal;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config_path, "Key = value config file");
  cmd->add_option("--set", opt.overrides, "Override one config key (key=value)")->take_all();
  cmd->add_flag("-q,--quiet", opt.quiet, "Suppress progress lines");
}

ExperimentConfig load_config(const CommonOptions& opt) {
  ExperimentConfig cfg = opt.config_path.empty() ? ExperimentConfig{} : read_config(opt.config_path);
  std::map<std::string, std::string> kv;
  for (const auto& item : opt.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidInput("--set expects key=value, got '" + item + "'");
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  cfg = apply_overrides(cfg, kv);
  cfg.validate();
  return cfg;
}

Engine::Logger logger(const CommonOptions& opt) {
  if (opt.quiet) return {};
  return [](const std::string& m) { std::cerr << m << '\n'; };
}

std::vector<std::uint64_t> seeds_or_default(const std::vector<std::uint64_t>& given, const ExperimentConfig& cfg) {
  return given.empty() ? cfg.seeds : given;
}

void print_eval(const std::string& label, const EvalResult& r) {
  std::cout << label << "\tmaxF " << r.max_f << "\tavgF " << r.avg_f << "\tMAE " << r.mae << '\n';
}

std::atomic<AnnotationService*> g_service{nullptr};

extern "C" void on_signal(int) {
  if (auto* s = g_service.load()) s->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial trajectory-ensemble active learning for point-supervised saliency"};
  app.require_subcommand(1);

  // generate-data
  CommonOptions gen_opt;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate-data", "Write the synthetic train/test splits as PPM/PGM plus manifests");
  add_common(gen, gen_opt);
  gen->add_option("--out", gen_out, "Output directory")->required();

  // train-full
  CommonOptions full_opt;
  std::uint64_t full_seed = 1;
  std::string full_out;
  auto* full = app.add_subcommand("train-full", "Train with every pixel labeled and report train/test metrics");
  add_common(full, full_opt);
  full->add_option("--seed", full_seed, "Run seed");
  full->add_option("--out", full_out, "Directory for the trajectory checkpoints");

  // al-run
  CommonOptions run_opt;
  std::string run_strategy = "atal";
  std::uint64_t run_seed = 1;
  std::string run_dir;
  auto* run = app.add_subcommand("al-run", "One active-learning run answered from the ground-truth masks");
  add_common(run, run_opt);
  run->add_option("--strategy", run_strategy, "atal, random_points, entropy_topk, den_atal, atal_no_rds, "
                                              "atal_no_sp or atal_no_ccls");
  run->add_option("--seed", run_seed, "Run seed");
  run->add_option("--experiment", run_dir, "Experiment directory; an existing state there is resumed");

  // ablate
  CommonOptions abl_opt;
  std::vector<std::string> abl_strategies;
  std::vector<std::uint64_t> abl_seeds;
  std::string abl_out;
  auto* abl = app.add_subcommand("ablate", "Run several strategies over several seeds");
  add_common(abl, abl_opt);
  abl->add_option("--strategies", abl_strategies, "Strategies (default: all)")->delimiter(',');
  abl->add_option("--seeds", abl_seeds, "Seeds (default: config seeds)")->delimiter(',');
  abl->add_option("--out", abl_out, "Directory for ablation.tsv");

  // budget-sweep
  CommonOptions sweep_opt;
  std::vector<int> sweep_budgets{2, 4, 6, 8, 10, 20};
  std::vector<std::uint64_t> sweep_seeds;
  std::string sweep_out;
  auto* sweep = app.add_subcommand("budget-sweep", "Mean maxF of ATAL at several per-image budgets");
  add_common(sweep, sweep_opt);
  sweep->add_option("--budgets", sweep_budgets, "Budgets")->delimiter(',');
  sweep->add_option("--seeds", sweep_seeds, "Seeds (default: config seeds)")->delimiter(',');
  sweep->add_option("--out", sweep_out, "Directory for budget_sweep.tsv");

  // evaluate
  CommonOptions eval_opt;
  std::vector<std::string> eval_models;
  std::string eval_trajectory;
  std::string eval_manifest;
  auto* eval = app.add_subcommand("evaluate", "Score a checkpoint, an ensemble or a trajectory on a split");
  add_common(eval, eval_opt);
  eval->add_option("--model", eval_models, "Checkpoint file(s); several are averaged");
  eval->add_option("--trajectory", eval_trajectory, "Trajectory directory; its snapshots are averaged");
  eval->add_option("--manifest", eval_manifest, "Manifest to score on (default: the config's test split)");

  // serve
  CommonOptions serve_opt;
  std::string serve_dir;
  int serve_port = 8080;
  auto* serve = app.add_subcommand("serve", "HTTP annotation service for one experiment directory");
  add_common(serve, serve_opt);
  serve->add_option("--experiment", serve_dir, "Experiment directory")->required();
  serve->add_option("--port", serve_port, "TCP port");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const ExperimentConfig cfg = load_config(gen_opt);
      const std::filesystem::path out = gen_out;
      const auto train = generate_synthetic(out / "train", "train", split_seed(cfg.generator_seed, "train"),
                                            cfg.train_count, cfg.image_size, cfg.generator);
      const auto test = generate_synthetic(out / "test", "test", split_seed(cfg.generator_seed, "test"),
                                           cfg.test_count, cfg.image_size, cfg.generator);
      ExperimentConfig with_paths = cfg;
      with_paths.train_manifest = std::filesystem::absolute(out / "train" / "train.tsv");
      with_paths.test_manifest = std::filesystem::absolute(out / "test" / "test.tsv");
      write_config(out / "config.txt", with_paths);
      std::cout << "wrote " << train.entries.size() << " training and " << test.entries.size()
                << " test images; config " << (out / "config.txt").string() << '\n';
    } else if (*full) {
      const ExperimentConfig cfg = load_config(full_opt);
      const ExperimentData data = load_data(cfg);
      const auto result = train_fully_supervised(cfg.architecture, data, cfg, full_seed);
      print_eval("train", result.train);
      print_eval("test", result.test);
      if (!full_out.empty()) save_trajectory(full_out, result.trajectory);
    } else if (*run) {
      const ExperimentConfig cfg = load_config(run_opt);
      const StrategyKind strategy = parse_strategy(run_strategy);
      auto data = std::make_shared<const ExperimentData>(load_data(cfg));
      std::optional<ExperimentPaths> paths;
      std::unique_ptr<ExperimentLock> lock;
      if (!run_dir.empty()) {
        paths = ExperimentPaths{run_dir};
        lock = std::make_unique<ExperimentLock>(run_dir);
      }
      Engine engine(data, paths, logger(run_opt));
      ExperimentState state;
      if (paths && std::filesystem::exists(paths->state())) {
        state = load_state(paths->state());
        engine.recover(state);
        if (!run_opt.quiet) std::cerr << "resuming at round " << state.round << '\n';
        engine.run_to_completion(state);
      } else {
        state = engine.run(cfg, strategy, run_seed);
      }
      std::cout << metrics_table(state.metric_history);
    } else if (*abl) {
      const ExperimentConfig cfg = load_config(abl_opt);
      std::vector<StrategyKind> strategies;
      for (const auto& s : abl_strategies) strategies.push_back(parse_strategy(s));
      if (strategies.empty()) strategies = all_strategies();
      auto data = std::make_shared<const ExperimentData>(load_data(cfg));
      Engine engine(data, {}, logger(abl_opt));
      const auto seeds = seeds_or_default(abl_seeds, cfg);
      const auto runs = ablate(engine, cfg, strategies, seeds, abl_out);
      std::cout << "strategy\tseed\tbudget\tmaxF\tavgF\tMAE\tratio\n";
      for (const auto& r : runs) {
        std::cout << to_string(r.strategy) << '\t' << r.seed << '\t' << r.final.budget << '\t' << r.final.max_f
                  << '\t' << r.final.avg_f << '\t' << r.final.mae << '\t' << r.final.full_sup_ratio << '\n';
      }
    } else if (*sweep) {
      const ExperimentConfig cfg = load_config(sweep_opt);
      auto data = std::make_shared<const ExperimentData>(load_data(cfg));
      Engine engine(data, {}, logger(sweep_opt));
      const auto points = budget_sweep(engine, cfg, sweep_budgets, seeds_or_default(sweep_seeds, cfg), sweep_out);
      std::cout << "budget\tmean_maxF\n";
      for (const auto& p : points) std::cout << p.budget << '\t' << p.mean_max_f << '\n';
    } else if (*eval) {
      const ExperimentConfig cfg = load_config(eval_opt);
      std::vector<GridNet> models;
      for (const auto& m : eval_models) models.push_back(load_checkpoint(m));
      if (!eval_trajectory.empty()) {
        for (auto& m : load_trajectory(eval_trajectory).snapshots) models.push_back(std::move(m));
      }
      if (models.empty()) throw InvalidInput("give --model or --trajectory");
      const std::vector<Sample> samples = eval_manifest.empty() ? load_data(cfg).test
                                                                : load_samples(read_manifest(eval_manifest));
      print_eval("eval", evaluate(std::span<const GridNet>(models), samples));
    } else if (*serve) {
      const std::filesystem::path dir = serve_dir;
      if (!std::filesystem::exists(ExperimentPaths{dir}.config())) {
        std::filesystem::create_directories(dir);
        write_config(ExperimentPaths{dir}.config(), load_config(serve_opt));
      }
      AnnotationService service(logger(serve_opt));
      const std::string session = service.create_session(dir);
      const char* env = std::getenv(kBindAddressEnv);
      const std::string host = env != nullptr && *env != '\0' ? env : "127.0.0.1";
      std::cout << "session " << session << " on http://" << host << ':' << serve_port << std::endl;
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      const bool ok = service.listen(host, serve_port);
      g_service = nullptr;
      service.close_session(session);
      if (!ok) {
        std::cerr << "error: cannot listen on " << host << ':' << serve_port << '\n';
        return 1;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
