#include "atal/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace atal {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw InvalidInput("config key " + key + ": bad value '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw InvalidInput("config key " + key + ": expected true or false, got '" + text + "'");
}

template <class T>
std::string format_number(T v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Field number(T ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& v) { c.*member = parse_number<T>("", v); },
          [member](const ExperimentConfig& c) { return format_number(c.*member); }};
}

template <class Get>
Field number_at(Get get) {
  using T = std::remove_reference_t<decltype(get(std::declval<ExperimentConfig&>()))>;
  return {[get](ExperimentConfig& c, const std::string& v) { get(c) = parse_number<T>("", v); },
          [get](const ExperimentConfig& c) { return format_number(get(const_cast<ExperimentConfig&>(c))); }};
}

Field flag(bool ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& v) { c.*member = parse_bool("", v); },
          [member](const ExperimentConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

Field path(std::filesystem::path ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& v) { c.*member = v; },
          [member](const ExperimentConfig& c) { return (c.*member).string(); }};
}

// Ordered so to_text() groups keys by section.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"data.train_manifest", path(&ExperimentConfig::train_manifest)},
      {"data.test_manifest", path(&ExperimentConfig::test_manifest)},
      {"data.generator_seed", number(&ExperimentConfig::generator_seed)},
      {"data.size", number(&ExperimentConfig::image_size)},
      {"data.train_count", number(&ExperimentConfig::train_count)},
      {"data.test_count", number(&ExperimentConfig::test_count)},
      {"data.channels", number_at([](ExperimentConfig& c) -> int& { return c.generator.channels; })},
      {"data.min_blobs", number_at([](ExperimentConfig& c) -> int& { return c.generator.min_blobs; })},
      {"data.max_blobs", number_at([](ExperimentConfig& c) -> int& { return c.generator.max_blobs; })},
      {"data.min_radius", number_at([](ExperimentConfig& c) -> double& { return c.generator.min_radius; })},
      {"data.max_radius", number_at([](ExperimentConfig& c) -> double& { return c.generator.max_radius; })},
      {"data.distractor_rate",
       number_at([](ExperimentConfig& c) -> double& { return c.generator.distractor_rate; })},
      {"model.architecture",
       {[](ExperimentConfig& c, const std::string& v) { c.architecture = v; },
        [](const ExperimentConfig& c) { return c.architecture; }}},
      {"attack.epsilon", number_at([](ExperimentConfig& c) -> double& { return c.attack.epsilon; })},
      {"attack.alpha", number_at([](ExperimentConfig& c) -> double& { return c.attack.alpha; })},
      {"attack.steps", number_at([](ExperimentConfig& c) -> int& { return c.attack.steps; })},
      {"uncertainty.margin_threshold", number(&ExperimentConfig::margin_threshold)},
      {"ccls.eta_max", number_at([](ExperimentConfig& c) -> double& { return c.ccls.eta_max; })},
      {"ccls.eta_min", number_at([](ExperimentConfig& c) -> double& { return c.ccls.eta_min; })},
      {"ccls.iterations", number_at([](ExperimentConfig& c) -> int& { return c.ccls.iterations; })},
      {"ccls.cycles", number_at([](ExperimentConfig& c) -> int& { return c.ccls.cycles; })},
      {"ccls.constant_lr", number(&ExperimentConfig::constant_lr)},
      {"train.momentum", number(&ExperimentConfig::momentum)},
      {"train.batch_images", number(&ExperimentConfig::batch_images)},
      {"train.fine_tune", flag(&ExperimentConfig::fine_tune)},
      {"train.grad_clip", number(&ExperimentConfig::grad_clip)},
      {"train.full_iterations", number(&ExperimentConfig::full_iterations)},
      {"eval.ensemble", flag(&ExperimentConfig::eval_ensemble)},
      {"den.members", number(&ExperimentConfig::den_members)},
      {"den.lr", number(&ExperimentConfig::den_lr)},
      {"sampling.k_percent", number(&ExperimentConfig::k_percent)},
      {"sampling.cover_ratio", number(&ExperimentConfig::cover_ratio)},
      {"sampling.candidate_cap", number(&ExperimentConfig::candidate_cap)},
      {"superpixel.count", number_at([](ExperimentConfig& c) -> int& { return c.superpixel.target_count; })},
      {"superpixel.compactness",
       number_at([](ExperimentConfig& c) -> double& { return c.superpixel.compactness; })},
      {"superpixel.iterations", number_at([](ExperimentConfig& c) -> int& { return c.superpixel.iterations; })},
      {"al.initial_points", number(&ExperimentConfig::initial_points)},
      {"al.points_per_round", number(&ExperimentConfig::points_per_round)},
      {"al.max_budget", number(&ExperimentConfig::max_budget)},
      {"al.target_budget", number(&ExperimentConfig::target_budget)},
      {"homogenization.probe_count", number(&ExperimentConfig::probe_count)},
      {"seeds",
       {[](ExperimentConfig& c, const std::string& v) {
          c.seeds.clear();
          std::stringstream ss(v);
          std::string item;
          while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) c.seeds.push_back(parse_number<std::uint64_t>("seeds", item));
          }
        },
        [](const ExperimentConfig& c) {
          std::string out;
          for (std::size_t i = 0; i < c.seeds.size(); ++i) out += (i ? "," : "") + std::to_string(c.seeds[i]);
          return out;
        }}},
      {"output.save_trajectories", flag(&ExperimentConfig::save_trajectories)},
      {"output.dump_maps", flag(&ExperimentConfig::dump_maps)},
  };
  return table;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (train_manifest.empty() != test_manifest.empty()) {
    throw InvalidInput("set both data.train_manifest and data.test_manifest, or neither");
  }
  if (train_manifest.empty()) {
    validate_generator(image_size, generator);
    if (train_count < 1 || test_count < 1) throw InvalidInput("split sizes must be positive");
  }
  GridNet::architecture(architecture, generator.channels);
  attack.validate();
  if (!(margin_threshold > 0.0 && margin_threshold < 1.0)) {
    throw InvalidInput("uncertainty.margin_threshold must lie in (0, 1)");
  }
  ccls.validate();
  if (!(constant_lr >= 0.0) || !(den_lr >= 0.0)) throw InvalidInput("learning rates must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidInput("train.momentum must lie in [0, 1)");
  if (!(grad_clip >= 0.0)) throw InvalidInput("train.grad_clip must be non-negative");
  if (batch_images < 1) throw InvalidInput("train.batch_images must be positive");
  if (full_iterations < 1) throw InvalidInput("train.full_iterations must be positive");
  if (den_members < 2) throw InvalidInput("den.members must be at least 2");
  if (!(k_percent > 0.0 && k_percent <= 100.0)) throw InvalidInput("sampling.k_percent must lie in (0, 100]");
  if (cover_ratio < 1) throw InvalidInput("sampling.cover_ratio must be at least 1");
  if (candidate_cap < 1) throw InvalidInput("sampling.candidate_cap must be positive");
  if (superpixel.target_count < 1 || superpixel.iterations < 0 || !(superpixel.compactness > 0.0)) {
    throw InvalidInput("invalid superpixel settings");
  }
  if (initial_points < 0 || points_per_round < 1) throw InvalidInput("invalid point counts");
  if (max_budget < initial_points) throw InvalidInput("al.max_budget below the initial points");
  if (target_budget < initial_points || target_budget > max_budget) {
    throw InvalidInput("al.target_budget must lie in [al.initial_points, al.max_budget]");
  }
  if (probe_count < 1) throw InvalidInput("homogenization.probe_count must be positive");
  if (seeds.empty()) throw InvalidInput("seeds must list at least one seed");
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput("config line " + std::to_string(line_no) + ": expected key = value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

ExperimentConfig apply_overrides(ExperimentConfig base, const std::map<std::string, std::string>& kv) {
  const auto& table = fields();
  for (const auto& [key, value] : kv) {
    auto it = std::find_if(table.begin(), table.end(), [&](const auto& f) { return f.first == key; });
    if (it == table.end()) throw InvalidInput("unknown config key '" + key + "'");
    try {
      it->second.set(base, value);
    } catch (const InvalidInput&) {
      throw InvalidInput("config key " + key + ": bad value '" + value + "'");
    }
  }
  return base;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg = apply_overrides(ExperimentConfig{}, parse_key_values(text));
  cfg.validate();
  return cfg;
}

ExperimentConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig cfg = parse_config(ss.str());
  const auto base = path.parent_path();
  if (!cfg.train_manifest.empty() && cfg.train_manifest.is_relative()) cfg.train_manifest = base / cfg.train_manifest;
  if (!cfg.test_manifest.empty() && cfg.test_manifest.is_relative()) cfg.test_manifest = base / cfg.test_manifest;
  return cfg;
}

std::string to_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(config) + "\n";
  return out;
}

void write_config(const std::filesystem::path& path, const ExperimentConfig& config) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config " + path.string());
  out << to_text(config);
}

}  // namespace atal
