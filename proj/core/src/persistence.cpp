#include <cstdio>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "atal/engine.hpp"
#include "atal/rng.hpp"

namespace atal {
namespace {

using nlohmann::json;

constexpr const char* kStateMagic = "ATALSTATE";
constexpr int kStateVersion = 1;

json labels_to_json(const SparseLabels& labels) {
  json entries = json::array();
  for (const auto& e : labels.entries()) {
    entries.push_back({e.row, e.col, static_cast<int>(e.cls), std::string(to_string(e.source)), e.round,
                       e.source_point.row, e.source_point.col});
  }
  return {{"image_id", labels.image_id()},
          {"height", labels.height()},
          {"width", labels.width()},
          {"entries", std::move(entries)}};
}

SparseLabels labels_from_json(const json& j) {
  SparseLabels labels(j.at("image_id").get<std::string>(), j.at("height").get<int>(), j.at("width").get<int>());
  for (const auto& e : j.at("entries")) {
    const int row = e.at(0), col = e.at(1), round = e.at(4);
    const auto cls = e.at(2).get<int>() ? PixelClass::salient : PixelClass::background;
    const LabelSource source = parse_label_source(e.at(3).get<std::string>());
    if (source == LabelSource::propagated) {
      labels.add_propagated(row, col, cls, round, PixelCoord{e.at(5).get<int>(), e.at(6).get<int>()});
    } else {
      labels.add_point(row, col, cls, source, round);
    }
  }
  labels.validate();
  return labels;
}

json model_to_json(const GridNet& m) {
  json layers = json::array();
  for (const auto& l : m.layers()) layers.push_back({l.in_channels, l.out_channels, l.relu});
  return {{"architecture", m.architecture_id()},
          {"layers", std::move(layers)},
          {"seed", m.seed()},
          {"update_count", m.update_count()},
          {"params", std::vector<double>(m.params().begin(), m.params().end())}};
}

GridNet model_from_json(const json& j) {
  std::vector<ConvSpec> layers;
  for (const auto& l : j.at("layers")) layers.push_back({l.at(0).get<int>(), l.at(1).get<int>(), l.at(2).get<bool>()});
  GridNet m(j.at("architecture").get<std::string>(), std::move(layers), j.at("seed").get<std::uint64_t>());
  const auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != m.param_count()) throw CorruptState("stored model has the wrong parameter count");
  std::copy(params.begin(), params.end(), m.params().begin());
  m.add_updates(j.at("update_count").get<std::uint64_t>());
  return m;
}

json metrics_to_json(const RoundMetrics& m) {
  return {{"round", m.round}, {"budget", m.budget},   {"max_f", m.max_f},
          {"avg_f", m.avg_f}, {"mae", m.mae},         {"full_sup_ratio", m.full_sup_ratio},
          {"update_count", m.update_count}};
}

RoundMetrics metrics_from_json(const json& j) {
  return {j.at("round"), j.at("budget"), j.at("max_f"), j.at("avg_f"),
          j.at("mae"),   j.at("full_sup_ratio"), j.at("update_count")};
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string state_to_json(const ExperimentState& s) {
  json labels = json::array();
  for (const auto& l : s.labels) labels.push_back(labels_to_json(l));
  json history = json::array();
  for (const auto& m : s.metric_history) history.push_back(metrics_to_json(m));
  json j = {{"strategy", std::string(to_string(s.strategy))},
            {"seed", s.seed},
            {"round", s.round},
            {"budget_spent", s.budget_spent},
            {"finished", s.finished},
            {"config", to_text(s.config)},
            {"labels", std::move(labels)},
            {"metric_history", std::move(history)},
            {"rng_state", s.rng_state},
            {"full_sup_max_f", s.full_sup_max_f ? json(*s.full_sup_max_f) : json(nullptr)},
            {"pending", s.pending},
            {"received", s.received},
            {"trajectory_refs", s.trajectory_refs},
            {"warm_start", s.warm_start ? model_to_json(*s.warm_start) : json(nullptr)}};
  return j.dump();
}

ExperimentState state_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    ExperimentState s;
    s.strategy = parse_strategy(j.at("strategy").get<std::string>());
    s.seed = j.at("seed");
    s.round = j.at("round");
    s.budget_spent = j.at("budget_spent");
    s.finished = j.at("finished");
    s.config = apply_overrides(ExperimentConfig{}, parse_key_values(j.at("config").get<std::string>()));
    for (const auto& l : j.at("labels")) s.labels.push_back(labels_from_json(l));
    for (const auto& m : j.at("metric_history")) s.metric_history.push_back(metrics_from_json(m));
    s.rng_state = j.at("rng_state");
    if (!j.at("full_sup_max_f").is_null()) s.full_sup_max_f = j.at("full_sup_max_f").get<double>();
    s.pending = j.at("pending").get<std::vector<LabelQuery>>();
    s.received = j.at("received").get<std::vector<LabelAnswer>>();
    s.trajectory_refs = j.at("trajectory_refs").get<std::vector<std::string>>();
    if (!j.at("warm_start").is_null()) s.warm_start = model_from_json(j.at("warm_start"));
    if (static_cast<std::size_t>(s.round) != s.metric_history.size()) {
      throw CorruptState("round counter disagrees with metric history");
    }
    return s;
  } catch (const json::exception& e) {
    throw CorruptState(std::string("malformed state document: ") + e.what());
  } catch (const InvalidInput& e) {
    throw CorruptState(std::string("invalid state document: ") + e.what());
  }
}

void save_state(const std::filesystem::path& path, const ExperimentState& state) {
  const std::string payload = state_to_json(state);
  const std::string header = std::string(kStateMagic) + " " + std::to_string(kStateVersion) + " " +
                             hex64(fnv1a(payload)) + " " + std::to_string(payload.size()) + "\n";
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << header << payload;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ExperimentState load_state(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open state " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic, checksum;
  int version = 0;
  std::size_t bytes = 0;
  if (!(hs >> magic >> version >> checksum >> bytes) || magic != kStateMagic) {
    throw CorruptState(path.string() + ": missing state header");
  }
  if (version != kStateVersion) throw CorruptState(path.string() + ": unsupported state version");
  std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (payload.size() != bytes) throw CorruptState(path.string() + ": payload length mismatch");
  if (hex64(fnv1a(payload)) != checksum) throw CorruptState(path.string() + ": checksum mismatch");
  return state_from_json(payload);
}

ExperimentLock::ExperimentLock(const std::filesystem::path& dir) : path_(ExperimentPaths{dir}.lock()) {
  std::filesystem::create_directories(dir);
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (f == nullptr) throw LockConflict("experiment " + dir.string() + " is locked (" + path_.string() + ")");
  std::fprintf(f, "%ld\n", static_cast<long>(::getpid()));
  std::fclose(f);
}

ExperimentLock::~ExperimentLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

}  // namespace atal
