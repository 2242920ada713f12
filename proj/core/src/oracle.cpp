#include "atal/oracle.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "atal/rng.hpp"

namespace atal {

std::string_view to_string(QueryStatus s) { return s == QueryStatus::pending ? "pending" : "answered"; }
std::string_view to_string(AnswerSource s) { return s == AnswerSource::gt_oracle ? "gt_oracle" : "human"; }

void to_json(nlohmann::json& j, const LabelQuery& q) {
  j = nlohmann::json{{"query_id", q.query_id},   {"image_id", q.image_id},
                     {"row", q.row},             {"col", q.col},
                     {"round", q.round},         {"superpixel_id", q.superpixel_id},
                     {"status", to_string(q.status)}, {"score", q.score},
                     {"phi", q.phi}};
}

void from_json(const nlohmann::json& j, LabelQuery& q) {
  j.at("query_id").get_to(q.query_id);
  j.at("image_id").get_to(q.image_id);
  j.at("row").get_to(q.row);
  j.at("col").get_to(q.col);
  j.at("round").get_to(q.round);
  q.superpixel_id = j.value("superpixel_id", -1);
  const std::string status = j.value("status", std::string("pending"));
  if (status != "pending" && status != "answered") throw InvalidInput("unknown query status " + status);
  q.status = status == "pending" ? QueryStatus::pending : QueryStatus::answered;
  q.score = j.value("score", 0.0);
  q.phi = j.value("phi", 0.0);
}

void to_json(nlohmann::json& j, const LabelAnswer& a) {
  j = nlohmann::json{{"query_id", a.query_id}, {"class", to_string(a.cls)}, {"source", to_string(a.source)}};
}

void from_json(const nlohmann::json& j, LabelAnswer& a) {
  j.at("query_id").get_to(a.query_id);
  a.cls = parse_pixel_class(j.at("class").get<std::string>());
  const std::string source = j.value("source", std::string("human"));
  if (source == "gt_oracle") {
    a.source = AnswerSource::gt_oracle;
  } else if (source == "human") {
    a.source = AnswerSource::human;
  } else {
    throw InvalidInput("unknown answer source " + source);
  }
}

LabelAnswer gt_answer(const Mask& mask, const LabelQuery& query) {
  if (!mask.contains(query.row, query.col)) throw InvalidInput("query outside the mask");
  return {query.query_id, mask.at(query.row, query.col) ? PixelClass::salient : PixelClass::background,
          AnswerSource::gt_oracle};
}

std::vector<LabelQuery> initial_points(const std::string& image_id, std::uint64_t seed, int n,
                                       int height, int width) {
  const long long pixels = static_cast<long long>(height) * width;
  if (n < 0 || n > pixels) throw InvalidInput("cannot draw that many distinct initial points");
  SplitMix64 rng(derive_seed(seed, fnv1a(image_id)));
  std::set<long long> taken;
  std::vector<LabelQuery> out;
  while (static_cast<int>(out.size()) < n) {
    const auto idx = static_cast<long long>(rng.below(static_cast<std::uint64_t>(pixels)));
    if (!taken.insert(idx).second) continue;
    LabelQuery q;
    q.image_id = image_id;
    q.row = static_cast<int>(idx / width);
    q.col = static_cast<int>(idx % width);
    q.query_id = "r0_" + image_id + "_" + std::to_string(out.size());
    out.push_back(std::move(q));
  }
  return out;
}

void append_jsonl(const std::filesystem::path& path, const nlohmann::json& record) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw std::runtime_error("cannot append to " + path.string());
  out << record.dump() << '\n';
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::vector<nlohmann::json> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const bool complete = !in.eof();
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error&) {
      if (!complete) break;
      throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": malformed record");
    }
  }
  return out;
}

}  // namespace atal
