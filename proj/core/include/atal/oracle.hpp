#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "atal/image.hpp"
#include "atal/labels.hpp"

namespace atal {

enum class QueryStatus { pending, answered };
enum class AnswerSource { gt_oracle, human };

std::string_view to_string(QueryStatus s);
std::string_view to_string(AnswerSource s);

struct LabelQuery {
  std::string query_id;
  std::string image_id;
  int row = 0;
  int col = 0;
  int round = 0;
  int superpixel_id = -1;
  QueryStatus status = QueryStatus::pending;
  /// Selection diagnostics; not part of the query contract.
  double score = 0.0;
  double phi = 0.0;

  friend bool operator==(const LabelQuery&, const LabelQuery&) = default;
};

struct LabelAnswer {
  std::string query_id;
  PixelClass cls = PixelClass::background;
  AnswerSource source = AnswerSource::gt_oracle;

  friend bool operator==(const LabelAnswer&, const LabelAnswer&) = default;
};

void to_json(nlohmann::json& j, const LabelQuery& q);
void from_json(const nlohmann::json& j, LabelQuery& q);
void to_json(nlohmann::json& j, const LabelAnswer& a);
void from_json(const nlohmann::json& j, LabelAnswer& a);

/// Simulated annotator: salient iff mask(row, col) = 1. Reads nothing else.
LabelAnswer gt_answer(const Mask& mask, const LabelQuery& query);

/// n distinct uniform pixels of an H x W image, deterministic per
/// (seed, image_id). Returned as round-0 queries in draw order.
std::vector<LabelQuery> initial_points(const std::string& image_id, std::uint64_t seed, int n,
                                       int height, int width);

/// One JSON object per line. append_jsonl flushes before returning.
void append_jsonl(const std::filesystem::path& path, const nlohmann::json& record);
/// Missing file reads as empty. A truncated final line (a crash mid-write)
/// is ignored; any other malformed line throws.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

}  // namespace atal
