#include "atal/labels.hpp"

#include "atal/image.hpp"

namespace atal {

std::string_view to_string(PixelClass c) {
  return c == PixelClass::salient ? "salient" : "background";
}

std::string_view to_string(LabelSource s) {
  switch (s) {
    case LabelSource::seed: return "seed";
    case LabelSource::queried: return "queried";
    case LabelSource::propagated: return "propagated";
  }
  return "seed";
}

PixelClass parse_pixel_class(std::string_view text) {
  if (text == "salient" || text == "1") return PixelClass::salient;
  if (text == "background" || text == "0") return PixelClass::background;
  throw InvalidInput("unknown pixel class '" + std::string(text) + "'");
}

LabelSource parse_label_source(std::string_view text) {
  if (text == "seed") return LabelSource::seed;
  if (text == "queried") return LabelSource::queried;
  if (text == "propagated") return LabelSource::propagated;
  throw InvalidInput("unknown label source '" + std::string(text) + "'");
}

SparseLabels::SparseLabels(std::string image_id, int height, int width)
    : image_id_(std::move(image_id)), height_(height), width_(width) {}

std::size_t SparseLabels::index_of(int row, int col) const {
  if (row < 0 || col < 0 || row >= height_ || col >= width_) {
    throw InvalidInput("label (" + std::to_string(row) + ", " + std::to_string(col) +
                       ") outside " + std::to_string(height_) + "x" + std::to_string(width_) +
                       " image '" + image_id_ + "'");
  }
  return static_cast<std::size_t>(row) * width_ + col;
}

void SparseLabels::add_point(int row, int col, PixelClass cls, LabelSource source, int round) {
  if (source == LabelSource::propagated) {
    throw InvalidInput("add_point expects a seed or queried source");
  }
  entries_[index_of(row, col)] = LabelEntry{row, col, cls, source, round, PixelCoord{row, col}};
}

void SparseLabels::add_propagated(int row, int col, PixelClass cls, int round,
                                  PixelCoord source_point) {
  const std::size_t idx = index_of(row, col);
  auto it = entries_.find(idx);
  if (it != entries_.end() && it->second.source != LabelSource::propagated) return;
  entries_[idx] = LabelEntry{row, col, cls, LabelSource::propagated, round, source_point};
}

const LabelEntry* SparseLabels::find(int row, int col) const {
  if (row < 0 || col < 0 || row >= height_ || col >= width_) return nullptr;
  auto it = entries_.find(static_cast<std::size_t>(row) * width_ + col);
  return it == entries_.end() ? nullptr : &it->second;
}

std::size_t SparseLabels::annotated_count() const {
  std::size_t n = 0;
  for (const auto& [idx, e] : entries_) n += e.source != LabelSource::propagated;
  return n;
}

std::vector<LabelEntry> SparseLabels::entries() const {
  std::vector<LabelEntry> out;
  out.reserve(entries_.size());
  for (const auto& [idx, e] : entries_) out.push_back(e);
  return out;
}

std::vector<PixelTarget> SparseLabels::targets() const {
  std::vector<PixelTarget> out;
  out.reserve(entries_.size());
  for (const auto& [idx, e] : entries_) {
    out.push_back({idx, e.cls == PixelClass::salient ? 1.0 : 0.0});
  }
  return out;
}

void SparseLabels::validate() const {
  for (const auto& [idx, e] : entries_) {
    if (index_of(e.row, e.col) != idx) throw InvalidInput("label index out of sync");
    if (e.source == LabelSource::propagated) {
      const LabelEntry* src = find(e.source_point.row, e.source_point.col);
      if (src == nullptr || src->source == LabelSource::propagated) {
        throw InvalidInput("propagated label at (" + std::to_string(e.row) + ", " +
                           std::to_string(e.col) + ") has no annotated source point");
      }
    } else if (e.source_point != PixelCoord{e.row, e.col}) {
      throw InvalidInput("annotated label must be its own source point");
    }
  }
}

}  // namespace atal
