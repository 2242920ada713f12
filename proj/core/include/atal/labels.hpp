#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace atal {

enum class PixelClass : std::uint8_t { background = 0, salient = 1 };
enum class LabelSource : std::uint8_t { seed, queried, propagated };

std::string_view to_string(PixelClass c);
std::string_view to_string(LabelSource s);
PixelClass parse_pixel_class(std::string_view text);
LabelSource parse_label_source(std::string_view text);

struct PixelCoord {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const PixelCoord&, const PixelCoord&) = default;
};

/// Supervision for one pixel, addressed by its row-major index.
struct PixelTarget {
  std::size_t index = 0;
  double target = 0.0;
};

struct LabelEntry {
  int row = 0;
  int col = 0;
  PixelClass cls = PixelClass::background;
  LabelSource source = LabelSource::seed;
  int round = 0;
  /// The annotated pixel this label came from (itself for seed/queried).
  PixelCoord source_point;

  friend bool operator==(const LabelEntry&, const LabelEntry&) = default;
};

/// The labeled set of one image. Annotated points (seed or queried) always
/// keep their class; propagated labels written later replace earlier ones.
class SparseLabels {
 public:
  SparseLabels() = default;
  SparseLabels(std::string image_id, int height, int width);

  const std::string& image_id() const { return image_id_; }
  int height() const { return height_; }
  int width() const { return width_; }

  void add_point(int row, int col, PixelClass cls, LabelSource source, int round);
  /// No-op when (row, col) already holds an annotated point.
  void add_propagated(int row, int col, PixelClass cls, int round, PixelCoord source_point);

  const LabelEntry* find(int row, int col) const;
  bool contains(int row, int col) const { return find(row, col) != nullptr; }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t annotated_count() const;

  /// Entries ordered by row-major pixel index.
  std::vector<LabelEntry> entries() const;
  std::vector<PixelTarget> targets() const;

  /// Throws InvalidInput when a stored entry breaks the container invariants.
  void validate() const;

  friend bool operator==(const SparseLabels&, const SparseLabels&) = default;

 private:
  std::size_t index_of(int row, int col) const;

  std::string image_id_;
  int height_ = 0;
  int width_ = 0;
  std::map<std::size_t, LabelEntry> entries_;
};

}  // namespace atal
