#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "atal/image.hpp"
#include "atal/labels.hpp"

namespace atal {

struct SlicParams {
  int target_count = 96;
  double compactness = 10.0;
  int iterations = 10;
  friend bool operator==(const SlicParams&, const SlicParams&) = default;
};

struct SuperpixelPartition {
  int height = 0;
  int width = 0;
  int count = 0;
  /// Row-major superpixel id per pixel, in [0, count).
  std::vector<int> labels;

  int at(int row, int col) const { return labels[static_cast<std::size_t>(row) * width + col]; }
  friend bool operator==(const SuperpixelPartition&, const SuperpixelPartition&) = default;
};

/// SLIC-style clustering over (row * c / step, col * c / step, 100 * intensity)
/// seeded on a regular grid, followed by a pass that merges disconnected
/// fragments into their largest 4-neighbour segment. Ids are numbered in
/// order of first appearance. Throws when target_count is not in [1, H*W].
SuperpixelPartition segment(const Image& image, const SlicParams& params);

/// Throws InvalidInput naming the first violated property: coverage, id
/// range, 4-connectivity of every id, or count above max_count.
void check_partition(const SuperpixelPartition& partition, int max_count);

struct PropagatedLabel {
  int row = 0;
  int col = 0;
  PixelClass cls = PixelClass::background;
  PixelCoord source_point;
  friend bool operator==(const PropagatedLabel&, const PropagatedLabel&) = default;
};

/// Every pixel of the point's superpixel, row-major, carrying its class.
std::vector<PropagatedLabel> propagate(int row, int col, PixelClass cls,
                                       const SuperpixelPartition& partition);

/// Writes the propagated labels of one point into the labeled set.
void apply_propagation(SparseLabels& labels, std::span<const PropagatedLabel> region, int round);

void write_partition(const std::filesystem::path& path, const SuperpixelPartition& partition);

/// Pixels of superpixel `id` that touch a different id or the image border.
std::vector<PixelCoord> superpixel_outline(const SuperpixelPartition& partition, int id);

}  // namespace atal
