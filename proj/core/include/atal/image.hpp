#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace atal {

/// Raised when an operation receives data of the wrong shape or range.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major H x W x C grid. Channels are interleaved per pixel, so the
/// value of (row, col, ch) lives at ((row * W) + col) * C + ch.
template <class T, class Tag>
class Raster {
 public:
  Raster() = default;
  Raster(int height, int width, int channels = 1, T fill = T{})
      : height_(height), width_(width), channels_(channels) {
    if (height < 0 || width < 0 || channels < 1) {
      throw InvalidInput("raster dimensions must be non-negative with at least one channel");
    }
    values_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  bool contains(int row, int col) const {
    return row >= 0 && col >= 0 && row < height_ && col < width_;
  }

  T& at(int row, int col, int ch = 0) { return values_[index(row, col, ch)]; }
  const T& at(int row, int col, int ch = 0) const { return values_[index(row, col, ch)]; }

  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }

  bool same_shape(const Raster& o) const {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }

  template <class U, class OtherTag>
  bool same_extent(const Raster<U, OtherTag>& o) const {
    return height_ == o.height() && width_ == o.width();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int row, int col, int ch) const {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ + ch;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 1;
  std::vector<T> values_;
};

struct ImageTag {};
struct ProbTag {};
struct MaskTag {};
struct ClassTag {};

/// Network input, values in [0, 1], 1 or 3 channels.
using Image = Raster<double, ImageTag>;
/// Per-pixel probability of the salient class.
using ProbMap = Raster<double, ProbTag>;
/// Binary ground truth (0 = background, 1 = salient).
using Mask = Raster<std::uint8_t, MaskTag>;
/// Dense per-pixel class decisions (pseudo labels).
using ClassMap = Raster<std::uint8_t, ClassTag>;

inline void require_same_extent(const auto& a, const auto& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw InvalidInput(std::string(what) + ": shape mismatch (" + std::to_string(a.height()) + "x" +
                       std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                       std::to_string(b.width()) + ")");
  }
}

}  // namespace atal
