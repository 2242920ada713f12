#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "atal/image.hpp"
#include "atal/labels.hpp"

namespace atal {

/// One 3x3, stride-1, same-padded convolution, optionally followed by ReLU.
struct ConvSpec {
  int in_channels = 1;
  int out_channels = 1;
  bool relu = true;
  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

inline constexpr int kKernelTaps = 9;
inline constexpr double kProbClamp = 1e-7;

/// Fully convolutional segmenter: a stack of 3x3 conv blocks followed by a
/// sigmoid on the single-channel head. Output resolution equals input
/// resolution.
///
/// Parameters live in one flat array. For layer l the weights come first,
/// laid out [tap = ky * 3 + kx][in_channel][out_channel], followed by
/// out_channels biases.
class GridNet {
 public:
  GridNet() = default;
  /// Glorot-uniform weights (limit sqrt(6 / (fan_in + fan_out))) and zero
  /// biases, drawn from SplitMix64(seed).
  GridNet(std::string architecture_id, std::vector<ConvSpec> layers, std::uint64_t seed);

  /// Known stacks: "grid16" (in-16-16-16-1) and "grid12-24-12" (in-12-24-12-1).
  static GridNet create(const std::string& architecture_id, int in_channels, std::uint64_t seed);
  static std::vector<ConvSpec> architecture(const std::string& architecture_id, int in_channels);

  const std::string& architecture_id() const { return architecture_id_; }
  const std::vector<ConvSpec>& layers() const { return layers_; }
  int input_channels() const { return layers_.empty() ? 0 : layers_.front().in_channels; }
  std::uint64_t seed() const { return seed_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + static_cast<std::size_t>(kKernelTaps) * layers_[layer].in_channels *
                                 layers_[layer].out_channels;
  }

  /// Number of per-image weight updates applied so far.
  std::uint64_t update_count() const { return update_count_; }
  void add_updates(std::uint64_t n) { update_count_ += n; }

  friend bool operator==(const GridNet&, const GridNet&) = default;

 private:
  friend GridNet load_checkpoint(const std::filesystem::path& path);
  void layout();

  std::string architecture_id_;
  std::vector<ConvSpec> layers_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  std::uint64_t seed_ = 0;
  std::uint64_t update_count_ = 0;
};

ProbMap forward(const GridNet& model, const Image& image);

/// Mean binary cross-entropy over the supervised pixels; 0 for an empty set.
double masked_bce(const ProbMap& pred, std::span<const PixelTarget> targets);
double masked_bce(const ProbMap& pred, const SparseLabels& labels);

/// Dense targets (every pixel) from a class map.
std::vector<PixelTarget> dense_targets(const ClassMap& classes);
std::vector<PixelTarget> dense_targets(const Mask& mask);

enum class GradientParts : unsigned { weights = 1, input = 2, both = 3 };

struct Gradients {
  double loss = 0.0;
  std::vector<double> weights;  // empty unless requested
  Image input;                  // empty unless requested
};

Gradients backward(const GridNet& model, const Image& image, std::span<const PixelTarget> targets,
                   GradientParts parts = GradientParts::both);
std::vector<double> backward_weights(const GridNet& model, const Image& image,
                                     const SparseLabels& labels);
Image backward_input(const GridNet& model, const Image& image, const SparseLabels& labels);

/// SGD with heavy-ball momentum: v <- momentum * v + g; w <- w - lr * v.
class SgdMomentum {
 public:
  explicit SgdMomentum(std::size_t param_count = 0) : velocity_(param_count, 0.0) {}

  /// Throws InvalidInput (leaving model and velocity untouched) on a
  /// non-finite gradient or negative learning rate. Adds batch_images to the
  /// model's update counter.
  void step(GridNet& model, std::span<const double> grads, double lr, double momentum,
            std::uint64_t batch_images = 1);

  std::span<const double> velocity() const { return velocity_; }

 private:
  std::vector<double> velocity_;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t num_params_checked = 0;
  std::size_t num_inputs_checked = 0;
};

/// Compares backward() with central finite differences of masked_bce(forward()).
/// Relative error is |a - n| / max(1e-6, |a| + |n|) per coordinate.
GradCheckReport finite_difference_check(const GridNet& model, const Image& image,
                                        std::span<const PixelTarget> targets, double step = 1e-4);

void save_checkpoint(const GridNet& model, const std::filesystem::path& path);
GridNet load_checkpoint(const std::filesystem::path& path);

}  // namespace atal
