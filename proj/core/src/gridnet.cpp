#include "atal/gridnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "atal/rng.hpp"

namespace atal {
namespace {

// out[y, x, :] = bias + sum over taps/in-channels of w[tap, ic, :] * in[y+dy, x+dx, ic]
void conv3x3_forward(const double* in, int height, int width, int in_ch, const double* w,
                     const double* bias, int out_ch, double* out) {
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double* o = out + (static_cast<std::size_t>(y) * width + x) * out_ch;
      std::copy(bias, bias + out_ch, o);
      for (int ky = 0; ky < 3; ++ky) {
        const int yy = y + ky - 1;
        if (yy < 0 || yy >= height) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int xx = x + kx - 1;
          if (xx < 0 || xx >= width) continue;
          const double* ip = in + (static_cast<std::size_t>(yy) * width + xx) * in_ch;
          const double* wp = w + static_cast<std::size_t>(ky * 3 + kx) * in_ch * out_ch;
          for (int ic = 0; ic < in_ch; ++ic) {
            const double v = ip[ic];
            const double* wr = wp + static_cast<std::size_t>(ic) * out_ch;
            for (int oc = 0; oc < out_ch; ++oc) o[oc] += v * wr[oc];
          }
        }
      }
    }
  }
}

// Accumulates weight/bias gradients and (optionally) the input gradient of one
// conv layer given the gradient of its pre-activation output. Pixels whose
// output gradient is entirely zero contribute nothing and are skipped.
void conv3x3_backward(const double* in, int height, int width, int in_ch, const double* w,
                      int out_ch, const double* dout, double* dw, double* dbias, double* din) {
  // Transposed weights [tap][oc][ic] so the input-gradient loop runs over ic.
  std::vector<double> wt;
  if (din != nullptr) {
    wt.resize(static_cast<std::size_t>(kKernelTaps) * in_ch * out_ch);
    for (int tap = 0; tap < kKernelTaps; ++tap) {
      for (int ic = 0; ic < in_ch; ++ic) {
        for (int oc = 0; oc < out_ch; ++oc) {
          wt[(static_cast<std::size_t>(tap) * out_ch + oc) * in_ch + ic] =
              w[(static_cast<std::size_t>(tap) * in_ch + ic) * out_ch + oc];
        }
      }
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double* g = dout + (static_cast<std::size_t>(y) * width + x) * out_ch;
      if (std::all_of(g, g + out_ch, [](double v) { return v == 0.0; })) continue;
      if (dbias != nullptr) {
        for (int oc = 0; oc < out_ch; ++oc) dbias[oc] += g[oc];
      }
      for (int ky = 0; ky < 3; ++ky) {
        const int yy = y + ky - 1;
        if (yy < 0 || yy >= height) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int xx = x + kx - 1;
          if (xx < 0 || xx >= width) continue;
          const std::size_t pix = static_cast<std::size_t>(yy) * width + xx;
          const std::size_t tap = static_cast<std::size_t>(ky * 3 + kx);
          if (dw != nullptr) {
            const double* ip = in + pix * in_ch;
            double* dwt = dw + tap * in_ch * out_ch;
            for (int ic = 0; ic < in_ch; ++ic) {
              const double v = ip[ic];
              double* dwr = dwt + static_cast<std::size_t>(ic) * out_ch;
              for (int oc = 0; oc < out_ch; ++oc) dwr[oc] += v * g[oc];
            }
          }
          if (din != nullptr) {
            double* dp = din + pix * in_ch;
            const double* wtt = wt.data() + tap * out_ch * in_ch;
            for (int oc = 0; oc < out_ch; ++oc) {
              const double go = g[oc];
              if (go == 0.0) continue;
              const double* wr = wtt + static_cast<std::size_t>(oc) * in_ch;
              for (int ic = 0; ic < in_ch; ++ic) dp[ic] += go * wr[ic];
            }
          }
        }
      }
    }
  }
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_input(const GridNet& model, const Image& image) {
  if (model.layers().empty()) throw InvalidInput("model has no layers");
  if (image.channels() != model.input_channels()) {
    throw InvalidInput("image has " + std::to_string(image.channels()) +
                       " channels but the model expects " +
                       std::to_string(model.input_channels()));
  }
  if (image.height() < 1 || image.width() < 1) throw InvalidInput("empty image");
}

// Post-activation feature maps: acts[0] is the input, acts[l + 1] the output
// of layer l (pre-sigmoid logits for the head).
std::vector<std::vector<double>> forward_trace(const GridNet& model, const Image& image) {
  check_input(model, image);
  const int h = image.height();
  const int w = image.width();
  const auto& layers = model.layers();
  const auto params = model.params();
  std::vector<std::vector<double>> acts(layers.size() + 1);
  acts[0].assign(image.values().begin(), image.values().end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const ConvSpec& spec = layers[l];
    acts[l + 1].assign(static_cast<std::size_t>(h) * w * spec.out_channels, 0.0);
    conv3x3_forward(acts[l].data(), h, w, spec.in_channels, params.data() + model.weight_offset(l),
                    params.data() + model.bias_offset(l), spec.out_channels, acts[l + 1].data());
    if (spec.relu) {
      for (double& v : acts[l + 1]) v = v > 0.0 ? v : 0.0;
    }
  }
  return acts;
}

void validate_targets(std::span<const PixelTarget> targets, std::size_t pixels) {
  for (const auto& t : targets) {
    if (t.index >= pixels) throw InvalidInput("supervised pixel index out of bounds");
  }
}

}  // namespace

GridNet::GridNet(std::string architecture_id, std::vector<ConvSpec> layers, std::uint64_t seed)
    : architecture_id_(std::move(architecture_id)), layers_(std::move(layers)), seed_(seed) {
  if (layers_.empty()) throw InvalidInput("GridNet needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].in_channels < 1 || layers_[l].out_channels < 1) {
      throw InvalidInput("layer channel counts must be positive");
    }
    if (l > 0 && layers_[l].in_channels != layers_[l - 1].out_channels) {
      throw InvalidInput("layer " + std::to_string(l) + " input channels do not chain");
    }
  }
  if (layers_.back().out_channels != 1) throw InvalidInput("head must have one output channel");
  layout();
  SplitMix64 rng(seed);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& s = layers_[l];
    const double fan_in = kKernelTaps * s.in_channels;
    const double fan_out = kKernelTaps * s.out_channels;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t i = weight_offset(l); i < bias_offset(l); ++i) {
      params_[i] = rng.uniform(-limit, limit);
    }
  }
}

void GridNet::layout() {
  offsets_.clear();
  std::size_t total = 0;
  for (const auto& s : layers_) {
    offsets_.push_back(total);
    total += static_cast<std::size_t>(kKernelTaps) * s.in_channels * s.out_channels +
             static_cast<std::size_t>(s.out_channels);
  }
  params_.assign(total, 0.0);
}

std::vector<ConvSpec> GridNet::architecture(const std::string& id, int in_channels) {
  std::vector<int> widths;
  if (id == "grid16") {
    widths = {16, 16, 16};
  } else if (id == "grid12-24-12") {
    widths = {12, 24, 12};
  } else {
    throw InvalidInput("unknown architecture '" + id + "'");
  }
  std::vector<ConvSpec> layers;
  int prev = in_channels;
  for (int wdt : widths) {
    layers.push_back({prev, wdt, true});
    prev = wdt;
  }
  layers.push_back({prev, 1, false});
  return layers;
}

GridNet GridNet::create(const std::string& architecture_id, int in_channels, std::uint64_t seed) {
  return GridNet(architecture_id, architecture(architecture_id, in_channels), seed);
}

ProbMap forward(const GridNet& model, const Image& image) {
  const auto acts = forward_trace(model, image);
  ProbMap out(image.height(), image.width());
  const auto& logits = acts.back();
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = sigmoid(logits[i]);
  return out;
}

double masked_bce(const ProbMap& pred, std::span<const PixelTarget> targets) {
  if (targets.empty()) return 0.0;
  validate_targets(targets, pred.pixel_count());
  double sum = 0.0;
  for (const auto& t : targets) {
    const double p = std::clamp(pred[t.index], kProbClamp, 1.0 - kProbClamp);
    sum -= t.target * std::log(p) + (1.0 - t.target) * std::log(1.0 - p);
  }
  return sum / static_cast<double>(targets.size());
}

double masked_bce(const ProbMap& pred, const SparseLabels& labels) {
  require_same_extent(pred, labels, "masked_bce");
  const auto t = labels.targets();
  return masked_bce(pred, t);
}

std::vector<PixelTarget> dense_targets(const ClassMap& classes) {
  std::vector<PixelTarget> out(classes.pixel_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {i, classes[i] ? 1.0 : 0.0};
  return out;
}

std::vector<PixelTarget> dense_targets(const Mask& mask) {
  std::vector<PixelTarget> out(mask.pixel_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {i, mask[i] ? 1.0 : 0.0};
  return out;
}

Gradients backward(const GridNet& model, const Image& image, std::span<const PixelTarget> targets,
                   GradientParts parts) {
  const bool want_w = (static_cast<unsigned>(parts) & 1U) != 0;
  const bool want_x = (static_cast<unsigned>(parts) & 2U) != 0;
  Gradients out;
  if (want_w) out.weights.assign(model.param_count(), 0.0);
  if (want_x) out.input = Image(image.height(), image.width(), image.channels());
  check_input(model, image);
  const std::size_t pixels = image.pixel_count();
  validate_targets(targets, pixels);
  if (targets.empty()) return out;

  const auto acts = forward_trace(model, image);
  const auto& logits = acts.back();
  const double inv_n = 1.0 / static_cast<double>(targets.size());

  // d loss / d logit = (p - y) / n while p sits inside the clamp band.
  std::vector<double> grad(pixels, 0.0);
  double loss = 0.0;
  for (const auto& t : targets) {
    const double p = sigmoid(logits[t.index]);
    if (std::isnan(p)) throw InvalidInput("network output is NaN");
    const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    loss -= t.target * std::log(pc) + (1.0 - t.target) * std::log(1.0 - pc);
    if (p == pc) grad[t.index] += (p - t.target) * inv_n;
  }
  out.loss = loss * inv_n;

  const auto& layers = model.layers();
  const auto params = model.params();
  const int h = image.height();
  const int w = image.width();
  for (std::size_t li = layers.size(); li-- > 0;) {
    const ConvSpec& spec = layers[li];
    if (spec.relu) {
      const auto& a = acts[li + 1];
      for (std::size_t i = 0; i < grad.size(); ++i) {
        if (a[i] <= 0.0) grad[i] = 0.0;
      }
    }
    const bool need_din = li > 0 || want_x;
    std::vector<double> din;
    if (need_din) din.assign(pixels * spec.in_channels, 0.0);
    double* dw = want_w ? out.weights.data() + model.weight_offset(li) : nullptr;
    double* db = want_w ? out.weights.data() + model.bias_offset(li) : nullptr;
    conv3x3_backward(acts[li].data(), h, w, spec.in_channels, params.data() + model.weight_offset(li),
                     spec.out_channels, grad.data(), dw, db, need_din ? din.data() : nullptr);
    grad = std::move(din);
  }
  if (want_x) std::copy(grad.begin(), grad.end(), out.input.values().begin());
  return out;
}

std::vector<double> backward_weights(const GridNet& model, const Image& image,
                                     const SparseLabels& labels) {
  require_same_extent(image, labels, "backward_weights");
  const auto t = labels.targets();
  return backward(model, image, t, GradientParts::weights).weights;
}

Image backward_input(const GridNet& model, const Image& image, const SparseLabels& labels) {
  require_same_extent(image, labels, "backward_input");
  const auto t = labels.targets();
  return backward(model, image, t, GradientParts::input).input;
}

void SgdMomentum::step(GridNet& model, std::span<const double> grads, double lr, double momentum,
                       std::uint64_t batch_images) {
  if (grads.size() != model.param_count()) throw InvalidInput("gradient size mismatch");
  if (!(lr >= 0.0)) throw InvalidInput("learning rate must be non-negative");
  for (double g : grads) {
    if (!std::isfinite(g)) throw InvalidInput("non-finite gradient");
  }
  if (velocity_.size() != grads.size()) velocity_.assign(grads.size(), 0.0);
  auto params = model.params();
  for (std::size_t i = 0; i < grads.size(); ++i) {
    velocity_[i] = momentum * velocity_[i] + grads[i];
    params[i] -= lr * velocity_[i];
  }
  model.add_updates(batch_images);
}

GradCheckReport finite_difference_check(const GridNet& model, const Image& image,
                                        std::span<const PixelTarget> targets, double step) {
  GradCheckReport report;
  const Gradients analytic = backward(model, image, targets, GradientParts::both);
  auto rel = [](double a, double n) { return std::abs(a - n) / std::max(1e-6, std::abs(a) + std::abs(n)); };

  GridNet probe = model;
  auto params = probe.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + step;
    const double up = masked_bce(forward(probe, image), targets);
    params[i] = saved - step;
    const double down = masked_bce(forward(probe, image), targets);
    params[i] = saved;
    report.max_rel_err = std::max(report.max_rel_err, rel(analytic.weights[i], (up - down) / (2 * step)));
    ++report.num_params_checked;
  }
  Image x = image;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = masked_bce(forward(model, x), targets);
    x[i] = saved - step;
    const double down = masked_bce(forward(model, x), targets);
    x[i] = saved;
    report.max_rel_err = std::max(report.max_rel_err, rel(analytic.input[i], (up - down) / (2 * step)));
    ++report.num_inputs_checked;
  }
  return report;
}

namespace {

constexpr char kCheckpointMagic[8] = {'G', 'R', 'D', 'N', 'E', 'T', '0', '1'};

template <class T>
void put(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw InvalidInput("checkpoint truncated at byte " + std::to_string(is.gcount()));
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

// Layout (little-endian): magic[8], u32 id_len, id bytes, u32 layer_count,
// per layer {u32 in, u32 out, u8 relu}, u64 seed, u64 update_count,
// u64 param_count, f64 params[param_count].
void save_checkpoint(const GridNet& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(model.architecture_id().size()));
  os.write(model.architecture_id().data(), static_cast<std::streamsize>(model.architecture_id().size()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(model.layers().size()));
  for (const auto& s : model.layers()) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.in_channels));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.out_channels));
    put<std::uint8_t>(os, s.relu ? 1 : 0);
  }
  put<std::uint64_t>(os, model.seed());
  put<std::uint64_t>(os, model.update_count());
  put<std::uint64_t>(os, model.param_count());
  for (double p : model.params()) put<double>(os, p);
  if (!os) throw std::runtime_error("failed writing checkpoint " + path.string());
}

GridNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw InvalidInput("not a GridNet checkpoint: " + path.string());
  }
  GridNet model;
  const auto id_len = get<std::uint32_t>(is);
  if (id_len > 256) throw InvalidInput("checkpoint architecture id too long");
  model.architecture_id_.resize(id_len);
  is.read(model.architecture_id_.data(), id_len);
  const auto n_layers = get<std::uint32_t>(is);
  if (n_layers == 0 || n_layers > 64) throw InvalidInput("checkpoint layer count out of range");
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    ConvSpec s;
    s.in_channels = static_cast<int>(get<std::uint32_t>(is));
    s.out_channels = static_cast<int>(get<std::uint32_t>(is));
    s.relu = get<std::uint8_t>(is) != 0;
    model.layers_.push_back(s);
  }
  model.layout();
  model.seed_ = get<std::uint64_t>(is);
  model.update_count_ = get<std::uint64_t>(is);
  const auto n_params = get<std::uint64_t>(is);
  if (n_params != model.param_count()) throw InvalidInput("checkpoint parameter count mismatch");
  for (double& p : model.params_) p = get<double>(is);
  return model;
}

}  // namespace atal
