#include "atal/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "atal/trajectory.hpp"

namespace atal {

double threshold_at(int j) { return static_cast<double>(j) / (kThresholdCount - 1); }

double f_measure(double precision, double recall) {
  const double den = kBetaSquared * precision + recall;
  return den > 0.0 ? (1.0 + kBetaSquared) * precision * recall / den : 0.0;
}

EvalResult evaluate_maps(std::span<const ProbMap> predictions, std::span<const Mask> masks) {
  if (predictions.size() != masks.size()) throw InvalidInput("prediction/mask count mismatch");
  if (predictions.empty()) throw InvalidInput("evaluation needs at least one image");
  EvalResult out;
  auto& c = out.curve;
  c.thresholds.resize(kThresholdCount);
  c.precision.assign(kThresholdCount, 0.0);
  c.recall.assign(kThresholdCount, 0.0);
  for (int j = 0; j < kThresholdCount; ++j) c.thresholds[j] = threshold_at(j);

  for (std::size_t n = 0; n < predictions.size(); ++n) {
    const ProbMap& p = predictions[n];
    const Mask& m = masks[n];
    require_same_extent(p, m, "evaluate");
    // Histogram of scores by the highest threshold index they clear, split by class.
    std::vector<std::size_t> pos_hist(kThresholdCount, 0), neg_hist(kThresholdCount, 0);
    std::size_t gt_pos = 0;
    double abs_err = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double v = std::clamp(p[i], 0.0, 1.0);
      abs_err += std::abs(v - (m[i] ? 1.0 : 0.0));
      int j = static_cast<int>(std::floor(v * (kThresholdCount - 1)));
      j = std::clamp(j, 0, kThresholdCount - 1);
      while (j + 1 < kThresholdCount && v >= threshold_at(j + 1)) ++j;
      while (j > 0 && v < threshold_at(j)) --j;
      (m[i] ? pos_hist : neg_hist)[j] += 1;
      gt_pos += m[i] != 0;
    }
    out.mae += abs_err / static_cast<double>(p.size());
    std::size_t tp = 0, fp = 0;
    for (int j = kThresholdCount - 1; j >= 0; --j) {
      tp += pos_hist[j];
      fp += neg_hist[j];
      c.precision[j] += tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
      c.recall[j] += gt_pos > 0 ? static_cast<double>(tp) / static_cast<double>(gt_pos) : 0.0;
    }
  }
  const double inv = 1.0 / static_cast<double>(predictions.size());
  out.mae *= inv;
  c.f_measure.resize(kThresholdCount);
  double sum_f = 0.0;
  for (int j = 0; j < kThresholdCount; ++j) {
    c.precision[j] *= inv;
    c.recall[j] *= inv;
    c.f_measure[j] = f_measure(c.precision[j], c.recall[j]);
    out.max_f = std::max(out.max_f, c.f_measure[j]);
    sum_f += c.f_measure[j];
  }
  out.avg_f = sum_f / kThresholdCount;
  return out;
}

EvalResult evaluate(const GridNet& model, std::span<const Sample> samples) {
  std::vector<ProbMap> preds;
  std::vector<Mask> masks;
  for (const auto& s : samples) {
    preds.push_back(forward(model, s.image));
    masks.push_back(s.mask);
  }
  return evaluate_maps(preds, masks);
}

EvalResult evaluate(std::span<const GridNet> ensemble, std::span<const Sample> samples) {
  std::vector<ProbMap> preds;
  std::vector<Mask> masks;
  for (const auto& s : samples) {
    preds.push_back(ensemble_predict(ensemble, s.image));
    masks.push_back(s.mask);
  }
  return evaluate_maps(preds, masks);
}

}  // namespace atal
