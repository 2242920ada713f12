#pragma once

#include <span>
#include <vector>

#include "atal/dataset.hpp"
#include "atal/gridnet.hpp"

namespace atal {

inline constexpr int kThresholdCount = 255;
inline constexpr double kBetaSquared = 0.3;

/// Threshold j is j / 254 for j = 0..254; a pixel is predicted salient when
/// p >= threshold. Precision and recall are averaged over images before the
/// F-measure is formed.
struct PrCurve {
  std::vector<double> thresholds;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f_measure;
};

struct EvalResult {
  double max_f = 0.0;
  double avg_f = 0.0;
  double mae = 0.0;
  PrCurve curve;
};

double threshold_at(int j);
/// F_beta with beta^2 = 0.3; 0 when precision + recall is 0.
double f_measure(double precision, double recall);

/// Precision is 0 when nothing is predicted salient; recall is 0 when the
/// mask has no salient pixel.
EvalResult evaluate_maps(std::span<const ProbMap> predictions, std::span<const Mask> masks);
EvalResult evaluate(const GridNet& model, std::span<const Sample> samples);
EvalResult evaluate(std::span<const GridNet> ensemble, std::span<const Sample> samples);

}  // namespace atal
