#include "atal/uncertainty.hpp"

#include <cmath>
#include <vector>

#include "atal/pnm.hpp"

namespace atal {

double bvsb(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("bvsb expects a probability");
  return std::abs(2.0 * p - 1.0);
}

Region classify_pixel(double clean, double adversarial, double margin_threshold) {
  if ((clean >= 0.5) == (adversarial >= 0.5)) return Region::SR;
  return bvsb(clean) >= margin_threshold ? Region::PIR : Region::PSR;
}

RegionMap classify_regions(const ProbMap& clean, const ProbMap& adversarial,
                           double margin_threshold) {
  require_same_extent(clean, adversarial, "classify_regions");
  if (!(margin_threshold > 0.0 && margin_threshold < 1.0)) {
    throw InvalidInput("margin threshold must lie in (0, 1)");
  }
  RegionMap out(clean.height(), clean.width());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    out[i] = classify_pixel(clean[i], adversarial[i], margin_threshold);
  }
  return out;
}

UncertaintyMap uncertainty_map(const ProbMap& clean, const ProbMap& adversarial,
                               double margin_threshold, int source_round) {
  UncertaintyMap out;
  out.regions = classify_regions(clean, adversarial, margin_threshold);
  out.scores = ProbMap(clean.height(), clean.width());
  out.source_round = source_round;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (out.regions[i] != Region::SR) out.scores[i] = 1.0 - bvsb(clean[i]);
  }
  return out;
}

void write_uncertainty(const std::filesystem::path& scores_path,
                       const std::filesystem::path& regions_path, const UncertaintyMap& map) {
  write_prob_map(scores_path, map.scores);
  std::vector<int> tags(map.regions.size());
  for (std::size_t i = 0; i < tags.size(); ++i) {
    tags[i] = map.regions[i] == Region::SR ? 0 : (map.regions[i] == Region::PIR ? 128 : 255);
  }
  write_u8_pgm(regions_path, map.regions.height(), map.regions.width(), tags);
}

}  // namespace atal
