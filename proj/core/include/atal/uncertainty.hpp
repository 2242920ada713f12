#pragma once

#include <filesystem>

#include "atal/image.hpp"

namespace atal {

enum class Region : std::uint8_t { SR = 0, PIR = 1, PSR = 2 };

struct RegionTag {};
using RegionMap = Raster<Region, RegionTag>;

/// Best-versus-second-best margin of a binary prediction: |2p - 1|.
double bvsb(double p);

/// SR when the hardened class survives the attack; otherwise PIR if the clean
/// margin is at least margin_threshold, else PSR.
Region classify_pixel(double clean, double adversarial, double margin_threshold);
RegionMap classify_regions(const ProbMap& clean, const ProbMap& adversarial,
                           double margin_threshold = 0.5);

struct UncertaintyMap {
  ProbMap scores;
  RegionMap regions;
  int source_round = 0;
};

/// score = flip * (1 - bvsb(clean)); a flip is a change of hardened class
/// (p >= 0.5) between the clean and adversarial predictions.
UncertaintyMap uncertainty_map(const ProbMap& clean, const ProbMap& adversarial,
                               double margin_threshold = 0.5, int source_round = 0);

/// Scores as a 16-bit PGM; tags as a PGM with SR/PIR/PSR = 0/128/255.
void write_uncertainty(const std::filesystem::path& scores_path,
                       const std::filesystem::path& regions_path, const UncertaintyMap& map);

}  // namespace atal
