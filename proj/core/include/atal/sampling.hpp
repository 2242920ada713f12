#pragma once

#include <span>
#include <vector>

#include "atal/image.hpp"
#include "atal/uncertainty.hpp"

namespace atal {

struct CandidatePoint {
  int row = 0;
  int col = 0;
  double score = 0.0;
  /// Normalised coordinates (row / H, col / W).
  double y = 0.0;
  double x = 0.0;
  std::vector<double> descriptor;

  friend bool operator==(const CandidatePoint&, const CandidatePoint&) = default;
};

inline constexpr int kDefaultCandidateCap = 512;

/// The ceil(K / 100 * H * W) highest-scoring pixels with a positive score,
/// ties broken row-major, at most `cap` of them, in descending score order.
std::vector<CandidatePoint> candidate_set(const ProbMap& scores, double k_percent,
                                          int cap = kDefaultCandidateCap);
std::vector<CandidatePoint> candidate_set(const UncertaintyMap& map, double k_percent,
                                          int cap = kDefaultCandidateCap);

/// (row / H, col / W, 3x3 mean intensity per channel, probability, 1).
std::vector<double> pixel_descriptor(const Image& image, const ProbMap& prob, int row, int col);
void attach_descriptors(std::span<CandidatePoint> points, const Image& image, const ProbMap& prob);

struct CoverSet {
  std::vector<CandidatePoint> points;
  /// Sum of pairwise distances within the cover after each addition.
  std::vector<double> objective_trace;
};

double coord_distance(const CandidatePoint& a, const CandidatePoint& b);

/// Greedy spread: start from candidates[seed_index] and repeatedly add the
/// candidate with the largest summed distance to the chosen points. Ties go to
/// the lowest row-major pixel index. Throws on empty input, m < 1, or a bad
/// seed index.
CoverSet greedy_cover(std::span<const CandidatePoint> candidates, int m, std::size_t seed_index,
                      int image_width);

/// Index of the highest-scoring candidate (first one on ties).
std::size_t highest_score_index(std::span<const CandidatePoint> candidates);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Mean cosine similarity to the labeled descriptors; 0 when there are none.
double similarity_phi(std::span<const double> descriptor,
                      std::span<const std::vector<double>> labeled);

struct SelectedPoint {
  CandidatePoint point;
  double phi = 0.0;
};

/// The k cover points least similar to the labeled set, ties in cover order.
/// Returns the whole cover when k exceeds its size.
std::vector<SelectedPoint> select_batch(const CoverSet& cover,
                                        std::span<const std::vector<double>> labeled, int k);

}  // namespace atal
