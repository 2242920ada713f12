#include "atal/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace atal {

std::vector<CandidatePoint> candidate_set(const ProbMap& scores, double k_percent, int cap) {
  if (!(k_percent > 0.0 && k_percent <= 100.0)) throw InvalidInput("K must lie in (0, 100]");
  if (cap < 0) throw InvalidInput("candidate cap must be non-negative");
  const std::size_t n = scores.pixel_count();
  const auto quota = static_cast<std::size_t>(std::ceil(k_percent / 100.0 * static_cast<double>(n) - 1e-9));
  const std::size_t limit = std::min(quota, static_cast<std::size_t>(cap));

  std::vector<std::size_t> positive;
  for (std::size_t i = 0; i < n; ++i) {
    if (scores[i] > 0.0) positive.push_back(i);
  }
  const std::size_t take = std::min(limit, positive.size());
  std::partial_sort(positive.begin(), positive.begin() + static_cast<std::ptrdiff_t>(take), positive.end(),
                    [&](std::size_t a, std::size_t b) {
                      return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
                    });
  std::vector<CandidatePoint> out;
  out.reserve(take);
  const int w = scores.width();
  for (std::size_t j = 0; j < take; ++j) {
    CandidatePoint p;
    p.row = static_cast<int>(positive[j] / w);
    p.col = static_cast<int>(positive[j] % w);
    p.score = scores[positive[j]];
    p.y = static_cast<double>(p.row) / scores.height();
    p.x = static_cast<double>(p.col) / w;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<CandidatePoint> candidate_set(const UncertaintyMap& map, double k_percent, int cap) {
  return candidate_set(map.scores, k_percent, cap);
}

std::vector<double> pixel_descriptor(const Image& image, const ProbMap& prob, int row, int col) {
  require_same_extent(image, prob, "pixel_descriptor");
  if (!image.contains(row, col)) throw InvalidInput("descriptor pixel out of bounds");
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(image.channels()) + 4);
  d.push_back(static_cast<double>(row) / image.height());
  d.push_back(static_cast<double>(col) / image.width());
  for (int ch = 0; ch < image.channels(); ++ch) {
    double sum = 0.0;
    int n = 0;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (!image.contains(row + dr, col + dc)) continue;
        sum += image.at(row + dr, col + dc, ch);
        ++n;
      }
    }
    d.push_back(sum / n);
  }
  d.push_back(prob.at(row, col));
  d.push_back(1.0);
  return d;
}

void attach_descriptors(std::span<CandidatePoint> points, const Image& image, const ProbMap& prob) {
  for (auto& p : points) p.descriptor = pixel_descriptor(image, prob, p.row, p.col);
}

double coord_distance(const CandidatePoint& a, const CandidatePoint& b) {
  return std::hypot(a.y - b.y, a.x - b.x);
}

std::size_t highest_score_index(std::span<const CandidatePoint> candidates) {
  if (candidates.empty()) throw InvalidInput("no candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].score > candidates[best].score) best = i;
  }
  return best;
}

CoverSet greedy_cover(std::span<const CandidatePoint> candidates, int m, std::size_t seed_index,
                      int image_width) {
  if (candidates.empty()) throw InvalidInput("greedy cover needs a non-empty candidate set");
  if (m < 1) throw InvalidInput("cover size must be at least 1");
  if (seed_index >= candidates.size()) throw InvalidInput("cover seed index out of range");
  const std::size_t n = candidates.size();
  auto pixel_index = [&](std::size_t i) {
    return static_cast<long long>(candidates[i].row) * image_width + candidates[i].col;
  };

  CoverSet cover;
  std::vector<char> used(n, 0);
  std::vector<double> sum_to_cover(n, 0.0);
  double objective = 0.0;
  auto add = [&](std::size_t i) {
    used[i] = 1;
    objective += sum_to_cover[i];
    cover.points.push_back(candidates[i]);
    cover.objective_trace.push_back(objective);
    for (std::size_t j = 0; j < n; ++j) {
      if (!used[j]) sum_to_cover[j] += coord_distance(candidates[j], candidates[i]);
    }
  };
  add(seed_index);
  const std::size_t target = std::min(static_cast<std::size_t>(m), n);
  while (cover.points.size() < target) {
    std::size_t best = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      if (best == n || sum_to_cover[j] > sum_to_cover[best] ||
          (sum_to_cover[j] == sum_to_cover[best] && pixel_index(j) < pixel_index(best))) {
        best = j;
      }
    }
    add(best);
  }
  return cover;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("descriptor length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw InvalidInput("cosine similarity of a zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double similarity_phi(std::span<const double> descriptor,
                      std::span<const std::vector<double>> labeled) {
  if (labeled.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& d : labeled) sum += cosine_similarity(descriptor, d);
  return sum / static_cast<double>(labeled.size());
}

std::vector<SelectedPoint> select_batch(const CoverSet& cover,
                                        std::span<const std::vector<double>> labeled, int k) {
  if (k < 0) throw InvalidInput("batch size must be non-negative");
  std::vector<SelectedPoint> scored;
  scored.reserve(cover.points.size());
  for (const auto& p : cover.points) scored.push_back({p, similarity_phi(p.descriptor, labeled)});
  const std::size_t take = std::min(static_cast<std::size_t>(k), scored.size());
  std::stable_sort(scored.begin(), scored.end(),
                   [](const SelectedPoint& a, const SelectedPoint& b) { return a.phi < b.phi; });
  scored.resize(take);
  return scored;
}

}  // namespace atal
