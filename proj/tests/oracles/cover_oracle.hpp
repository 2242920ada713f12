#pragma once

// Quadratic-scan greedy cover written from the algorithm statement alone:
// each round recomputes, for every unused candidate, its summed Euclidean
// distance (normalised coordinates) to the chosen points and takes the
// largest, lowest row-major pixel first on ties.

#include <cmath>
#include <cstddef>
#include <vector>

namespace atal::oracle {

struct CoverPoint {
  int row = 0;
  int col = 0;
  double y = 0.0;
  double x = 0.0;
};

inline std::vector<std::size_t> greedy_cover_scan(const std::vector<CoverPoint>& pts, int m, std::size_t seed,
                                                  int width) {
  std::vector<std::size_t> chosen{seed};
  std::vector<bool> taken(pts.size(), false);
  taken[seed] = true;
  while (chosen.size() < static_cast<std::size_t>(m) && chosen.size() < pts.size()) {
    std::size_t best = pts.size();
    double best_sum = -1.0;
    for (std::size_t u = 0; u < pts.size(); ++u) {
      if (taken[u]) continue;
      double s = 0.0;
      for (std::size_t v : chosen) s += std::hypot(pts[u].y - pts[v].y, pts[u].x - pts[v].x);
      const long long key = static_cast<long long>(pts[u].row) * width + pts[u].col;
      const long long best_key =
          best == pts.size() ? 0 : static_cast<long long>(pts[best].row) * width + pts[best].col;
      if (best == pts.size() || s > best_sum || (s == best_sum && key < best_key)) {
        best = u;
        best_sum = s;
      }
    }
    chosen.push_back(best);
    taken[best] = true;
  }
  return chosen;
}

/// Sum of pairwise distances within a subset.
inline double spread(const std::vector<CoverPoint>& pts, const std::vector<std::size_t>& subset) {
  double s = 0.0;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    for (std::size_t j = i + 1; j < subset.size(); ++j) {
      s += std::hypot(pts[subset[i]].y - pts[subset[j]].y, pts[subset[i]].x - pts[subset[j]].x);
    }
  }
  return s;
}

}  // namespace atal::oracle
