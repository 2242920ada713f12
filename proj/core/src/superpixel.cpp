#include "atal/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "atal/pnm.hpp"

namespace atal {
namespace {

constexpr double kIntensityScale = 100.0;

struct Center {
  double row = 0.0;
  double col = 0.0;
  std::vector<double> color;
};

// 4-connected components of equal labels; returns component id per pixel.
std::vector<int> components(const std::vector<int>& labels, int h, int w, int& count) {
  std::vector<int> comp(labels.size(), -1);
  std::vector<int> stack;
  count = 0;
  for (int start = 0; start < h * w; ++start) {
    if (comp[start] >= 0) continue;
    comp[start] = count;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int r = p / w, c = p % w;
      const int nbrs[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
      for (const auto& nb : nbrs) {
        if (nb[0] < 0 || nb[1] < 0 || nb[0] >= h || nb[1] >= w) continue;
        const int q = nb[0] * w + nb[1];
        if (comp[q] < 0 && labels[q] == labels[p]) {
          comp[q] = count;
          stack.push_back(q);
        }
      }
    }
    ++count;
  }
  return comp;
}

int find_root(std::vector<int>& parent, int x) {
  while (parent[x] != x) x = parent[x] = parent[parent[x]];
  return x;
}

}  // namespace

SuperpixelPartition segment(const Image& image, const SlicParams& params) {
  const int h = image.height(), w = image.width(), nch = image.channels();
  const long long n = static_cast<long long>(h) * w;
  if (params.target_count < 1 || params.target_count > n) {
    throw InvalidInput("superpixel count must lie in [1, H*W]");
  }
  if (!(params.compactness > 0.0)) throw InvalidInput("compactness must be positive");
  if (params.iterations < 0) throw InvalidInput("iterations must be non-negative");

  const int s = params.target_count;
  const int ny = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(s) * h / w))));
  const int nx = std::max(1, s / ny);
  const double step = std::sqrt(static_cast<double>(n) / s);
  const double spatial = params.compactness / step;

  std::vector<Center> centers;
  for (int i = 0; i < ny; ++i) {
    for (int j = 0; j < nx; ++j) {
      Center ctr;
      ctr.row = (i + 0.5) * h / ny - 0.5;
      ctr.col = (j + 0.5) * w / nx - 0.5;
      const int r = std::clamp(static_cast<int>(std::lround(ctr.row)), 0, h - 1);
      const int c = std::clamp(static_cast<int>(std::lround(ctr.col)), 0, w - 1);
      for (int ch = 0; ch < nch; ++ch) ctr.color.push_back(image.at(r, c, ch));
      centers.push_back(std::move(ctr));
    }
  }

  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  auto distance2 = [&](const Center& ctr, int r, int c) {
    const double dy = (r - ctr.row) * spatial, dx = (c - ctr.col) * spatial;
    double d = dy * dy + dx * dx;
    for (int ch = 0; ch < nch; ++ch) {
      const double dv = kIntensityScale * (image.at(r, c, ch) - ctr.color[ch]);
      d += dv * dv;
    }
    return d;
  };
  const double window = 2.0 * step;
  for (int it = 0; it <= params.iterations; ++it) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int k = 0; k < static_cast<int>(centers.size()); ++k) {
          if (std::abs(r - centers[k].row) > window || std::abs(c - centers[k].col) > window) continue;
          const double d = distance2(centers[k], r, c);
          if (d < best_d) best_d = d, best = k;
        }
        if (best < 0) {
          for (int k = 0; k < static_cast<int>(centers.size()); ++k) {
            const double d = distance2(centers[k], r, c);
            if (d < best_d) best_d = d, best = k;
          }
        }
        assign[static_cast<std::size_t>(r) * w + c] = best;
      }
    }
    if (it == params.iterations) break;
    std::vector<Center> sums(centers.size(), Center{0.0, 0.0, std::vector<double>(nch, 0.0)});
    std::vector<int> counts(centers.size(), 0);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const int k = assign[static_cast<std::size_t>(r) * w + c];
        sums[k].row += r;
        sums[k].col += c;
        for (int ch = 0; ch < nch; ++ch) sums[k].color[ch] += image.at(r, c, ch);
        ++counts[k];
      }
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (counts[k] == 0) continue;
      centers[k].row = sums[k].row / counts[k];
      centers[k].col = sums[k].col / counts[k];
      for (int ch = 0; ch < nch; ++ch) centers[k].color[ch] = sums[k].color[ch] / counts[k];
    }
  }

  // Connectivity: the largest fragment of each cluster survives; every other
  // fragment joins its largest neighbouring group until each group holds a
  // surviving fragment.
  int ncomp = 0;
  const std::vector<int> comp = components(assign, h, w, ncomp);
  std::vector<int> size(ncomp, 0), cluster(ncomp, 0);
  for (long long p = 0; p < n; ++p) {
    ++size[comp[p]];
    cluster[comp[p]] = assign[p];
  }
  std::vector<int> main_of(centers.size(), -1);
  for (int k = 0; k < ncomp; ++k) {
    int& m = main_of[cluster[k]];
    if (m < 0 || size[k] > size[m]) m = k;
  }
  std::vector<std::vector<int>> adjacent(ncomp);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int a = comp[r * w + c];
      if (c + 1 < w && comp[r * w + c + 1] != a) {
        adjacent[a].push_back(comp[r * w + c + 1]);
        adjacent[comp[r * w + c + 1]].push_back(a);
      }
      if (r + 1 < h && comp[(r + 1) * w + c] != a) {
        adjacent[a].push_back(comp[(r + 1) * w + c]);
        adjacent[comp[(r + 1) * w + c]].push_back(a);
      }
    }
  }
  std::vector<int> parent(ncomp), group_size(size);
  std::vector<char> anchored(ncomp, 0);
  std::iota(parent.begin(), parent.end(), 0);
  for (int m : main_of) {
    if (m >= 0) anchored[m] = 1;
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (int k = 0; k < ncomp; ++k) {
      const int root = find_root(parent, k);
      if (anchored[root]) continue;
      int target = -1;
      for (int nb : adjacent[k]) {
        const int nr = find_root(parent, nb);
        if (nr == root) continue;
        if (target < 0 || anchored[nr] > anchored[target] ||
            (anchored[nr] == anchored[target] && group_size[nr] > group_size[target]) ||
            (anchored[nr] == anchored[target] && group_size[nr] == group_size[target] && nr < target)) {
          target = nr;
        }
      }
      if (target < 0) continue;
      parent[root] = target;
      group_size[target] += group_size[root];
      changed = true;
    }
  }

  SuperpixelPartition out;
  out.height = h;
  out.width = w;
  out.labels.assign(static_cast<std::size_t>(n), -1);
  std::vector<int> relabel(ncomp, -1);
  for (long long p = 0; p < n; ++p) {
    const int root = find_root(parent, comp[p]);
    if (relabel[root] < 0) relabel[root] = out.count++;
    out.labels[p] = relabel[root];
  }
  return out;
}

void check_partition(const SuperpixelPartition& partition, int max_count) {
  const int h = partition.height, w = partition.width;
  if (partition.labels.size() != static_cast<std::size_t>(h) * w) {
    throw InvalidInput("partition does not cover the image");
  }
  if (partition.count < 1 || partition.count > max_count) {
    throw InvalidInput("partition count " + std::to_string(partition.count) + " outside [1, " +
                       std::to_string(max_count) + "]");
  }
  std::vector<char> seen(partition.count, 0);
  for (int id : partition.labels) {
    if (id < 0 || id >= partition.count) throw InvalidInput("superpixel id out of range");
    seen[id] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw InvalidInput("unused superpixel id");
  int ncomp = 0;
  components(partition.labels, h, w, ncomp);
  if (ncomp != partition.count) throw InvalidInput("a superpixel is not 4-connected");
}

std::vector<PropagatedLabel> propagate(int row, int col, PixelClass cls,
                                       const SuperpixelPartition& partition) {
  if (row < 0 || col < 0 || row >= partition.height || col >= partition.width) {
    throw InvalidInput("propagation point out of bounds");
  }
  const int id = partition.at(row, col);
  std::vector<PropagatedLabel> out;
  for (int r = 0; r < partition.height; ++r) {
    for (int c = 0; c < partition.width; ++c) {
      if (partition.at(r, c) == id) out.push_back({r, c, cls, PixelCoord{row, col}});
    }
  }
  return out;
}

void apply_propagation(SparseLabels& labels, std::span<const PropagatedLabel> region, int round) {
  for (const auto& e : region) labels.add_propagated(e.row, e.col, e.cls, round, e.source_point);
}

void write_partition(const std::filesystem::path& path, const SuperpixelPartition& partition) {
  write_u16_pgm(path, partition.height, partition.width, partition.labels);
}

std::vector<PixelCoord> superpixel_outline(const SuperpixelPartition& partition, int id) {
  std::vector<PixelCoord> out;
  const int h = partition.height, w = partition.width;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (partition.at(r, c) != id) continue;
      const bool edge = r == 0 || c == 0 || r == h - 1 || c == w - 1 || partition.at(r - 1, c) != id ||
                        partition.at(r + 1, c) != id || partition.at(r, c - 1) != id ||
                        partition.at(r, c + 1) != id;
      if (edge) out.push_back({r, c});
    }
  }
  return out;
}

}  // namespace atal
