#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "atal/image.hpp"
#include "atal/labels.hpp"
#include "atal/rng.hpp"

namespace atal::test {

inline Image random_image(int h, int w, int channels, std::uint64_t seed) {
  SplitMix64 rng(derive_seed(seed, 0x1A6EULL));
  Image img(h, w, channels);
  for (double& v : img.values()) v = rng.uniform();
  return img;
}

inline ProbMap random_prob(int h, int w, std::uint64_t seed) {
  SplitMix64 rng(derive_seed(seed, 0x9206ULL));
  ProbMap p(h, w);
  for (double& v : p.values()) v = rng.uniform(0.001, 0.999);
  return p;
}

/// `n` distinct pixels with random 0/1 targets.
inline std::vector<PixelTarget> random_targets(int h, int w, int n, std::uint64_t seed) {
  SplitMix64 rng(derive_seed(seed, 0x7A26ULL));
  std::vector<bool> used(static_cast<std::size_t>(h) * w, false);
  std::vector<PixelTarget> out;
  while (static_cast<int>(out.size()) < n) {
    const std::size_t i = rng.below(used.size());
    if (used[i]) continue;
    used[i] = true;
    out.push_back({i, rng.below(2) ? 1.0 : 0.0});
  }
  return out;
}

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("atal_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace atal::test
