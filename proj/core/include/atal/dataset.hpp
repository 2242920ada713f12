#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "atal/image.hpp"

namespace atal {

/// Knobs of the synthetic salient-object generator. Radii are fractions of
/// the image side.
struct GeneratorParams {
  int channels = 3;
  int min_blobs = 1;
  int max_blobs = 3;
  double min_radius = 0.12;
  double max_radius = 0.30;
  /// Chance that an image receives a smooth distractor of blob-like brightness.
  double distractor_rate = 0.2;
  double min_salient_fraction = 0.05;
  double max_salient_fraction = 0.5;

  friend bool operator==(const GeneratorParams&, const GeneratorParams&) = default;
};

struct Sample {
  std::string id;
  Image image;
  Mask mask;
};

/// Throws InvalidInput when the parameters cannot produce a valid image of
/// the given size (e.g. a blob diameter larger than the image).
void validate_generator(int size, const GeneratorParams& params);

/// One image/mask pair, seeded by derive_seed(seed, index). Blobs are
/// finely-textured ellipses or star-convex polygons over a smooth noise
/// background; distractors share the blob brightness but not the texture.
/// A mask pixel is 1 iff its center lies inside a blob.
Sample generate_sample(std::uint64_t seed, int index, int size, const GeneratorParams& params);

/// `count` samples with ids "<prefix>_0000", ... Throws on count < 1 or size < 16.
std::vector<Sample> generate_samples(std::uint64_t seed, int count, int size,
                                     const GeneratorParams& params, const std::string& prefix = "img");

struct ManifestEntry {
  std::string image_id;
  std::filesystem::path image_path;
  std::filesystem::path mask_path;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::string split = "train";
  std::uint64_t generator_seed = 0;
  int size = 0;
  GeneratorParams generator_params;
  std::vector<ManifestEntry> entries;
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Generates a split into `dir` (PPM/PGM files) and writes `dir/<split>.tsv`.
DatasetManifest generate_synthetic(const std::filesystem::path& dir, const std::string& split,
                                   std::uint64_t seed, int count, int size,
                                   const GeneratorParams& params);

/// Text manifest: '#'-prefixed key=value metadata lines, then one
/// `image_id<TAB>image_path<TAB>mask_path` line per image. Relative paths
/// resolve against the manifest's directory.
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

std::vector<Sample> load_samples(const DatasetManifest& manifest);

double salient_fraction(const Mask& mask);

}  // namespace atal
