#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "atal/image.hpp"

namespace atal {

/// Malformed or truncated PGM/PPM data; offset() is the byte position where
/// parsing failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Binary P5 (1 channel) / P6 (3 channels), maxval 65535, big-endian samples.
/// Values are quantized as round(v * 65535) after clamping to [0, 1].
std::string encode_pnm(const Image& image);
Image decode_pnm(std::span<const unsigned char> bytes);

void write_image(const std::filesystem::path& path, const Image& image);
Image read_image(const std::filesystem::path& path);

/// Masks are P5 with 0 / 65535 samples; any non-zero sample reads back as 1.
void write_mask(const std::filesystem::path& path, const Mask& mask);
Mask read_mask(const std::filesystem::path& path);

/// Probability or score maps as 16-bit P5.
void write_prob_map(const std::filesystem::path& path, const ProbMap& map);

/// Raw 16-bit samples (region tags, superpixel ids), clamped to [0, 65535].
void write_u16_pgm(const std::filesystem::path& path, int height, int width,
                   std::span<const int> samples);

/// Raw 8-bit samples, clamped to [0, 255].
void write_u8_pgm(const std::filesystem::path& path, int height, int width,
                  std::span<const int> samples);

/// 8-bit P6 encoding, used for annotation previews.
std::string encode_ppm8(const Image& image);

}  // namespace atal
