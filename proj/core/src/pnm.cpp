#include "atal/pnm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

namespace atal {
namespace {

std::uint16_t quantize(double v) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
}

std::string header(char kind, int width, int height, int maxval) {
  return std::string("P") + kind + "\n" + std::to_string(width) + " " + std::to_string(height) +
         "\n" + std::to_string(maxval) + "\n";
}

void append_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v & 0xFF));
}

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  long number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000) throw ParseError(std::string("header ") + what + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw ParseError(std::string("expected header ") + what, start);
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

std::string encode_pnm(const Image& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw InvalidInput("PNM images need 1 or 3 channels");
  }
  std::string out = header(image.channels() == 1 ? '5' : '6', image.width(), image.height(), 65535);
  out.reserve(out.size() + image.size() * 2);
  for (double v : image.values()) append_u16(out, quantize(v));
  return out;
}

Image decode_pnm(std::span<const unsigned char> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw ParseError("expected P5 or P6 magic", 0);
  }
  const int channels = bytes[1] == '5' ? 1 : 3;
  HeaderReader hr(bytes);
  hr.advance(2);
  const long width = hr.number("width");
  const long height = hr.number("height");
  const std::size_t maxval_at = hr.pos();
  const long maxval = hr.number("maxval");
  if (width < 1 || height < 1) throw ParseError("image dimensions must be positive", maxval_at);
  if (maxval < 1 || maxval > 65535) throw ParseError("maxval out of range", maxval_at);
  if (hr.pos() >= bytes.size() || !std::isspace(bytes[hr.pos()])) {
    throw ParseError("missing whitespace after maxval", hr.pos());
  }
  hr.advance(1);
  const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  const std::size_t payload = hr.pos();
  if (bytes.size() < payload + count * sample_bytes) {
    throw ParseError("truncated payload: expected " + std::to_string(count * sample_bytes) +
                         " bytes, found " + std::to_string(bytes.size() - payload),
                     bytes.size());
  }
  Image img(static_cast<int>(height), static_cast<int>(width), channels);
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < count; ++i) {
    unsigned v = bytes[payload + i * sample_bytes];
    if (sample_bytes == 2) v = (v << 8) | bytes[payload + i * 2 + 1];
    if (v > static_cast<unsigned>(maxval)) {
      throw ParseError("sample exceeds maxval", payload + i * sample_bytes);
    }
    img[i] = v * scale;
  }
  return img;
}

void write_image(const std::filesystem::path& path, const Image& image) {
  dump(path, encode_pnm(image));
}

Image read_image(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  return decode_pnm(bytes);
}

void write_mask(const std::filesystem::path& path, const Mask& mask) {
  std::string out = header('5', mask.width(), mask.height(), 65535);
  for (auto v : mask.values()) append_u16(out, v ? 65535 : 0);
  dump(path, out);
}

Mask read_mask(const std::filesystem::path& path) {
  const Image img = read_image(path);
  if (img.channels() != 1) throw InvalidInput("mask must be single-channel: " + path.string());
  Mask mask(img.height(), img.width());
  for (std::size_t i = 0; i < img.size(); ++i) mask[i] = img[i] > 0.0 ? 1 : 0;
  return mask;
}

void write_prob_map(const std::filesystem::path& path, const ProbMap& map) {
  std::string out = header('5', map.width(), map.height(), 65535);
  for (double v : map.values()) append_u16(out, quantize(v));
  dump(path, out);
}

void write_u16_pgm(const std::filesystem::path& path, int height, int width,
                   std::span<const int> samples) {
  if (samples.size() != static_cast<std::size_t>(height) * width) {
    throw InvalidInput("sample count does not match image extent");
  }
  std::string out = header('5', width, height, 65535);
  for (int v : samples) append_u16(out, static_cast<std::uint16_t>(std::clamp(v, 0, 65535)));
  dump(path, out);
}

void write_u8_pgm(const std::filesystem::path& path, int height, int width,
                  std::span<const int> samples) {
  if (samples.size() != static_cast<std::size_t>(height) * width) {
    throw InvalidInput("sample count does not match image extent");
  }
  std::string out = header('5', width, height, 255);
  for (int v : samples) out.push_back(static_cast<char>(std::clamp(v, 0, 255)));
  dump(path, out);
}

std::string encode_ppm8(const Image& image) {
  std::string out = header('6', image.width(), image.height(), 255);
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        const double v = image.at(r, c, image.channels() == 3 ? ch : 0);
        out.push_back(static_cast<char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
      }
    }
  }
  return out;
}

}  // namespace atal
