#include "atal/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "atal/pnm.hpp"
#include "atal/rng.hpp"

namespace atal {
namespace {

struct Shape {
  bool ellipse = true;
  double cy = 0, cx = 0;
  double ry = 1, rx = 1, cos_a = 1, sin_a = 0;
  std::vector<std::array<double, 2>> polygon;  // (y, x) vertices, counter-clockwise

  bool contains(double y, double x) const {
    if (ellipse) {
      const double dy = y - cy;
      const double dx = x - cx;
      const double u = (dy * cos_a + dx * sin_a) / ry;
      const double v = (-dy * sin_a + dx * cos_a) / rx;
      return u * u + v * v <= 1.0;
    }
    bool inside = false;
    for (std::size_t i = 0, j = polygon.size() - 1; i < polygon.size(); j = i++) {
      const auto& a = polygon[i];
      const auto& b = polygon[j];
      if ((a[0] > y) != (b[0] > y)) {
        const double xc = a[1] + (y - a[0]) * (b[1] - a[1]) / (b[0] - a[0]);
        if (x < xc) inside = !inside;
      }
    }
    return inside;
  }
};

Shape random_shape(SplitMix64& rng, int size, const GeneratorParams& p) {
  Shape s;
  const double r_lo = p.min_radius * size;
  const double r_hi = p.max_radius * size;
  s.ellipse = rng.uniform() < 0.5;
  const double r_major = rng.uniform(r_lo, r_hi);
  s.cy = rng.uniform(r_major * 0.6, size - r_major * 0.6);
  s.cx = rng.uniform(r_major * 0.6, size - r_major * 0.6);
  if (s.ellipse) {
    s.ry = r_major;
    s.rx = rng.uniform(std::max(r_lo, 0.5 * r_major), r_major);
    const double angle = rng.uniform(0.0, std::numbers::pi);
    s.cos_a = std::cos(angle);
    s.sin_a = std::sin(angle);
  } else {
    const int n = 5 + static_cast<int>(rng.below(3));
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (int k = 0; k < n; ++k) {
      const double t = phase + 2.0 * std::numbers::pi * (k + rng.uniform(-0.2, 0.2)) / n;
      const double r = r_major * rng.uniform(0.7, 1.0);
      s.polygon.push_back({s.cy + r * std::sin(t), s.cx + r * std::cos(t)});
    }
  }
  return s;
}

// Bilinear interpolation of a coarse grid of uniform values: low-frequency noise.
std::vector<double> smooth_field(SplitMix64& rng, int size, double amplitude) {
  constexpr int knots = 5;
  std::array<double, knots * knots> grid{};
  for (double& g : grid) g = rng.uniform(-amplitude, amplitude);
  std::vector<double> field(static_cast<std::size_t>(size) * size);
  const double step = static_cast<double>(size) / (knots - 1);
  for (int r = 0; r < size; ++r) {
    const double gy = std::min((r + 0.5) / step, knots - 1.000001);
    const int y0 = static_cast<int>(gy);
    const double fy = gy - y0;
    for (int c = 0; c < size; ++c) {
      const double gx = std::min((c + 0.5) / step, knots - 1.000001);
      const int x0 = static_cast<int>(gx);
      const double fx = gx - x0;
      const double top = grid[y0 * knots + x0] * (1 - fx) + grid[y0 * knots + x0 + 1] * fx;
      const double bot = grid[(y0 + 1) * knots + x0] * (1 - fx) + grid[(y0 + 1) * knots + x0 + 1] * fx;
      field[static_cast<std::size_t>(r) * size + c] = top * (1 - fy) + bot * fy;
    }
  }
  return field;
}

std::string sample_id(const std::string& prefix, int index) {
  std::ostringstream os;
  os << prefix << '_';
  os.width(4);
  os.fill('0');
  os << index;
  return os.str();
}

}  // namespace

void validate_generator(int size, const GeneratorParams& p) {
  if (size < 16) throw InvalidInput("synthetic images must be at least 16x16");
  if (p.channels != 1 && p.channels != 3) throw InvalidInput("channels must be 1 or 3");
  if (p.min_blobs < 1 || p.max_blobs < p.min_blobs) throw InvalidInput("invalid blob count range");
  if (!(p.min_radius > 0.0) || p.max_radius < p.min_radius) {
    throw InvalidInput("invalid blob radius range");
  }
  if (2.0 * p.max_radius > 1.0) throw InvalidInput("blob diameter exceeds the image");
  if (p.min_radius * size < 1.0) throw InvalidInput("blob radius below one pixel");
  if (p.distractor_rate < 0.0 || p.distractor_rate > 1.0) {
    throw InvalidInput("distractor rate must lie in [0, 1]");
  }
  if (p.min_salient_fraction < 0.0 || p.max_salient_fraction > 1.0 ||
      p.min_salient_fraction >= p.max_salient_fraction) {
    throw InvalidInput("invalid salient fraction range");
  }
}

double salient_fraction(const Mask& mask) {
  if (mask.empty()) return 0.0;
  std::size_t on = 0;
  for (auto v : mask.values()) on += v != 0;
  return static_cast<double>(on) / static_cast<double>(mask.size());
}

Sample generate_sample(std::uint64_t seed, int index, int size, const GeneratorParams& p) {
  validate_generator(size, p);
  SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(index)));
  Sample out;
  out.id = sample_id("img", index);

  constexpr int kMaxAttempts = 256;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const int n_blobs = p.min_blobs + static_cast<int>(rng.below(p.max_blobs - p.min_blobs + 1));
    std::vector<Shape> blobs;
    for (int b = 0; b < n_blobs; ++b) blobs.push_back(random_shape(rng, size, p));
    Mask mask(size, size);
    for (int r = 0; r < size; ++r) {
      for (int c = 0; c < size; ++c) {
        for (const auto& s : blobs) {
          if (s.contains(r + 0.5, c + 0.5)) {
            mask.at(r, c) = 1;
            break;
          }
        }
      }
    }
    const double frac = salient_fraction(mask);
    if (frac < p.min_salient_fraction || frac > p.max_salient_fraction) continue;

    std::vector<Shape> distractors;
    if (rng.uniform() < p.distractor_rate) distractors.push_back(random_shape(rng, size, p));

    std::array<double, 3> base{};
    std::array<double, 3> fg{};
    std::array<double, 3> dis{};
    const double offset = rng.uniform(0.18, 0.32);
    for (int ch = 0; ch < 3; ++ch) {
      base[ch] = rng.uniform(0.2, 0.45);
      fg[ch] = std::min(0.9, base[ch] + offset + rng.uniform(-0.06, 0.06));
      dis[ch] = std::min(0.9, base[ch] + offset + rng.uniform(-0.08, 0.08));
    }
    const auto field = smooth_field(rng, size, 0.08);

    Image img(size, size, p.channels);
    for (int r = 0; r < size; ++r) {
      for (int c = 0; c < size; ++c) {
        const std::size_t pix = static_cast<std::size_t>(r) * size + c;
        const double smooth = field[pix];
        const bool in_blob = mask[pix] != 0;
        bool in_distractor = false;
        if (!in_blob) {
          for (const auto& d : distractors) in_distractor = in_distractor || d.contains(r + 0.5, c + 0.5);
        }
        // Blobs carry strong per-pixel grain; background and distractors are smooth.
        const double grain = in_blob ? rng.uniform(-0.22, 0.22) : rng.uniform(-0.02, 0.02);
        for (int ch = 0; ch < p.channels; ++ch) {
          const int src = p.channels == 3 ? ch : 1;
          double v;
          if (in_blob) {
            v = fg[src] + 0.4 * smooth + grain;
          } else if (in_distractor) {
            v = dis[src] + smooth + grain;
          } else {
            v = base[src] + smooth + grain;
          }
          img.at(r, c, ch) = std::clamp(v, 0.0, 1.0);
        }
      }
    }
    out.image = std::move(img);
    out.mask = std::move(mask);
    return out;
  }
  throw InvalidInput("generator could not meet the salient fraction bounds");
}

std::vector<Sample> generate_samples(std::uint64_t seed, int count, int size,
                                     const GeneratorParams& params, const std::string& prefix) {
  if (count < 1) throw InvalidInput("count must be at least 1");
  validate_generator(size, params);
  std::vector<Sample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    out.push_back(generate_sample(seed, i, size, params));
    out.back().id = sample_id(prefix, i);
  }
  return out;
}

DatasetManifest generate_synthetic(const std::filesystem::path& dir, const std::string& split,
                                   std::uint64_t seed, int count, int size,
                                   const GeneratorParams& params) {
  auto samples = generate_samples(seed, count, size, params, split);
  std::filesystem::create_directories(dir);
  DatasetManifest m;
  m.split = split;
  m.generator_seed = seed;
  m.size = size;
  m.generator_params = params;
  for (const auto& s : samples) {
    ManifestEntry e{s.id, s.id + (params.channels == 3 ? ".ppm" : ".pgm"), s.id + "_mask.pgm"};
    write_image(dir / e.image_path, s.image);
    write_mask(dir / e.mask_path, s.mask);
    m.entries.push_back(std::move(e));
  }
  write_manifest(dir / (split + ".tsv"), m);
  for (auto& e : m.entries) {
    e.image_path = dir / e.image_path;
    e.mask_path = dir / e.mask_path;
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write manifest " + path.string());
  const auto& g = m.generator_params;
  os.precision(17);
  os << "# split=" << m.split << "\n"
     << "# generator_seed=" << m.generator_seed << "\n"
     << "# size=" << m.size << "\n"
     << "# channels=" << g.channels << "\n"
     << "# blobs=" << g.min_blobs << "," << g.max_blobs << "\n"
     << "# radius=" << g.min_radius << "," << g.max_radius << "\n"
     << "# distractor_rate=" << g.distractor_rate << "\n"
     << "# salient_fraction=" << g.min_salient_fraction << "," << g.max_salient_fraction << "\n";
  const auto base = path.parent_path();
  for (const auto& e : m.entries) {
    auto rel = [&](const std::filesystem::path& p) {
      return p.is_absolute() ? p.lexically_relative(std::filesystem::absolute(base)) : p;
    };
    os << e.image_id << '\t' << rel(e.image_path).generic_string() << '\t'
       << rel(e.mask_path).generic_string() << '\n';
  }
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open manifest " + path.string());
  DatasetManifest m;
  std::set<std::string> ids;
  std::string line;
  const auto base = path.parent_path();
  auto pair_of = [](const std::string& v, auto& a, auto& b) {
    std::istringstream ss(v);
    char comma;
    ss >> a >> comma >> b;
  };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string val = line.substr(eq + 1);
      auto& g = m.generator_params;
      if (key == "split") m.split = val;
      else if (key == "generator_seed") m.generator_seed = std::stoull(val);
      else if (key == "size") m.size = std::stoi(val);
      else if (key == "channels") g.channels = std::stoi(val);
      else if (key == "blobs") pair_of(val, g.min_blobs, g.max_blobs);
      else if (key == "radius") pair_of(val, g.min_radius, g.max_radius);
      else if (key == "distractor_rate") g.distractor_rate = std::stod(val);
      else if (key == "salient_fraction") pair_of(val, g.min_salient_fraction, g.max_salient_fraction);
      continue;
    }
    std::istringstream ss(line);
    ManifestEntry e;
    std::string img, mask;
    if (!std::getline(ss, e.image_id, '\t') || !std::getline(ss, img, '\t') ||
        !std::getline(ss, mask)) {
      throw InvalidInput("malformed manifest line: " + line);
    }
    if (!ids.insert(e.image_id).second) throw InvalidInput("duplicate image id " + e.image_id);
    e.image_path = std::filesystem::path(img).is_absolute() ? std::filesystem::path(img) : base / img;
    e.mask_path = std::filesystem::path(mask).is_absolute() ? std::filesystem::path(mask) : base / mask;
    m.entries.push_back(std::move(e));
  }
  return m;
}

std::vector<Sample> load_samples(const DatasetManifest& manifest) {
  std::vector<Sample> out;
  out.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    Sample s{e.image_id, read_image(e.image_path), read_mask(e.mask_path)};
    require_same_extent(s.image, s.mask, "load_samples");
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace atal
