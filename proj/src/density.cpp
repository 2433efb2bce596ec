#include "binpick/density.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "binpick/error.hpp"
#include "binpick/random.hpp"

namespace binpick {

void validate_noise(const EstimatorNoise& n) {
  if (!(n.dot_jitter_sigma >= 0.0) || !(n.pixel_noise_sigma >= 0.0) || !(n.dropout_prob >= 0.0 && n.dropout_prob <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "estimator noise parameters out of range");
}

DotMap make_dot_map(const RasterFrame& frame) {
  struct Acc {
    double rows = 0.0, cols = 0.0;
    std::size_t n = 0;
  };
  std::map<std::int32_t, Acc> acc;
  for (int r = 0; r < frame.height; ++r)
    for (int c = 0; c < frame.width; ++c) {
      const std::int32_t id = frame.instance_mask.at(r, c);
      if (id == 0) continue;
      Acc& a = acc[id];
      a.rows += r;
      a.cols += c;
      ++a.n;
    }
  DotMap d{frame.width, frame.height, {}, {}};
  for (const auto& [id, a] : acc) {
    const double n = static_cast<double>(a.n);
    d.dots.push_back({static_cast<int>(std::lround(a.rows / n)), static_cast<int>(std::lround(a.cols / n))});
    d.ids.push_back(id);
  }
  return d;
}

DensityMap dot_to_density(const DotMap& dots, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "kernel sigma must be positive");
  DensityMap out(dots.width, dots.height, 0.0);
  const int reach = static_cast<int>(std::ceil(3.0 * sigma));
  const double cutoff2 = 9.0 * sigma * sigma;
  const int side = 2 * reach + 1;
  std::vector<double> kernel(static_cast<std::size_t>(side) * side, 0.0);
  for (int dr = -reach; dr <= reach; ++dr)
    for (int dc = -reach; dc <= reach; ++dc) {
      const double d2 = static_cast<double>(dr * dr + dc * dc);
      if (d2 <= cutoff2) kernel[static_cast<std::size_t>(dr + reach) * side + (dc + reach)] = std::exp(-d2 / (2.0 * sigma * sigma));
    }

  for (const Pixel& p : dots.dots) {
    if (!out.in_bounds(p.row, p.col)) throw Error(ErrorCode::InvalidArgument, "dot outside the map");
    const int r0 = std::max(0, p.row - reach), r1 = std::min(out.height - 1, p.row + reach);
    const int c0 = std::max(0, p.col - reach), c1 = std::min(out.width - 1, p.col + reach);
    double mass = 0.0;
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c) mass += kernel[static_cast<std::size_t>(r - p.row + reach) * side + (c - p.col + reach)];
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c)
        out.at(r, c) += kernel[static_cast<std::size_t>(r - p.row + reach) * side + (c - p.col + reach)] / mass;
  }
  return out;
}

DensityMap estimate_density(const RasterFrame& frame, const EstimatorNoise& noise, double sigma, std::uint64_t seed) {
  validate_noise(noise);
  DotMap dots = make_dot_map(frame);
  Rng rng(seed);
  DotMap perturbed{dots.width, dots.height, {}, {}};
  for (std::size_t i = 0; i < dots.dots.size(); ++i) {
    if (noise.dropout_prob > 0.0 && rng.bernoulli(noise.dropout_prob)) continue;
    Pixel p = dots.dots[i];
    if (noise.dot_jitter_sigma > 0.0) {
      p.row = std::clamp(static_cast<int>(std::lround(p.row + rng.normal(0.0, noise.dot_jitter_sigma))), 0, dots.height - 1);
      p.col = std::clamp(static_cast<int>(std::lround(p.col + rng.normal(0.0, noise.dot_jitter_sigma))), 0, dots.width - 1);
    }
    perturbed.dots.push_back(p);
    perturbed.ids.push_back(dots.ids[i]);
  }
  DensityMap out = dot_to_density(perturbed, sigma);
  if (noise.pixel_noise_sigma > 0.0)
    for (double& v : out.data) v = std::max(0.0, v + rng.normal(0.0, noise.pixel_noise_sigma));
  return out;
}

double mse(const DensityMap& p, const DensityMap& q) {
  if (p.width != q.width || p.height != q.height)
    throw Error(ErrorCode::DimensionMismatch, "density maps differ in size");
  if (p.size() == 0) throw Error(ErrorCode::DimensionMismatch, "empty density maps");
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double d = p.data[k] - q.data[k];
    sum += d * d;
  }
  return sum / (static_cast<double>(p.height) * static_cast<double>(p.width));
}

double calibrated_mse(const DensityMap& predicted, const DensityMap& truth) {
  return mse(predicted, truth) * kCalibrationDensityScale * kCalibrationDensityScale;
}

double total_mass(const DensityMap& map) {
  double s = 0.0;
  for (double v : map.data) s += v;
  return s;
}

Vec2 select_rough_grasp(const DensityMap& density, const RasterFrame& frame, double capture_diameter_mm, const Rect& bin) {
  if (density.width != frame.width || density.height != frame.height)
    throw Error(ErrorCode::DimensionMismatch, "density map and frame differ in size");
  if (std::none_of(density.data.begin(), density.data.end(), [](double v) { return v > 0.0; }))
    throw Error(ErrorCode::EmptyBin, "density map is zero everywhere");

  const int w = density.width, h = density.height;
  const int win = std::max(1, static_cast<int>(std::lround(capture_diameter_mm / frame.mm_per_px)));
  const int lo = (win - 1) / 2, hi = win - 1 - lo;

  // Summed-area table with a zero border.
  std::vector<double> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
  auto S = [&](int r, int c) -> double& { return sat[static_cast<std::size_t>(r) * (w + 1) + c]; };
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) S(r + 1, c + 1) = density.at(r, c) + S(r, c + 1) + S(r + 1, c) - S(r, c);

  double best = -1.0;
  int br = 0, bc = 0;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const int r0 = std::max(0, r - lo), r1 = std::min(h, r + hi + 1);
      const int c0 = std::max(0, c - lo), c1 = std::min(w, c + hi + 1);
      const double s = S(r1, c1) - S(r0, c1) - S(r1, c0) + S(r0, c0);
      if (s > best) {
        best = s;
        br = r;
        bc = c;
      }
    }
  Vec2 p = frame.to_world({static_cast<double>(bc), static_cast<double>(br)});
  p.x = std::clamp(p.x, bin.min.x, bin.max.x);
  p.y = std::clamp(p.y, bin.min.y, bin.max.y);
  return p;
}

// --- export ---------------------------------------------------------------------

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

void write_p2(const std::filesystem::path& path, int w, int h, int maxval, const std::vector<long>& values) {
  std::ofstream out = open_out(path);
  out << "P2\n" << w << ' ' << h << '\n' << maxval << '\n';
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) out << (c ? " " : "") << values[static_cast<std::size_t>(r) * w + c];
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace

void write_density_pgm(const DensityMap& map, const std::filesystem::path& path) {
  std::vector<long> v(map.size());
  for (std::size_t k = 0; k < map.size(); ++k)
    v[k] = std::clamp(std::lround(map.data[k] * kPgmScale), 0L, 65535L);
  write_p2(path, map.width, map.height, 65535, v);
}

void write_dot_pgm(const DotMap& dots, const std::filesystem::path& path) {
  std::vector<long> v(static_cast<std::size_t>(dots.width) * dots.height, 0);
  for (const Pixel& p : dots.dots) v[static_cast<std::size_t>(p.row) * dots.width + p.col] = 1;
  write_p2(path, dots.width, dots.height, 1, v);
}

void write_mask_pgm(const LabelImage& mask, const std::filesystem::path& path) {
  std::vector<std::int32_t> ids;
  for (std::int32_t v : mask.data)
    if (v > 0) ids.push_back(v);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<long> v(mask.size(), 0);
  for (std::size_t k = 0; k < mask.size(); ++k)
    if (mask.data[k] > 0) v[k] = std::lower_bound(ids.begin(), ids.end(), mask.data[k]) - ids.begin() + 1;
  write_p2(path, mask.width, mask.height, static_cast<int>(std::clamp<std::size_t>(ids.size(), 1, 65535)), v);
}

void write_density_csv(const DensityMap& map, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  char buf[32];
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", map.at(r, c));
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

DensityMap read_density_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  DensityMap m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int cols = 0;
    while (std::getline(ss, cell, ',')) {
      m.data.push_back(std::strtod(cell.c_str(), nullptr));
      ++cols;
    }
    if (m.height == 0) m.width = cols;
    else if (cols != m.width) throw Error(ErrorCode::Parse, "ragged density CSV");
    ++m.height;
  }
  return m;
}

}  // namespace binpick
