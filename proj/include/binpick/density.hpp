#pragma once

// Object density maps for rough grasp siting.
//
// The learned density regressor is replaced by the ground-truth generation
// pipeline (dots at item centroids, convolved with a truncated Gaussian)
// followed by a parameterized perception noise model. Density is measured in
// objects per pixel, so a map sums to the number of objects it represents.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "binpick/geometry.hpp"
#include "binpick/world.hpp"

namespace binpick {

struct DotMap {
  int width = 0;
  int height = 0;
  std::vector<Pixel> dots;
  std::vector<std::int32_t> ids;  // item id per dot
};

using DensityMap = Image<double>;

struct EstimatorNoise {
  double dot_jitter_sigma = 0.0;   // px
  double pixel_noise_sigma = 0.0;  // objects per pixel
  double dropout_prob = 0.0;
};

void validate_noise(const EstimatorNoise& noise);

/// One dot per instance at the rounded centroid of its labeled pixels, ordered by id.
DotMap make_dot_map(const RasterFrame& frame);

/// Each dot spreads a Gaussian truncated at 3 sigma and renormalized to unit mass.
DensityMap dot_to_density(const DotMap& dots, double sigma);

/// Ground-truth pipeline on a perturbed dot map plus clamped per-pixel noise.
DensityMap estimate_density(const RasterFrame& frame, const EstimatorNoise& noise, double sigma, std::uint64_t seed);

/// Mean squared error over all pixels.
double mse(const DensityMap& predicted, const DensityMap& truth);

/// Calibration reports MSE on maps scaled to objects per 1000 px.
inline constexpr double kCalibrationDensityScale = 1e3;
/// Expected calibrated MSE of the default estimator noise over the standard scenes.
inline constexpr double kCalibratedMse = 0.12;

/// MSE of `predicted` against `truth` after scaling both by kCalibrationDensityScale.
double calibrated_mse(const DensityMap& predicted, const DensityMap& truth);

double total_mass(const DensityMap& map);

/// World position of the densest capture window (box blur of the given
/// diameter, then argmax; ties go to the smallest row-major index), clamped
/// into `bin`.
Vec2 select_rough_grasp(const DensityMap& density, const RasterFrame& frame, double capture_diameter_mm,
                        const Rect& bin);

/// Scale applied to density values in PGM exports.
inline constexpr double kPgmScale = 1e4;

/// Plain-text PGM (P2), values round(v * 1e4) clamped to [0, 65535].
void write_density_pgm(const DensityMap& map, const std::filesystem::path& path);
/// Row-major CSV with round-trip precision.
void write_density_csv(const DensityMap& map, const std::filesystem::path& path);
DensityMap read_density_csv(const std::filesystem::path& path);
/// Dot map as a P2 image (dots = maxval 1).
void write_dot_pgm(const DotMap& dots, const std::filesystem::path& path);
/// Instance mask as a P2 image: background 0, the k-th smallest instance id gets gray level k.
void write_mask_pgm(const LabelImage& mask, const std::filesystem::path& path);

}  // namespace binpick
