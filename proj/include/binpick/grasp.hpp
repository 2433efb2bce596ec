#pragma once

// Fine-stage antipodal grasp detection on instance masks.
//
// Per instance: trace the contour, optionally jitter it (perception noise),
// estimate the planar orientation by PCA, cast rays from the centroid along
// directions nearly perpendicular to the major axis, and turn each ray pair
// into a two-contact grasp. Fingertip footprints are then checked for pixel
// clearance; only isolated items survive.
//
// Grasp coordinates are continuous pixel coordinates (u = column, v = row).

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "binpick/geometry.hpp"
#include "binpick/world.hpp"

namespace binpick {

struct Grasp {
  Vec2 s1;  // contacts, ordered so that v1 < v2, or v1 == v2 and u1 < u2
  Vec2 s2;
  Vec2 zeta;
  double theta = 0.0;  // [0, π)
  double width_px = 0.0;
  int item_id = 0;
  int category = 0;
  double pressure = 0.0;
  int candidate = 0;  // index of the ray direction that produced it
};

struct GraspParams {
  double cos_tol = 0.1;
  int directions = 8;
  /// Pixel-test radius is the fingertip radius plus this margin, so pixel
  /// clearance implies clearance of the true geometry.
  double check_margin_px = 2.0;
  /// Extra distance between contact and fingertip footprint so the target's
  /// own staircase boundary never intrudes.
  double standoff_px = 1.0;
};

/// Builds a grasp from two contacts: midpoint center, angle of the contact
/// line to the image x-axis (acos form, folded into [0, π)), and width.
Grasp make_grasp(Vec2 a, Vec2 b);

struct Fingertips {
  Vec2 first;   // beyond s1, pixel coordinates
  Vec2 second;  // beyond s2
  double radius_px = 0.0;  // pixel-test radius
};

Fingertips fingertip_footprints(const Grasp& g, const RasterFrame& frame, const Gripper& gripper, const GraspParams& params);

/// Every candidate contact pair the detector considers, before filtering.
std::vector<Grasp> grasp_candidates(const RasterFrame& frame, const Gripper& gripper, double contour_jitter_sigma,
                                    std::uint64_t seed, const GraspParams& params = {});

/// True iff both fingertip footprints are inside the frame and cover no labeled
/// pixel, and the corridor the fingers close along holds no pixel of another item.
bool collision_check(const RasterFrame& frame, const Grasp& grasp, const Gripper& gripper, const GraspParams& params = {});

/// Pixels of other items near the grasp (lower is more isolated).
int clutter_score(const RasterFrame& frame, const Grasp& grasp, const Gripper& gripper, const GraspParams& params = {});

/// Feasible grasps sorted by ascending clutter score, then item id, then tilt from the
/// minor axis, then candidate index.
std::vector<Grasp> detect_grasps(const RasterFrame& frame, const Gripper& gripper, double contour_jitter_sigma,
                                 std::uint64_t seed, const GraspParams& params = {});

/// Linear map: width 0 -> 1 (fully closed), max_open_width -> 0.
double pressure_from_width(double width_mm, const Gripper& gripper);

enum class PickResult { Success, Collision, MultiCapture, NothingEnclosed };

struct PickOutcome {
  PickResult result = PickResult::NothingEnclosed;
  int item_id = 0;  // the enclosed item on success
  std::vector<int> enclosed;
};

/// Executes a grasp against the true world geometry of items at `loc`.
/// Fingertip disks (true radius) must touch no item; then exactly one item
/// must lie in the band the fingers sweep while closing.
PickOutcome execute_grasp(const WorldState& world, Location loc, const RasterFrame& frame, const Grasp& grasp,
                          const Gripper& gripper, const GraspParams& params = {});

void write_grasps_csv(std::span<const Grasp> grasps, const std::filesystem::path& path);

}  // namespace binpick
