#pragma once

// Scene state, simulated sensing and the quasistatic push/grab dynamics.
//
// Dynamics model: items translate only and never rotate. A push sweeps the
// gripper footprint from start to end; every item the swept region overlaps is
// moved by its minimal translation out of that region. Item-item overlaps are
// then removed by iterative pairwise projection and items are clamped inside
// the walls of the acting region. There is no friction and no inertia.

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "binpick/geometry.hpp"
#include "binpick/random.hpp"

namespace binpick {

struct Disk {
  double radius = 0.0;  // mm
  bool operator==(const Disk&) const = default;
};

/// Convex polygon in the item's body frame, counter-clockwise.
struct ConvexPolygon {
  std::vector<Vec2> vertices;
  bool operator==(const ConvexPolygon&) const = default;
};

using Shape = std::variant<Disk, ConvexPolygon>;

inline constexpr double kMinDiskRadius = 0.6;
inline constexpr double kMaxDiskRadius = 12.5;

/// Throws InvalidArgument when the shape violates its invariants.
void validate_shape(const Shape& shape);

/// Radius of the smallest origin-centered circle containing the shape.
double bounding_radius(const Shape& shape);

/// Largest body extent (2 * bounding radius).
double max_diameter(const Shape& shape);

double shape_area(const Shape& shape);

enum class Location { InBin, OnTray, Placed, Held };

struct Item {
  int id = 0;
  int category = 1;
  Shape shape;
  Pose2 pose;
  Location location = Location::InBin;
};

ConvexShape world_shape(const Item& item);

struct Workspace {
  Rect bin{{0.0, 0.0}, {300.0, 300.0}};
  Rect tray{{350.0, 0.0}, {550.0, 200.0}};
  Rect place{{600.0, 0.0}, {700.0, 100.0}};

  const Rect& region(Location loc) const;
  bool operator==(const Workspace&) const = default;
};

void validate_workspace(const Workspace& ws);

struct Gripper {
  double finger_footprint_radius = 2.0;
  double max_open_width = 40.0;
  double closed_body_length = 10.0;
  double closed_body_width = 4.0;
  double capture_radius = 7.0;  // half the default rough-grab opening
  double blade_width = 12.0;
};

void validate_gripper(const Gripper& g);

struct FingerOpen {
  Vec2 at;
  UnitVec2 axis;
  double opening = 0.0;  // mm between the fingers once fully open
};

struct PushAction {
  Vec2 start;
  Vec2 end;
  double gripper_theta = 0.0;
  std::optional<FingerOpen> finger_open;
};

struct WorldState {
  std::vector<Item> items;  // sorted by id
  Workspace workspace;
  std::uint64_t rng_seed = 0;
  std::uint64_t step_counter = 0;

  const Item* find(int id) const;
  Item* find(int id);
  std::size_t count(Location loc) const;
  std::vector<int> ids_at(Location loc) const;
};

/// Fresh stream for the next stochastic world operation; advances step_counter.
Rng next_rng(WorldState& world, std::uint64_t tag);

struct RasterFrame {
  int width = 0;
  int height = 0;
  double mm_per_px = 1.0;
  Vec2 origin;  // world position of the center of pixel (0, 0)
  LabelImage instance_mask;
  LabelImage semantic_mask;

  /// Continuous pixel coordinates (x = col, y = row) to world mm.
  Vec2 to_world(Vec2 px) const { return origin + px * mm_per_px; }
  Vec2 to_pixel(Vec2 world) const { return (world - origin) / mm_per_px; }
};

/// Labels each pixel with the item covering its center. Held items are not sensed.
RasterFrame rasterize(const WorldState& world, const Rect& region, double mm_per_px);

struct DynamicsParams {
  int max_iterations = 100;
  double tolerance = 1e-6;  // mm
};

struct PushReport {
  std::vector<int> moved;    // ids displaced by the push
  std::vector<int> clamped;  // ids that hit a region wall
};

/// Footprint extents (along motion, across motion) for an action. A heading
/// within 45° of the motion presents the closed body; otherwise the gripper
/// plows broadside with its blade.
std::pair<double, double> push_footprint(const PushAction& action, const Gripper& gripper);

/// Gripper footprint at a single position.
Polygon gripper_footprint_at(Vec2 position, const PushAction& action, const Gripper& gripper);

/// Region swept by the footprint along the action path.
Polygon swept_footprint(const PushAction& action, const Gripper& gripper);

WorldState apply_push(const WorldState& world, const PushAction& action, const Gripper& gripper,
                      const DynamicsParams& params = {}, PushReport* report = nullptr);

struct GrabResult {
  WorldState world;
  std::vector<int> captured;
};

/// Captures every in-bin item whose center lies within open_width / 2 of location.
GrabResult grab_at(const WorldState& world, Vec2 location, double open_width, const Gripper& gripper);

struct PlacementParams {
  double p_contact = 0.5;
  /// Contacting clusters leave a gap in [0, fraction * max diameter] to the attachment neighbor.
  double contact_gap_fraction = 0.2;
  int max_attempts = 1000;
  double wall_margin = 1.0;
};

WorldState place_on_tray(const WorldState& world, std::span<const int> held, const PlacementParams& params);

/// Places `ids` as one contacting cluster grown around `anchor` inside `region`.
/// Each new item touches (gap <= contact_gap_fraction * max diameter) a random earlier member.
void place_cluster(WorldState& world, std::span<const int> ids, Location loc, Vec2 anchor, Rng& rng,
                   const PlacementParams& params);

WorldState reflow(const WorldState& world, const PlacementParams& params);

/// Tags a picked item Placed and moves it to the next free slot of the place region.
void place_item(WorldState& world, int id);

/// Largest pairwise penetration among items sharing a location (0 when none).
double max_interpenetration(const WorldState& world);

bool inside_region(const Item& item, const Rect& region, double tolerance = 1e-9);

}  // namespace binpick
