#pragma once

// Seeded bin scenarios and the scene file format.
//
// Scene JSON (canonical form written by save_scene):
//   {
//     "seed": <uint64>,
//     "workspace": {"bin":   {"min": [x, y], "max": [x, y]},
//                   "tray":  {...}, "place": {...}},
//     "items": [{"id": 1, "category": 1,
//                "shape": {"type": "disk", "radius": r}
//                       | {"type": "polygon", "vertices": [[x, y], ...]},
//                "pose": {"x": x, "y": y, "theta": t},
//                "location": "in_bin" | "on_tray" | "placed"}]
//   }
// "location" is optional on load (default "in_bin").

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "binpick/world.hpp"

namespace binpick {

enum class ShapeKind { Disk, Polygon, Mixed };

ShapeKind parse_shape_kind(std::string_view name);
std::string_view to_string(ShapeKind kind);

struct SceneParams {
  double size_min = 2.5;  // disk radius / polygon circumradius, mm
  double size_max = 4.0;
  /// Area fraction of the heap, a uniform disk around the bin center; placement jams above ~0.4.
  double pile_packing = 0.3;
  int max_attempts = 1000;
  double wall_margin = 1.0;
};

/// Random item shape and its category (1 disk, 2 hexagon, 3 bar).
std::pair<Shape, int> sample_shape(ShapeKind kind, const SceneParams& params, Rng& rng);

/// `objects` non-overlapping items piled around the bin center.
WorldState generate_scene(int objects, ShapeKind kind, std::uint64_t seed, const Workspace& workspace,
                          const SceneParams& params);

nlohmann::json scene_to_json(const WorldState& world);
WorldState scene_from_json(const nlohmann::json& doc);

void save_scene(const WorldState& world, const std::filesystem::path& path);
WorldState load_scene(const std::filesystem::path& path);

std::string_view to_string(Location loc);
Location parse_location(std::string_view name);

}  // namespace binpick
