#include "binpick/scene.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "binpick/error.hpp"

namespace binpick {

using nlohmann::json;

ShapeKind parse_shape_kind(std::string_view name) {
  if (name == "disk") return ShapeKind::Disk;
  if (name == "polygon") return ShapeKind::Polygon;
  if (name == "mixed") return ShapeKind::Mixed;
  throw Error(ErrorCode::InvalidArgument, "unknown shape kind '" + std::string(name) + "'");
}

std::string_view to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Disk: return "disk";
    case ShapeKind::Polygon: return "polygon";
    case ShapeKind::Mixed: return "mixed";
  }
  return "disk";
}

std::string_view to_string(Location loc) {
  switch (loc) {
    case Location::InBin: return "in_bin";
    case Location::OnTray: return "on_tray";
    case Location::Placed: return "placed";
    case Location::Held: return "held";
  }
  return "in_bin";
}

Location parse_location(std::string_view name) {
  if (name == "in_bin") return Location::InBin;
  if (name == "on_tray") return Location::OnTray;
  if (name == "placed") return Location::Placed;
  throw Error(ErrorCode::Parse, "unknown item location '" + std::string(name) + "'");
}

std::pair<Shape, int> sample_shape(ShapeKind kind, const SceneParams& params, Rng& rng) {
  int variant = 0;
  if (kind == ShapeKind::Polygon) variant = 1 + static_cast<int>(rng.index(2));
  if (kind == ShapeKind::Mixed) variant = static_cast<int>(rng.index(3));
  const double size = rng.uniform(params.size_min, params.size_max);
  if (variant == 0) return {Disk{size}, 1};
  ConvexPolygon poly;
  if (variant == 1) {
    for (int k = 0; k < 6; ++k) {
      const double a = k * std::numbers::pi / 3.0;
      poly.vertices.push_back({size * std::cos(a), size * std::sin(a)});
    }
    return {poly, 2};
  }
  // Bar: long axis along body x, corners on the circumcircle.
  const double aspect = rng.uniform(0.35, 0.6);
  const double half_len = size / std::sqrt(1.0 + aspect * aspect);
  const double half_wid = aspect * half_len;
  poly.vertices = {{-half_len, -half_wid}, {half_len, -half_wid}, {half_len, half_wid}, {-half_len, half_wid}};
  return {poly, 3};
}

WorldState generate_scene(int objects, ShapeKind kind, std::uint64_t seed, const Workspace& workspace,
                          const SceneParams& params) {
  if (objects < 1) throw Error(ErrorCode::InvalidArgument, "a scene needs at least one object");
  if (!(params.size_min > 0.0 && params.size_min <= params.size_max))
    throw Error(ErrorCode::InvalidArgument, "invalid item size range");
  validate_workspace(workspace);

  WorldState world;
  world.workspace = workspace;
  world.rng_seed = seed;
  Rng rng(derive_seed(seed, {0x7363656e65ULL}));

  std::vector<std::pair<Shape, int>> shapes;
  double total_area = 0.0;
  for (int i = 0; i < objects; ++i) {
    shapes.push_back(sample_shape(kind, params, rng));
    total_area += shape_area(shapes.back().first);
  }
  const double radius = std::sqrt(total_area / (std::numbers::pi * params.pile_packing));
  const Vec2 c = workspace.bin.center();

  for (int i = 0; i < objects; ++i) {
    Item item;
    item.id = i + 1;
    item.shape = shapes[i].first;
    item.category = shapes[i].second;
    item.location = Location::InBin;
    const double r = bounding_radius(item.shape) + params.wall_margin;
    const Rect area = workspace.bin.inset(r);
    bool ok = false;
    for (int attempt = 0; attempt < params.max_attempts && !ok; ++attempt) {
      const double rho = radius * std::sqrt(rng.uniform(0.0, 1.0));
      const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
      item.pose = Pose2({c.x + rho * std::cos(phi), c.y + rho * std::sin(phi)}, rng.uniform(0.0, 2.0 * std::numbers::pi));
      if (!area.contains(item.pose.position)) continue;
      const ConvexShape s = world_shape(item);
      const Rect b = bounds(s);
      ok = true;
      for (const Item& other : world.items) {
        const Vec2 d = other.pose.position - item.pose.position;
        const double reach = bounding_radius(other.shape) + (b.max.x - b.min.x);
        if (d.norm2() > reach * reach) continue;
        if (penetration(s, world_shape(other))) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) throw Error(ErrorCode::PlacementFailure, "could not place object " + std::to_string(item.id));
    world.items.push_back(std::move(item));
  }
  return world;
}

// --- JSON ------------------------------------------------------------------------

namespace {

json rect_to_json(const Rect& r) { return {{"min", {r.min.x, r.min.y}}, {"max", {r.max.x, r.max.y}}}; }

Rect rect_from_json(const json& j) {
  const auto& mn = j.at("min");
  const auto& mx = j.at("max");
  return {{mn.at(0).get<double>(), mn.at(1).get<double>()}, {mx.at(0).get<double>(), mx.at(1).get<double>()}};
}

json shape_to_json(const Shape& s) {
  if (const auto* d = std::get_if<Disk>(&s)) return {{"type", "disk"}, {"radius", d->radius}};
  json verts = json::array();
  for (const Vec2& v : std::get<ConvexPolygon>(s).vertices) verts.push_back({v.x, v.y});
  return {{"type", "polygon"}, {"vertices", verts}};
}

Shape shape_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "disk") return Disk{j.at("radius").get<double>()};
  if (type == "polygon") {
    ConvexPolygon p;
    for (const auto& v : j.at("vertices")) p.vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
    return p;
  }
  throw Error(ErrorCode::Parse, "unknown shape type '" + type + "'");
}

}  // namespace

json scene_to_json(const WorldState& world) {
  json items = json::array();
  for (const Item& it : world.items) {
    if (it.location == Location::Held) throw Error(ErrorCode::InvalidArgument, "cannot serialize held items");
    items.push_back({{"id", it.id},
                     {"category", it.category},
                     {"shape", shape_to_json(it.shape)},
                     {"pose", {{"x", it.pose.position.x}, {"y", it.pose.position.y}, {"theta", it.pose.theta}}},
                     {"location", to_string(it.location)}});
  }
  return {{"seed", world.rng_seed},
          {"workspace",
           {{"bin", rect_to_json(world.workspace.bin)},
            {"tray", rect_to_json(world.workspace.tray)},
            {"place", rect_to_json(world.workspace.place)}}},
          {"items", items}};
}

WorldState scene_from_json(const json& doc) {
  try {
    WorldState w;
    w.rng_seed = doc.at("seed").get<std::uint64_t>();
    const auto& ws = doc.at("workspace");
    w.workspace.bin = rect_from_json(ws.at("bin"));
    w.workspace.tray = rect_from_json(ws.at("tray"));
    w.workspace.place = rect_from_json(ws.at("place"));
    validate_workspace(w.workspace);
    std::set<int> ids;
    for (const auto& j : doc.at("items")) {
      Item it;
      it.id = j.at("id").get<int>();
      it.category = j.at("category").get<int>();
      it.shape = shape_from_json(j.at("shape"));
      validate_shape(it.shape);
      const auto& p = j.at("pose");
      it.pose = Pose2({p.at("x").get<double>(), p.at("y").get<double>()}, p.at("theta").get<double>());
      it.location = j.contains("location") ? parse_location(j.at("location").get<std::string>()) : Location::InBin;
      if (!ids.insert(it.id).second) throw Error(ErrorCode::Parse, "duplicate item id " + std::to_string(it.id));
      w.items.push_back(std::move(it));
    }
    std::sort(w.items.begin(), w.items.end(), [](const Item& a, const Item& b) { return a.id < b.id; });
    return w;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed scene: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Parse) throw;
    throw Error(ErrorCode::Parse, e.what());
  }
}

void save_scene(const WorldState& world, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << scene_to_json(world).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

WorldState load_scene(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
  return scene_from_json(doc);
}

}  // namespace binpick
